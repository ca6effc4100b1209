"""End-to-end orchestration: ingest, generate or replay candidates,
evaluate, classify, measure, optionally repair, and record everything.

Task-level failures (validation, unclassifiable diagnostics, extraction
failures) are recorded and counted, never fatal. Reruns with the same
run id skip tasks whose initial record already exists, so an
interrupted run resumes where it stopped.

With a mock endpoint the pipeline always processes tasks sequentially in
sorted order: the mock replays responses by request ordinal, and a
stable ordinal-to-task mapping is what makes reruns byte-identical.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .classifier import (
    UnclassifiableDiagnostic,
    classify_primary,
    classify_secondary,
    suggest_root_causes,
)
from .config import ConfigError, HarnessConfig, RunConfig
from .ingest import ingest_tasks
from .llm import (
    Backend,
    MalformedResponse,
    ModelUnavailable,
    backend_for,
    complete,
    extract_code,
    render_generation_prompt,
)
from .metrics import compute_metrics, metrics_delta
from .model import Candidate, ExtractionMethod, GenerationParams, Task
from .repair import RepairTrace, run_repair
from .sandbox import Overall, evaluate_candidate
from .store import DuplicateKey, RunRecord, RunStore, SampleKey
from .taxonomy import BugLabel, PrimaryType, Provenance


@dataclass
class RunSummary:
    run_id: str
    tasks: int = 0
    passes: int = 0
    failures_by_primary: dict = field(default_factory=dict)
    task_errors: list = field(default_factory=list)
    skipped: int = 0
    duration_seconds: float = 0.0

    @property
    def failures(self) -> int:
        return sum(self.failures_by_primary.values())

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "tasks": self.tasks,
            "passes": self.passes,
            "failures_by_primary": dict(sorted(self.failures_by_primary.items())),
            "task_errors": list(self.task_errors),
            "skipped": self.skipped,
            "duration_seconds": round(self.duration_seconds, 3),
        }


def load_candidates(path: str | Path, default_model: str = "replay") -> dict[str, dict]:
    """Candidate replay file: one JSON object per line with task_id, code,
    and an optional model_id."""
    out: dict[str, dict] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        record.setdefault("model_id", default_model)
        out[str(record["task_id"])] = record
    return out


def run_pipeline(config: RunConfig, harness: HarnessConfig) -> RunSummary:
    start = time.monotonic()
    profile = harness.profile(config.profile_name)
    limits = harness.limits

    backend: Optional[Backend] = None
    endpoint = None
    if config.endpoint_id is not None:
        endpoint = harness.endpoint(config.endpoint_id)
        backend = backend_for(endpoint)

    provided: Optional[dict[str, dict]] = None
    if config.candidates_path is not None:
        provided = load_candidates(config.candidates_path,
                                   default_model=config.model_id or "replay")

    model_id = config.model_id or (endpoint.id if endpoint else "replay")

    result = ingest_tasks(config.tasks_path, config.tasks_format,
                          drop_flagged=config.drop_flagged)
    summary = RunSummary(run_id=config.run_id)
    for error in result.errors:
        summary.task_errors.append(f"{error.record}: {'; '.join(error.problems)}")

    store = RunStore(harness.store_root)
    store.create_run(config.run_id, {
        "seed": config.seed,
        "tasks_path": str(config.tasks_path),
        "tasks_format": config.tasks_format,
        "model_id": model_id,
        "profile": config.profile_name,
    })

    tasks = sorted(result.tasks, key=lambda t: t.id)
    sequential = backend is None or endpoint is None or endpoint.is_mock
    workers = 1 if sequential else max(1, config.workers)

    def process(task: Task) -> Optional[dict]:
        task_model = model_id
        if provided is not None and task.id in provided:
            task_model = provided[task.id].get("model_id", model_id)
        key = SampleKey(config.run_id, task.id, task_model, 0)
        if store.has_record(key):
            return {"skipped": True}
        try:
            return _process_task(task, config, store, profile, limits,
                                 backend, model_id, provided)
        except Exception as exc:  # per-task failures never abort the run
            return {"error": f"{task.id}: {type(exc).__name__}: {exc}"}

    if workers == 1:
        outcomes = [process(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(process, tasks))

    for task_outcome in outcomes:
        if task_outcome is None:
            continue
        if task_outcome.get("skipped"):
            summary.skipped += 1
            continue
        if "error" in task_outcome:
            summary.task_errors.append(task_outcome["error"])
            continue
        summary.tasks += 1
        if task_outcome["passed"]:
            summary.passes += 1
        else:
            bucket = task_outcome["bucket"]
            summary.failures_by_primary[bucket] = (
                summary.failures_by_primary.get(bucket, 0) + 1
            )

    summary.duration_seconds = time.monotonic() - start
    return summary


def _process_task(
    task: Task,
    config: RunConfig,
    store: RunStore,
    profile,
    limits,
    backend: Optional[Backend],
    model_id: str,
    provided: Optional[dict[str, dict]] = None,
) -> dict:
    provided_code = None
    params = GenerationParams()
    if provided is not None:
        entry = provided.get(task.id)
        if entry is None:
            return {"error": f"{task.id}: no candidate in replay file"}
        provided_code = entry["code"]
        model_id = entry.get("model_id", model_id)

    excerpt = task.description.strip().replace("\n", " ")[:200]

    if provided_code is not None:
        candidate = Candidate(task_id=task.id, model_id=model_id, iteration=0,
                              raw_response=provided_code, code=provided_code,
                              params=params, extraction=ExtractionMethod.VERBATIM)
    else:
        prompt = render_generation_prompt(task)
        try:
            response = complete(backend, prompt, params)
        except ModelUnavailable as exc:
            return {"error": f"{task.id}: model unavailable: {exc}"}
        extraction = extract_code(response.text)
        candidate = Candidate(task_id=task.id, model_id=model_id, iteration=0,
                              raw_response=response.text, code=extraction.code,
                              params=params, extraction=extraction.method)
        if extraction.method is ExtractionMethod.FAILED:
            record = RunRecord(run_id=config.run_id, task_id=task.id,
                               model_id=model_id, candidate=candidate,
                               outcome=None, label=None, task_excerpt=excerpt)
            _record(store, record)
            return {"passed": False, "bucket": "extraction_failed"}

    outcome = evaluate_candidate(task, candidate.code, profile, limits)

    label: Optional[BugLabel] = None
    rationale: Optional[str] = None
    bucket = "unclassified"
    try:
        primary = classify_primary(outcome, profile)
        if primary.primary is PrimaryType.PASS:
            label = BugLabel(PrimaryType.PASS, provenance=Provenance.AUTOMATIC)
            bucket = "pass"
        else:
            suggestion = classify_secondary(outcome, candidate.code, primary, profile)
            label = suggestion.label
            rationale = suggestion.rationale
            bucket = primary.primary.value
    except UnclassifiableDiagnostic as exc:
        rationale = str(exc)

    metrics = compute_metrics(candidate.code, profile)
    delta = None
    if task.canonical_solution is not None:
        delta = metrics_delta(metrics, compute_metrics(task.canonical_solution, profile))

    causes = None
    if (config.suggest_causes and backend is not None and label is not None
            and label.primary is PrimaryType.FUNCTIONAL):
        try:
            causes = suggest_root_causes(task, candidate.code, outcome, backend).to_dict()
        except (ModelUnavailable, MalformedResponse):
            causes = None

    trace_ref = None
    passed = label is not None and label.primary is PrimaryType.PASS
    trace: Optional[RepairTrace] = None
    if (config.repair and not passed and backend is not None
            and label is not None):
        trace = run_repair(task, candidate, backend, profile, limits,
                           max_iterations=config.max_iterations,
                           initial_outcome=outcome)
        trace_ref = store.append_trace(config.run_id, trace)

    record = RunRecord(
        run_id=config.run_id, task_id=task.id, model_id=model_id,
        candidate=candidate, outcome=outcome, label=label, metrics=metrics,
        delta=delta, suggestion_rationale=rationale, root_causes=causes,
        repair_trace_ref=trace_ref, task_excerpt=excerpt,
    )
    _record(store, record)

    if trace is not None:
        for step in trace.steps[1:]:
            step_metrics = compute_metrics(step.candidate.code, profile) \
                if step.candidate.code else None
            step_delta = None
            if step_metrics and task.canonical_solution is not None:
                step_delta = metrics_delta(
                    step_metrics, compute_metrics(task.canonical_solution, profile))
            _record(store, RunRecord(
                run_id=config.run_id, task_id=task.id, model_id=model_id,
                candidate=step.candidate, outcome=step.outcome, label=step.label,
                metrics=step_metrics, delta=step_delta,
                repair_trace_ref=trace_ref, task_excerpt=excerpt,
            ))
        final_label = trace.steps[-1].label
        passed = final_label is not None and final_label.primary is PrimaryType.PASS
        if not passed:
            last_labeled = next(
                (s.label for s in reversed(trace.steps) if s.label is not None), None)
            bucket = last_labeled.primary.value if last_labeled else "unclassified"

    return {"passed": passed, "bucket": None if passed else bucket}


def _record(store: RunStore, record: RunRecord) -> None:
    try:
        store.record_result(record)
    except DuplicateKey:
        pass  # crash-resume replaying an already-recorded step


def recount_summary(store: RunStore, run_id: str) -> dict:
    """Recount passes/failures straight off the stored records (used to
    cross-check the pipeline's own bookkeeping)."""
    latest: dict[tuple[str, str], RunRecord] = {}
    for record in store.iter_records(run_id):
        key = (record.task_id, record.model_id)
        held = latest.get(key)
        if held is None or record.candidate.iteration > held.candidate.iteration:
            latest[key] = record
    passes = sum(
        1 for r in latest.values()
        if r.outcome is not None and r.outcome.overall is Overall.PASS
    )
    return {"tasks": len(latest), "passes": passes}
