"""Command-line entry point; every subsystem is its own subcommand.

Exit codes: 0 success, 1 partial task failures, 2 configuration or
environment errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

from .config import ConfigError, HarnessConfig, RunConfig, load_config
from .dedup import (
    DEFAULT_K,
    DEFAULT_SHINGLE_WIDTH,
    DEFAULT_THRESHOLD,
    filter_function,
    read_signature_stream,
    scan_duplicates,
    shingles,
    signature,
    write_signature_stream,
)
from .ingest import FORMATS, UnreadableFile, export_tasks, ingest_tasks
from .lexer import LexError
from .metrics import compute_metrics
from .llm import backend_for, complete, extract_code, render_generation_prompt
from .model import Candidate, ExtractionMethod, GenerationParams
from .pipeline import recount_summary, run_pipeline
from .reports import REPORT_KINDS, report
from .sandbox import ExecutionOutcome, Overall, RawExecution, Verdict, set_max_children
from .classifier import UnclassifiableDiagnostic, classify_primary, classify_secondary
from .store import EmptyRun, NotFound, RunStore

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bugscope",
        description="Evaluate, triage, and repair machine-generated code.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", type=Path, default=None,
                       help="YAML config with profiles/endpoints/reviewers")
        p.add_argument("--store-root", type=Path, default=None,
                       help="override the results directory")

    p = sub.add_parser("ingest", help="normalize benchmark files into the unified task schema")
    p.add_argument("--tasks", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, required=True)
    p.add_argument("--drop-image-tasks", action="store_true",
                   help="drop tasks whose description carries [image] placeholders")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("generate", help="generate candidates for tasks via a model endpoint")
    add_config(p)
    p.add_argument("--tasks", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="unified")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", help="full pipeline: generate/replay, evaluate, classify, record")
    add_config(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--tasks", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="unified")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--candidates", type=Path, default=None,
                   help="replay candidates from a JSONL file instead of generating")
    p.add_argument("--model-id", default=None)
    p.add_argument("--profile", default="python")
    p.add_argument("--repair", action="store_true")
    p.add_argument("--max-iterations", type=int, default=2)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop-image-tasks", action="store_true")
    p.add_argument("--suggest-causes", action="store_true")

    p = sub.add_parser("evaluate", help="evaluate provided candidates (no model calls)")
    add_config(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--tasks", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="unified")
    p.add_argument("--candidates", type=Path, required=True)
    p.add_argument("--model-id", default=None)
    p.add_argument("--profile", default="python")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--drop-image-tasks", action="store_true")

    p = sub.add_parser("classify", help="classify one captured diagnostic")
    p.add_argument("--stderr-file", type=Path, required=True)
    p.add_argument("--verdict", choices=[v.value for v in Verdict
                                         if v is not Verdict.PASS],
                   default="exception")
    p.add_argument("--code-file", type=Path, default=None)

    p = sub.add_parser("metrics", help="compute code metrics for a snippet")
    p.add_argument("--code-file", type=Path, required=True)

    p = sub.add_parser("repair", help="run the self-critique loop on a run's failures")
    add_config(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--tasks", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="unified")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--profile", default="python")
    p.add_argument("--max-iterations", type=int, default=2)

    p = sub.add_parser("filter", help="screen candidate benchmark functions")
    p.add_argument("--functions", type=Path, required=True,
                   help="JSONL with id and code fields")

    p = sub.add_parser("dedup", help="MinHash signing and duplicate scanning")
    dedup_sub = p.add_subparsers(dest="dedup_command", required=True)
    ps = dedup_sub.add_parser("sign", help="sign functions into a signature stream")
    ps.add_argument("--functions", type=Path, required=True)
    ps.add_argument("--out", type=Path, required=True)
    ps.add_argument("--k", type=int, default=DEFAULT_K)
    ps.add_argument("--width", type=int, default=DEFAULT_SHINGLE_WIDTH)
    ps.add_argument("--seed", type=int, default=0)
    pc = dedup_sub.add_parser("scan", help="scan candidates against a corpus")
    pc.add_argument("--functions", type=Path, required=True)
    pc.add_argument("--corpus", type=Path, default=None)
    pc.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    pc.add_argument("--k", type=int, default=DEFAULT_K)
    pc.add_argument("--width", type=int, default=DEFAULT_SHINGLE_WIDTH)
    pc.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="emit a report table for a run")
    add_config(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--kind", choices=REPORT_KINDS, required=True)
    p.add_argument("--out-format", choices=("csv", "text"), default="csv")

    p = sub.add_parser("export", help="export the label records of a run")
    add_config(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--server", default=None,
                   help="fetch from a running review service instead of local files")

    p = sub.add_parser("serve", help="serve the review API and triage UI")
    add_config(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--ui-dir", type=Path, default=None)

    return parser


def _store(args, harness: HarnessConfig) -> RunStore:
    root = args.store_root if args.store_root else harness.store_root
    return RunStore(root)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnreadableFile as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotFound, EmptyRun) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _dispatch(args) -> int:
    command = args.command
    if command == "ingest":
        return _cmd_ingest(args)
    if command == "generate":
        return _cmd_generate(args)
    if command in ("run", "evaluate"):
        return _cmd_run(args, repair=getattr(args, "repair", False))
    if command == "classify":
        return _cmd_classify(args)
    if command == "metrics":
        return _cmd_metrics(args)
    if command == "repair":
        return _cmd_repair(args)
    if command == "filter":
        return _cmd_filter(args)
    if command == "dedup":
        return _cmd_dedup(args)
    if command == "report":
        return _cmd_report(args)
    if command == "export":
        return _cmd_export(args)
    if command == "serve":
        return _cmd_serve(args)
    raise ConfigError(f"unknown command {command!r}")


def _cmd_ingest(args) -> int:
    result = ingest_tasks(args.tasks, args.format, drop_flagged=args.drop_image_tasks)
    payload = export_tasks(result.tasks) if result.tasks else ""
    if args.out:
        args.out.write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    for error in result.errors:
        print(f"rejected {error.record}: {'; '.join(error.problems)}", file=sys.stderr)
    if result.flagged:
        print(f"flagged [image] placeholders: {', '.join(result.flagged)}",
              file=sys.stderr)
    print(f"ingested {len(result.tasks)} tasks, rejected {len(result.errors)}",
          file=sys.stderr)
    return EXIT_PARTIAL if result.errors else EXIT_OK


def _cmd_generate(args) -> int:
    harness = load_config(args.config)
    endpoint = harness.endpoint(args.endpoint)
    backend = backend_for(endpoint)
    result = ingest_tasks(args.tasks, args.format)
    params = GenerationParams()
    lines = []
    failures = 0
    for task in sorted(result.tasks, key=lambda t: t.id):
        response = complete(backend, render_generation_prompt(task), params)
        extraction = extract_code(response.text)
        if extraction.method is ExtractionMethod.FAILED:
            failures += 1
        lines.append(json.dumps({
            "task_id": task.id,
            "model_id": endpoint.id,
            "code": extraction.code,
            "extraction": extraction.method.value,
            "raw_response": response.text,
        }, sort_keys=True, ensure_ascii=False))
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"generated {len(lines)} candidates ({failures} extraction failures)",
          file=sys.stderr)
    return EXIT_PARTIAL if failures or result.errors else EXIT_OK


def _cmd_run(args, repair: bool) -> int:
    harness = load_config(args.config)
    if args.store_root:
        harness.store_root = args.store_root
    set_max_children(max(4, args.workers * 2))
    config = RunConfig(
        run_id=args.run_id,
        tasks_path=args.tasks,
        tasks_format=args.format,
        profile_name=args.profile,
        endpoint_id=getattr(args, "endpoint", None),
        candidates_path=args.candidates,
        model_id=args.model_id,
        repair=repair,
        max_iterations=getattr(args, "max_iterations", 2),
        workers=args.workers,
        seed=getattr(args, "seed", 0),
        drop_flagged=args.drop_image_tasks,
        suggest_causes=getattr(args, "suggest_causes", False),
    )
    summary = run_pipeline(config, harness)
    print(json.dumps(summary.to_dict(), indent=2))
    return EXIT_PARTIAL if summary.task_errors else EXIT_OK


def _cmd_classify(args) -> int:
    from .model import LanguageProfile

    profile = LanguageProfile()
    stderr = args.stderr_file.read_text(encoding="utf-8")
    code = args.code_file.read_text(encoding="utf-8") if args.code_file else ""
    verdict = Verdict(args.verdict)
    raw = RawExecution(exit_status=0 if verdict is Verdict.WRONG_OUTPUT else 1,
                       stdout="", stderr=stderr, wall_time=0.0,
                       timed_out=verdict is Verdict.TIMEOUT)
    outcome = ExecutionOutcome(per_test=(("t0", verdict),), overall=Overall.FAIL,
                               first_failure=raw, first_failure_test_id="t0")
    try:
        primary = classify_primary(outcome, profile)
    except UnclassifiableDiagnostic as exc:
        print(json.dumps({"primary": None, "error": str(exc)}))
        return EXIT_PARTIAL
    suggestion = classify_secondary(outcome, code, primary, profile)
    print(json.dumps({
        "primary": primary.primary.value,
        "timeout": primary.timeout,
        "label_path": suggestion.label.path,
        "confidence": suggestion.confidence,
        "rationale": suggestion.rationale,
    }, sort_keys=True))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    code = args.code_file.read_text(encoding="utf-8")
    print(json.dumps(compute_metrics(code).to_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_repair(args) -> int:
    from .repair import run_repair
    from .store import RunRecord

    harness = load_config(args.config)
    if args.store_root:
        harness.store_root = args.store_root
    store = _store(args, harness)
    endpoint = harness.endpoint(args.endpoint)
    backend = backend_for(endpoint)
    profile = harness.profile(args.profile)

    tasks = {t.id: t for t in ingest_tasks(args.tasks, args.format).tasks}
    repaired = failures = 0
    for record in store.records(args.run_id):
        if record.candidate.iteration != 0:
            continue
        if record.outcome is None or record.outcome.overall is Overall.PASS:
            continue
        task = tasks.get(record.task_id)
        if task is None:
            failures += 1
            continue
        trace = run_repair(task, record.candidate, backend, profile,
                           harness.limits, max_iterations=args.max_iterations,
                           initial_outcome=record.outcome)
        ref = store.append_trace(args.run_id, trace)
        for step in trace.steps[1:]:
            store.record_result(RunRecord(
                run_id=args.run_id, task_id=record.task_id,
                model_id=record.model_id, candidate=step.candidate,
                outcome=step.outcome, label=step.label,
                metrics=compute_metrics(step.candidate.code) if step.candidate.code else None,
                repair_trace_ref=ref, task_excerpt=record.task_excerpt,
            ))
        if trace.terminal.value == "fixed":
            repaired += 1
    print(json.dumps({"repaired": repaired, "unmatched_tasks": failures}))
    return EXIT_PARTIAL if failures else EXIT_OK


def _iter_functions(path: Path):
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            record = json.loads(line)
            yield str(record["id"]), record["code"]


def _cmd_filter(args) -> int:
    for fn_id, code in _iter_functions(args.functions):
        try:
            verdict = filter_function(code)
        except LexError as exc:
            print(json.dumps({"id": fn_id, "error": str(exc)}))
            continue
        print(json.dumps({"id": fn_id, "keep": verdict.keep,
                          "reasons": list(verdict.reasons)}, sort_keys=True))
    return EXIT_OK


def _cmd_dedup(args) -> int:
    if args.dedup_command == "sign":
        entries = []
        for fn_id, code in _iter_functions(args.functions):
            entries.append((fn_id, signature(shingles(code, args.width),
                                             k=args.k, seed=args.seed)))
        count = write_signature_stream(args.out, entries, k=args.k,
                                       shingle_width=args.width, seed=args.seed)
        print(f"signed {count} functions -> {args.out}", file=sys.stderr)
        return EXIT_OK

    candidates = []
    for fn_id, code in _iter_functions(args.functions):
        candidates.append((fn_id, signature(shingles(code, args.width),
                                            k=args.k, seed=args.seed)))
    corpus = read_signature_stream(args.corpus) if args.corpus else []
    hits = scan_duplicates(candidates, corpus, threshold=args.threshold)
    for cand_id, other_id, estimate in hits:
        print(json.dumps({"candidate": cand_id, "match": other_id,
                          "estimate": round(estimate, 4)}, sort_keys=True))
    print(f"{len(hits)} pairs at threshold {args.threshold}", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    harness = load_config(args.config)
    store = _store(args, harness)
    table = report(store, args.run_id, args.kind)
    sys.stdout.write(table.to_csv() if args.out_format == "csv" else table.to_text())
    return EXIT_OK


def _cmd_export(args) -> int:
    if args.server:
        import httpx

        response = httpx.get(f"{args.server.rstrip('/')}/runs/{args.run_id}/export",
                             timeout=30.0)
        response.raise_for_status()
        sys.stdout.write(response.text)
        return EXIT_OK
    harness = load_config(args.config)
    store = _store(args, harness)
    sys.stdout.write(store.export_labels(args.run_id))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    harness = load_config(args.config)
    store = _store(args, harness)
    ui_dir = args.ui_dir
    if ui_dir is None:
        default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = default_ui if default_ui.exists() else None
    if not harness.reviewers:
        print("warning: no reviewer tokens configured; label writes are open",
              file=sys.stderr)
    app = create_app(store, reviewer_tokens=harness.reviewers, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
