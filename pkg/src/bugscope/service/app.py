"""HTTP surface for the human triage workflow.

Reads are open; label writes require a reviewer token when tokens are
configured (desk deployments with no tokens run open). The taxonomy
endpoint is the single source of truth for what labels a client may
offer: the UI never invents paths.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..store import (
    EmptyRun,
    NotFound,
    RunRecord,
    RunStore,
    SampleKey,
    VersionConflict,
)
from ..taxonomy import (
    InconsistentPath,
    PrimaryType,
    UnknownLabel,
    parse_label_code,
    taxonomy_nodes,
)
from .schemas import (
    DisagreementOut,
    FailurePageOut,
    FailureSummaryOut,
    LabelEventOut,
    LabelStateOut,
    LabelSubmissionIn,
    RootCauseOut,
    RunSummaryOut,
    SampleDetailOut,
    TaxonomyNodeOut,
    TestVerdictOut,
)


class AuthError(RuntimeError):
    pass


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(
    store: RunStore,
    reviewer_tokens: Optional[dict[str, str]] = None,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="bugscope review API", version="0.1.0")
    tokens = reviewer_tokens or {}

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(EmptyRun)
    async def _empty_run(request: Request, exc: EmptyRun):
        return _error(404, "empty_run", str(exc))

    @app.exception_handler(VersionConflict)
    async def _version_conflict(request: Request, exc: VersionConflict):
        return _error(409, "version_conflict", str(exc))

    @app.exception_handler(UnknownLabel)
    async def _unknown_label(request: Request, exc: UnknownLabel):
        return _error(422, "unknown_label", str(exc))

    @app.exception_handler(InconsistentPath)
    async def _inconsistent(request: Request, exc: InconsistentPath):
        return _error(422, "inconsistent_path", str(exc))

    @app.exception_handler(AuthError)
    async def _auth(request: Request, exc: AuthError):
        return _error(401, "auth_required", str(exc))

    def require_reviewer(
        reviewer_id: str,
        token: Optional[str],
    ) -> None:
        if not tokens:
            return  # open desk deployment
        expected = tokens.get(reviewer_id)
        if expected is None or token != expected:
            raise AuthError(f"invalid reviewer token for {reviewer_id!r}")

    # -- taxonomy -----------------------------------------------------------

    @app.get("/taxonomy", response_model=list[TaxonomyNodeOut])
    def get_taxonomy():
        return [TaxonomyNodeOut(code=n.code, name=n.name, level=n.level,
                                parent=n.parent, description=n.description)
                for n in taxonomy_nodes()]

    # -- runs ----------------------------------------------------------------

    @app.get("/runs", response_model=list[RunSummaryOut])
    def list_runs():
        out = []
        for run_id in store.list_runs():
            meta = store.run_meta(run_id)
            count = sum(1 for _ in store.iter_records(run_id))
            out.append(RunSummaryOut(run_id=run_id,
                                     created_at=meta.get("created_at", ""),
                                     record_count=count))
        return out

    def _failure_records(run_id: str) -> list[RunRecord]:
        records = store.records(run_id)  # EmptyRun when none
        failures = [
            r for r in records
            if r.outcome is None or r.outcome.overall.value != "Pass"
        ]
        failures.sort(key=lambda r: (r.task_id, r.model_id, r.candidate.iteration))
        return failures

    def _summary(record: RunRecord) -> FailureSummaryOut:
        state = store.label_state(record.key, record=record)
        return FailureSummaryOut(
            sample_key=str(record.key),
            task_id=record.task_id,
            model_id=record.model_id,
            iteration=record.candidate.iteration,
            task_excerpt=record.task_excerpt,
            label_path=state.label.path if state.label else None,
            primary=state.label.primary.value if state.label else None,
            suggestion_rationale=record.suggestion_rationale,
            confidence=state.label.confidence if state.label else None,
            review_count=state.review_count,
            disagreement=state.disagreement,
            finalized=state.finalized,
        )

    @app.get("/runs/{run_id}/failures", response_model=FailurePageOut)
    def list_failures(
        run_id: str,
        primary: Optional[str] = None,
        secondary: Optional[str] = None,
        model: Optional[str] = None,
        unreviewed_only: bool = False,
        sample_fraction: Optional[float] = Query(default=None, gt=0.0, le=1.0),
        sample_seed: int = 0,
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ):
        summaries = [_summary(r) for r in _failure_records(run_id)]
        if model:
            summaries = [s for s in summaries if s.model_id == model]
        if primary:
            summaries = [s for s in summaries if s.primary == primary]
        if secondary:
            summaries = [
                s for s in summaries
                if s.label_path and (s.label_path == secondary
                                     or s.label_path.startswith(secondary + "/"))
            ]
        if unreviewed_only:
            summaries = [s for s in summaries if s.review_count == 0]
        if sample_fraction is not None:
            # deterministic spot-check subset for re-check audits
            rng = random.Random(sample_seed)
            summaries = [s for s in summaries if rng.random() < sample_fraction]
        total = len(summaries)
        start = (page - 1) * page_size
        return FailurePageOut(items=summaries[start:start + page_size],
                              total=total, page=page, page_size=page_size)

    # -- samples --------------------------------------------------------------

    @app.get("/samples/{sample_key:path}/labels", response_model=list[LabelEventOut])
    def get_label_history(sample_key: str):
        key = _parse_key(sample_key)
        store.get_record(key)  # NotFound when absent
        return [_event(e) for e in store.label_history(key)]

    @app.post("/samples/{sample_key:path}/labels", response_model=LabelStateOut)
    def post_label(
        sample_key: str,
        submission: LabelSubmissionIn,
        x_reviewer_token: Optional[str] = Header(default=None),
    ):
        require_reviewer(submission.reviewer_id, x_reviewer_token)
        key = _parse_key(sample_key)
        label = parse_label_code(submission.label_path)  # UnknownLabel -> 422
        state = store.post_label(
            key, label, submission.reviewer_id, submission.base_version,
            note=submission.note,
            suggestions_revealed=submission.suggestions_revealed,
        )
        return _state(state)

    @app.get("/samples/{sample_key:path}", response_model=SampleDetailOut)
    def get_failure(sample_key: str):
        key = _parse_key(sample_key)
        record = store.get_record(key)
        state = store.label_state(key, record=record)
        history = [_event(e) for e in store.label_history(key)]
        first = record.outcome.first_failure if record.outcome else None
        causes = None
        if record.root_causes:
            causes = [RootCauseOut(**c) for c in record.root_causes.get("causes", [])]
        return SampleDetailOut(
            sample_key=str(key),
            task_id=record.task_id,
            model_id=record.model_id,
            iteration=record.candidate.iteration,
            task_excerpt=record.task_excerpt,
            code=record.candidate.code,
            overall=record.outcome.overall.value if record.outcome else None,
            per_test=[TestVerdictOut(test_id=tid, verdict=v.value)
                      for tid, v in (record.outcome.per_test if record.outcome else ())],
            diagnostics=first.stderr if first else "",
            stdout=first.stdout if first else "",
            metrics=record.metrics.to_dict() if record.metrics else None,
            suggestion_rationale=record.suggestion_rationale,
            root_causes=causes,
            state=_state(state),
            history=history,
        )

    # -- disagreements and export ------------------------------------------------

    @app.get("/runs/{run_id}/disagreements", response_model=list[DisagreementOut])
    def list_disagreements(run_id: str):
        out = []
        for record in _failure_records(run_id):
            state = store.label_state(record.key, record=record)
            if not state.disagreement:
                continue
            history = store.label_history(record.key)
            recent = history[-2:]
            out.append(DisagreementOut(
                sample_key=str(record.key),
                task_id=record.task_id,
                model_id=record.model_id,
                iteration=record.candidate.iteration,
                conflicting_paths=[_path_of(e) for e in recent],
                reviewers=[e["reviewer_id"] for e in recent],
            ))
        return out

    @app.get("/runs/{run_id}/export", response_class=PlainTextResponse)
    def export_labels(run_id: str):
        return store.export_labels(run_id)

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _parse_key(text: str) -> SampleKey:
    try:
        return SampleKey.parse(text)
    except ValueError as exc:
        raise NotFound(str(exc)) from exc


def _event(entry: dict) -> LabelEventOut:
    return LabelEventOut(
        version=entry["version"],
        label_path=_path_of(entry),
        reviewer_id=entry["reviewer_id"],
        note=entry.get("note"),
        suggestions_revealed=entry.get("suggestions_revealed"),
        created_at=entry.get("created_at", ""),
    )


def _path_of(entry: dict) -> str:
    from ..taxonomy import BugLabel
    return BugLabel.from_dict(entry["label"]).path


def _state(state) -> LabelStateOut:
    return LabelStateOut(
        label_path=state.label.path if state.label else None,
        provenance=state.label.provenance.value if state.label else None,
        confidence=state.label.confidence if state.label else None,
        version=state.version,
        review_count=state.review_count,
        reviewers=sorted(set(state.reviewers)),
        disagreement=state.disagreement,
        finalized=state.finalized,
    )
