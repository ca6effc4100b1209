"""Append-only results store: one directory per run holding
line-delimited records, label history, and repair traces.

Nothing is ever rewritten: reviews append new label versions that
reference the original record, so the full audit trail survives. Writes
are funneled through a single in-process lock; readers always see a
consistent prefix of each file.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

from .classifier import MergeResult, merge_review
from .model import Candidate, CodeMetrics, MetricsDelta
from .repair import RepairTrace
from .sandbox import ExecutionOutcome
from .taxonomy import BugLabel, Provenance


class DuplicateKey(ValueError):
    pass


class EmptyRun(LookupError):
    pass


class NotFound(LookupError):
    pass


class VersionConflict(RuntimeError):
    """A review was submitted against a stale label version."""


@dataclass(frozen=True)
class SampleKey:
    run_id: str
    task_id: str
    model_id: str
    iteration: int

    def __str__(self) -> str:
        return f"{self.run_id}::{self.task_id}::{self.model_id}::{self.iteration}"

    @classmethod
    def parse(cls, text: str) -> "SampleKey":
        parts = text.split("::")
        if len(parts) != 4:
            raise ValueError(f"bad sample key {text!r}")
        return cls(parts[0], parts[1], parts[2], int(parts[3]))


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class RunRecord:
    """One evaluated candidate with everything stage one produced."""

    run_id: str
    task_id: str
    model_id: str
    candidate: Candidate
    outcome: Optional[ExecutionOutcome]
    label: Optional[BugLabel]
    metrics: Optional[CodeMetrics] = None
    delta: Optional[MetricsDelta] = None
    suggestion_rationale: Optional[str] = None
    root_causes: Optional[dict] = None
    repair_trace_ref: Optional[str] = None
    task_excerpt: str = ""
    created_at: str = field(default_factory=_utcnow)

    @property
    def key(self) -> SampleKey:
        return SampleKey(self.run_id, self.task_id, self.model_id,
                         self.candidate.iteration)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "task_id": self.task_id,
            "model_id": self.model_id,
            "candidate": self.candidate.to_dict(),
            "outcome": self.outcome.to_dict() if self.outcome else None,
            "label": self.label.to_dict() if self.label else None,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "delta": self.delta.to_dict() if self.delta else None,
            "suggestion_rationale": self.suggestion_rationale,
            "root_causes": self.root_causes,
            "repair_trace_ref": self.repair_trace_ref,
            "task_excerpt": self.task_excerpt,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        delta = d.get("delta")
        return cls(
            run_id=d["run_id"],
            task_id=d["task_id"],
            model_id=d["model_id"],
            candidate=Candidate.from_dict(d["candidate"]),
            outcome=ExecutionOutcome.from_dict(d["outcome"]) if d.get("outcome") else None,
            label=BugLabel.from_dict(d["label"]) if d.get("label") else None,
            metrics=CodeMetrics.from_dict(d["metrics"]) if d.get("metrics") else None,
            delta=MetricsDelta(**delta) if delta else None,
            suggestion_rationale=d.get("suggestion_rationale"),
            root_causes=d.get("root_causes"),
            repair_trace_ref=d.get("repair_trace_ref"),
            task_excerpt=d.get("task_excerpt", ""),
            created_at=d.get("created_at", ""),
        )


@dataclass(frozen=True)
class LabelState:
    """Current review status of one sample, derived from the record's
    automatic label plus the appended human history."""

    label: Optional[BugLabel]
    version: int
    review_count: int
    reviewers: tuple[str, ...]
    disagreement: bool
    finalized: bool


class RunStore:
    """File-backed store rooted at one directory, one subdirectory per run."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._lock = threading.Lock()
        self._known_keys: dict[str, set[str]] = {}

    # -- runs ---------------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        if not run_id or "/" in run_id or run_id.startswith("."):
            raise ValueError(f"bad run id {run_id!r}")
        return self.root / run_id

    def create_run(self, run_id: str, meta: Optional[dict] = None) -> None:
        run_dir = self.run_dir(run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        marker = run_dir / "run.json"
        if not marker.exists():
            payload = {"run_id": run_id, "created_at": _utcnow(), **(meta or {})}
            marker.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")

    def run_exists(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / "run.json").exists()

    def run_meta(self, run_id: str) -> dict:
        self._require_run(run_id)
        return json.loads((self.run_dir(run_id) / "run.json").read_text(encoding="utf-8"))

    def list_runs(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir()
            if p.is_dir() and (p / "run.json").exists()
        )

    def _require_run(self, run_id: str) -> None:
        if not self.run_exists(run_id):
            raise NotFound(f"run {run_id!r} does not exist")

    # -- records ------------------------------------------------------------

    def record_result(self, record: RunRecord) -> None:
        """Durably append one record; duplicate keys are rejected."""
        self._require_run(record.run_id)
        key = str(record.key)
        with self._lock:
            known = self._load_keys(record.run_id)
            if key in known:
                raise DuplicateKey(key)
            self._append(record.run_id, "records.jsonl", record.to_dict())
            known.add(key)

    def has_record(self, key: SampleKey) -> bool:
        if not self.run_exists(key.run_id):
            return False
        with self._lock:
            return str(key) in self._load_keys(key.run_id)

    def _load_keys(self, run_id: str) -> set[str]:
        if run_id not in self._known_keys:
            self._known_keys[run_id] = {
                str(r.key) for r in self._iter_records_unlocked(run_id)
            }
        return self._known_keys[run_id]

    def iter_records(self, run_id: str) -> Iterator[RunRecord]:
        self._require_run(run_id)
        yield from self._iter_records_unlocked(run_id)

    def _iter_records_unlocked(self, run_id: str) -> Iterator[RunRecord]:
        path = self.run_dir(run_id) / "records.jsonl"
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield RunRecord.from_dict(json.loads(line))

    def records(self, run_id: str) -> list[RunRecord]:
        found = list(self.iter_records(run_id))
        if not found:
            raise EmptyRun(f"run {run_id!r} has no records")
        return found

    def get_record(self, key: SampleKey) -> RunRecord:
        self._require_run(key.run_id)
        for record in self.iter_records(key.run_id):
            if record.key == key:
                return record
        raise NotFound(f"no record for {key}")

    # -- labels ---------------------------------------------------------------

    def post_label(
        self,
        key: SampleKey,
        label: BugLabel,
        reviewer_id: str,
        base_version: int,
        note: Optional[str] = None,
        suggestions_revealed: Optional[bool] = None,
    ) -> LabelState:
        """Append one human review with optimistic version checking."""
        if not reviewer_id:
            raise ValueError("reviewer_id must be non-empty")
        record = self.get_record(key)  # NotFound if absent
        with self._lock:
            history = self._label_history_unlocked(key)
            current = history[-1]["version"] if history else 0
            if base_version != current:
                raise VersionConflict(
                    f"base version {base_version} is stale (current {current})"
                )
            entry = {
                "sample_key": str(key),
                "version": current + 1,
                "label": label.with_meta(
                    provenance=Provenance.HUMAN, version=current + 1
                ).to_dict(),
                "reviewer_id": reviewer_id,
                "note": note,
                "suggestions_revealed": suggestions_revealed,
                "created_at": _utcnow(),
            }
            self._append(key.run_id, "labels.jsonl", entry)
        return self.label_state(key, record=record)

    def label_history(self, key: SampleKey) -> list[dict]:
        self._require_run(key.run_id)
        return self._label_history_unlocked(key)

    def _label_history_unlocked(self, key: SampleKey) -> list[dict]:
        path = self.run_dir(key.run_id) / "labels.jsonl"
        if not path.exists():
            return []
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entry = json.loads(line)
                    if entry["sample_key"] == str(key):
                        entries.append(entry)
        return entries

    def label_state(self, key: SampleKey, record: Optional[RunRecord] = None) -> LabelState:
        if record is None:
            record = self.get_record(key)
        history = self._label_history_unlocked(key)
        reviews = [BugLabel.from_dict(e["label"]) for e in history]
        reviewers = tuple(e["reviewer_id"] for e in history)
        version = history[-1]["version"] if history else 0

        if record.label is None and not reviews:
            return LabelState(None, version, 0, reviewers, False, False)
        auto = record.label if record.label is not None else reviews[0]
        merged: MergeResult = merge_review(auto, reviews)
        return LabelState(
            label=merged.label,
            version=version,
            review_count=len(reviews),
            reviewers=reviewers,
            disagreement=merged.disagreement,
            finalized=merged.finalized,
        )

    def export_labels(self, run_id: str) -> str:
        """Line-delimited label export, deterministically ordered."""
        records = self.records(run_id)  # EmptyRun if none
        lines = []
        for record in sorted(records, key=lambda r: (r.task_id, r.model_id,
                                                     r.candidate.iteration)):
            state = self.label_state(record.key, record=record)
            lines.append(json.dumps({
                "task_id": record.task_id,
                "model_id": record.model_id,
                "iteration": record.candidate.iteration,
                "label_path": state.label.path if state.label else None,
                "provenance": state.label.provenance.value if state.label else None,
                "reviewers": sorted(set(state.reviewers)),
                "disagreement": state.disagreement,
                "finalized": state.finalized,
            }, sort_keys=True))
        return "\n".join(lines) + "\n"

    # -- repair traces ---------------------------------------------------------

    def append_trace(self, run_id: str, trace: RepairTrace) -> str:
        self._require_run(run_id)
        ref = f"{trace.task_id}::{trace.model_id}"
        with self._lock:
            self._append(run_id, "traces.jsonl", {"ref": ref, **trace.to_dict()})
        return ref

    def iter_traces(self, run_id: str) -> Iterator[RepairTrace]:
        self._require_run(run_id)
        path = self.run_dir(run_id) / "traces.jsonl"
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield RepairTrace.from_dict(json.loads(line))

    # -- plumbing ----------------------------------------------------------------

    def _append(self, run_id: str, filename: str, payload: dict) -> None:
        path = self.run_dir(run_id) / filename
        line = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
