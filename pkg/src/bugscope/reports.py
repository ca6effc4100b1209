"""Report tables over a run: pass rates, taxonomy distribution, metric
deltas, comment distributions, and bug transitions.

A sample's reported state is its final one: the highest recorded
iteration per (task, model), with the review-aware current label. Box
figures are represented as five-number summaries (min/Q1/median/Q3/max),
which is exactly the data a box plot draws.

All tables are deterministic: fixed row orders, stable float formatting,
no timestamps, so repeated exports are byte-identical.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional

from .repair import FROM_STATES, TO_STATES, transition_matrix
from .store import EmptyRun, RunRecord, RunStore
from .taxonomy import PrimaryType, SECONDARY_CODE

REPORT_KINDS = (
    "pass_rates",
    "taxonomy_distribution",
    "metric_deltas",
    "comment_distribution",
    "transition_matrix",
)

# leaf rows of the taxonomy table, in presentation order
_LEAF_ROWS = (
    "PASS",
    "A.1", "A.2", "A.3",
    "B.1", "B.2", "B.3", "B.4", "B.5",
    "C.1", "C.2", "C.3", "C.4",
    "D",
)
_GROUP_OF = {"A": ("A.1", "A.2", "A.3"),
             "B": ("B.1", "B.2", "B.3", "B.4", "B.5"),
             "C": ("C.1", "C.2", "C.3", "C.4")}


@dataclass(frozen=True)
class ReportTable:
    kind: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        table = [list(self.columns)] + [[_fmt(v) for v in row] for row in self.rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(self.columns))]
        lines = []
        for r, row in enumerate(table):
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
            if r == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.4f}".rstrip("0").rstrip(".") if value == value else "nan"
    return str(value)


def final_records(store: RunStore, run_id: str) -> list[RunRecord]:
    """Latest-iteration record per (task, model), sorted."""
    latest: dict[tuple[str, str], RunRecord] = {}
    for record in store.records(run_id):
        key = (record.task_id, record.model_id)
        held = latest.get(key)
        if held is None or record.candidate.iteration > held.candidate.iteration:
            latest[key] = record
    return [latest[k] for k in sorted(latest)]


def report(store: RunStore, run_id: str, kind: str) -> ReportTable:
    if kind == "pass_rates":
        return _pass_rates(store, run_id)
    if kind == "taxonomy_distribution":
        return _taxonomy_distribution(store, run_id)
    if kind == "metric_deltas":
        return _metric_deltas(store, run_id)
    if kind == "comment_distribution":
        return _comment_distribution(store, run_id)
    if kind == "transition_matrix":
        return _transitions(store, run_id)
    raise ValueError(f"unknown report kind {kind!r}; expected one of {REPORT_KINDS}")


def _is_pass(record: RunRecord) -> bool:
    return record.outcome is not None and record.outcome.overall.value == "Pass"


def _pass_rates(store: RunStore, run_id: str) -> ReportTable:
    records = final_records(store, run_id)
    by_model: dict[str, list[RunRecord]] = {}
    for record in records:
        by_model.setdefault(record.model_id, []).append(record)
    rows = []
    for model in sorted(by_model):
        group = by_model[model]
        passes = sum(1 for r in group if _is_pass(r))
        rows.append((model, len(group), passes, 100.0 * passes / len(group)))
    return ReportTable("pass_rates", ("model", "tasks", "passes", "pass_rate_pct"),
                       tuple(rows))


def _leaf_bucket(store: RunStore, record: RunRecord) -> str:
    state = store.label_state(record.key, record=record)
    label = state.label
    if label is None:
        return "UNCLASSIFIED"
    if label.primary is PrimaryType.PASS:
        return "PASS"
    if label.secondary is not None:
        return SECONDARY_CODE[label.secondary]
    if label.primary is PrimaryType.AMBIGUOUS_PROBLEM:
        return "D"
    letter = {"Syntax": "A", "Runtime": "B", "Functional": "C"}[label.primary.value]
    return f"{letter}.?"


def _taxonomy_distribution(store: RunStore, run_id: str) -> ReportTable:
    records = final_records(store, run_id)
    models = sorted({r.model_id for r in records})
    counts: dict[str, dict[str, int]] = {m: {} for m in models}
    totals: dict[str, int] = {m: 0 for m in models}
    for record in records:
        bucket = _leaf_bucket(store, record)
        counts[record.model_id][bucket] = counts[record.model_id].get(bucket, 0) + 1
        totals[record.model_id] += 1

    extra = sorted(
        {b for per_model in counts.values() for b in per_model} - set(_LEAF_ROWS)
    )
    rows: list[tuple] = []
    for leaf in (*_LEAF_ROWS, *extra):
        pct = tuple(100.0 * counts[m].get(leaf, 0) / totals[m] if totals[m] else 0.0
                    for m in models)
        rows.append((leaf, "leaf", *pct))
        # primary aggregates mirror the published table layout
        for group, members in _GROUP_OF.items():
            if leaf == members[-1]:
                agg = tuple(
                    100.0 * sum(counts[m].get(x, 0) for x in (*members, f"{group}.?"))
                    / totals[m] if totals[m] else 0.0
                    for m in models
                )
                rows.append((group, "group", *agg))
    return ReportTable("taxonomy_distribution", ("label", "row_kind", *models),
                       tuple(rows))


def _five_numbers(values: list[float]) -> tuple[float, float, float, float, float]:
    if len(values) == 1:
        v = float(values[0])
        return (v, v, v, v, v)
    ordered = sorted(float(v) for v in values)
    q1, med, q3 = statistics.quantiles(ordered, n=4, method="inclusive")
    return (ordered[0], q1, med, q3, ordered[-1])


def _metric_deltas(store: RunStore, run_id: str) -> ReportTable:
    """Five-number summaries of candidate-minus-canonical metrics over
    passing final candidates."""
    records = [r for r in final_records(store, run_id) if _is_pass(r) and r.delta]
    if not records:
        raise EmptyRun(f"run {run_id!r} has no passing records with metric deltas")
    by_model: dict[str, list[RunRecord]] = {}
    for record in records:
        by_model.setdefault(record.model_id, []).append(record)
    rows = []
    for model in sorted(by_model):
        group = by_model[model]
        for metric, pick in (("d_loc", lambda r: r.delta.d_loc),
                             ("d_cc", lambda r: r.delta.d_cc),
                             ("d_api", lambda r: r.delta.d_api)):
            summary = _five_numbers([pick(r) for r in group])
            rows.append((model, metric, *summary, len(group)))
    return ReportTable(
        "metric_deltas",
        ("model", "metric", "min", "q1", "median", "q3", "max", "n"),
        tuple(rows),
    )


def _comment_distribution(store: RunStore, run_id: str) -> ReportTable:
    records = [r for r in final_records(store, run_id) if r.metrics is not None]
    if not records:
        raise EmptyRun(f"run {run_id!r} has no records with metrics")
    by_model: dict[str, dict[str, list[int]]] = {}
    for record in records:
        side = "correct" if _is_pass(record) else "incorrect"
        by_model.setdefault(record.model_id, {}).setdefault(side, []).append(
            record.metrics.comment_lines
        )
    rows = []
    for model in sorted(by_model):
        for side in ("correct", "incorrect"):
            values = by_model[model].get(side, [])
            if not values:
                continue
            rows.append((model, side, *_five_numbers(values), len(values)))
    return ReportTable(
        "comment_distribution",
        ("model", "group", "min", "q1", "median", "q3", "max", "n"),
        tuple(rows),
    )


def _transitions(store: RunStore, run_id: str) -> ReportTable:
    traces = list(store.iter_traces(run_id))
    if not traces:
        raise EmptyRun(f"run {run_id!r} has no repair traces")
    matrix = transition_matrix(traces)
    rows = []
    for iteration in matrix.iterations():
        for from_state in FROM_STATES:
            rows.append((
                iteration,
                from_state.value,
                *(matrix.count(iteration, from_state, to) for to in TO_STATES),
            ))
    return ReportTable(
        "transition_matrix",
        ("iteration", "from", *(s.value for s in TO_STATES)),
        tuple(rows),
    )
