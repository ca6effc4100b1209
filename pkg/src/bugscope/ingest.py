"""Task ingestion: adapters from the benchmark file shapes onto the
unified Task schema, plus the unified export used for round-trips.

Every adapter validates what it builds; records that fail validation are
collected as errors, never fatal. Problem statements carrying "[image]"
placeholders are flagged but kept unless the caller asks to drop them:
whether they are usable is a judgment call, not an ingestion rule.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .model import (
    Comparison,
    Difficulty,
    IoMode,
    Task,
    UnitTest,
    validate_task,
)


class UnreadableFile(OSError):
    pass


FORMATS = ("he_plus", "mbpp_plus", "apps_plus", "rwpb", "unified")

_IMAGE_PLACEHOLDER = re.compile(r"\[image\]", re.IGNORECASE)
_DEF_LINE = re.compile(r"^\s*def\s+\w+\s*\(.*$", re.MULTILINE)


@dataclass
class IngestError:
    record: str  # record id or line number
    problems: list[str]


@dataclass
class IngestResult:
    tasks: list[Task] = field(default_factory=list)
    errors: list[IngestError] = field(default_factory=list)
    flagged: list[str] = field(default_factory=list)  # ids with [image] placeholders


def ingest_tasks(path: str | Path, format: str, drop_flagged: bool = False) -> IngestResult:
    """Read line-delimited records from `path` and map them onto Tasks."""
    if format not in FORMATS:
        raise ValueError(f"unknown task format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc

    adapter: Callable[[dict], Task] = _ADAPTERS[format]
    result = IngestResult()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            result.errors.append(IngestError(f"line {lineno}", [f"bad JSON: {exc}"]))
            continue
        try:
            task = adapter(record)
        except (KeyError, TypeError, ValueError) as exc:
            rid = str(record.get("id") or record.get("task_id") or f"line {lineno}")
            result.errors.append(IngestError(rid, [f"unmappable record: {exc}"]))
            continue
        violations = validate_task(task)
        if violations:
            result.errors.append(IngestError(task.id, [str(v) for v in violations]))
            continue
        if _IMAGE_PLACEHOLDER.search(task.description):
            result.flagged.append(task.id)
            if drop_flagged:
                continue
        result.tasks.append(task)
    return result


def export_tasks(tasks: list[Task]) -> str:
    """Unified line-delimited export; re-ingesting reproduces the Tasks."""
    return "\n".join(json.dumps(t.to_dict(), sort_keys=True, ensure_ascii=False)
                     for t in tasks) + "\n"


def _from_unified(record: dict) -> Task:
    return Task.from_dict(record)


def _from_he_plus(record: dict) -> Task:
    """HumanEval-style: prompt is signature+docstring, canonical_solution
    continues the prompt, and `test` defines check(candidate) invoked on
    the entry point."""
    task_id = str(record.get("task_id") or record["id"])
    prompt = record["prompt"]
    canonical = record.get("canonical_solution")
    if canonical is not None and not canonical.lstrip().startswith(("def ", "class ", "import ", "from ")):
        canonical = prompt + canonical

    tests: list[UnitTest] = []
    if record.get("assertions"):
        tests = [UnitTest(id=f"t{i}", assertion=a)
                 for i, a in enumerate(record["assertions"])]
    elif record.get("test") and record.get("entry_point"):
        harness = record["test"] + f"\ncheck({record['entry_point']})"
        tests = [UnitTest(id="t0", assertion=harness)]

    sig_match = _DEF_LINE.search(prompt)
    return Task(
        id=task_id,
        suite="humaneval-plus",
        description=prompt,
        signature=sig_match.group(0).strip() if sig_match else None,
        canonical_solution=canonical,
        tests=tuple(tests),
        difficulty=Difficulty.UNRATED,
        io_mode=IoMode.CALL_BASED,
    )


def _from_mbpp_plus(record: dict) -> Task:
    task_id = str(record.get("task_id") or record["id"])
    assertions = record.get("assertions") or record.get("test_list") or []
    return Task(
        id=task_id,
        suite="mbpp-plus",
        description=record.get("text") or record.get("prompt", ""),
        canonical_solution=record.get("code") or record.get("canonical_solution"),
        tests=tuple(UnitTest(id=f"t{i}", assertion=a) for i, a in enumerate(assertions)),
        difficulty=Difficulty.UNRATED,
        io_mode=IoMode.CALL_BASED,
    )


def _from_apps_plus(record: dict) -> Task:
    task_id = str(record.get("id") or record.get("problem_id"))
    io_block = record.get("input_output") or {}
    if isinstance(io_block, str):
        io_block = json.loads(io_block)
    inputs = io_block.get("inputs") or record.get("inputs") or []
    outputs = io_block.get("outputs") or record.get("outputs") or []

    solutions = record.get("solutions")
    if isinstance(solutions, str):
        try:
            solutions = json.loads(solutions)
        except json.JSONDecodeError:
            solutions = [solutions]
    canonical = solutions[0] if solutions else None

    tests = tuple(
        UnitTest(id=f"t{i}", stdin=str(stdin), expected_stdout=str(stdout),
                 comparison=Comparison())
        for i, (stdin, stdout) in enumerate(zip(inputs, outputs))
    )
    difficulty = Difficulty(record.get("difficulty", "unrated"))
    return Task(
        id=task_id,
        suite="apps-plus",
        description=record["question"],
        canonical_solution=canonical,
        tests=tests,
        difficulty=difficulty,
        io_mode=IoMode.STDIO,
    )


def _from_rwpb(record: dict) -> Task:
    """Real-world shape: signature + annotated docstring + full function
    body + assertion tests."""
    task_id = str(record.get("id") or record["task_id"])
    assertions = record.get("tests") or record.get("assertions") or []
    return Task(
        id=task_id,
        suite="rwpb",
        description=record["docstring"],
        signature=record.get("signature"),
        canonical_solution=record.get("body") or record.get("canonical_solution"),
        tests=tuple(UnitTest(id=f"t{i}", assertion=a) for i, a in enumerate(assertions)),
        difficulty=Difficulty(record.get("difficulty", "unrated")),
        io_mode=IoMode.CALL_BASED,
    )


_ADAPTERS: dict[str, Callable[[dict], Task]] = {
    "unified": _from_unified,
    "he_plus": _from_he_plus,
    "mbpp_plus": _from_mbpp_plus,
    "apps_plus": _from_apps_plus,
    "rwpb": _from_rwpb,
}
