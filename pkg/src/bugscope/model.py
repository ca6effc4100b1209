"""Shared domain types: tasks, tests, language profiles, candidates, metrics.

Everything here is an immutable value object, safe to share across
threads. `validate_task` returns violations as data instead of raising,
so ingestion can collect problems without aborting a batch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class Difficulty(str, Enum):
    INTRODUCTORY = "introductory"
    INTERVIEW = "interview"
    COMPETITION = "competition"
    UNRATED = "unrated"


class IoMode(str, Enum):
    CALL_BASED = "call_based"
    STDIO = "stdio"


class ComparisonMode(str, Enum):
    EXACT = "exact"
    WHITESPACE_NORMALIZED = "whitespace_normalized"
    FLOAT_TOLERANT = "float_tolerant"


@dataclass(frozen=True)
class Comparison:
    mode: ComparisonMode = ComparisonMode.WHITESPACE_NORMALIZED
    eps: Optional[float] = None  # required (> 0) for float_tolerant

    def to_dict(self) -> dict:
        d: dict = {"mode": self.mode.value}
        if self.eps is not None:
            d["eps"] = self.eps
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Comparison":
        return cls(mode=ComparisonMode(d["mode"]), eps=d.get("eps"))


@dataclass(frozen=True)
class UnitTest:
    """One oracle: either an assertion snippet or a stdin/stdout pair."""

    id: str
    assertion: Optional[str] = None
    stdin: Optional[str] = None
    expected_stdout: Optional[str] = None
    comparison: Comparison = Comparison()

    @property
    def is_call_based(self) -> bool:
        return self.assertion is not None

    def to_dict(self) -> dict:
        d: dict = {"id": self.id}
        if self.assertion is not None:
            d["assertion"] = self.assertion
        if self.stdin is not None:
            d["stdin"] = self.stdin
        if self.expected_stdout is not None:
            d["expected_stdout"] = self.expected_stdout
        d["comparison"] = self.comparison.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "UnitTest":
        return cls(
            id=str(d["id"]),
            assertion=d.get("assertion"),
            stdin=d.get("stdin"),
            expected_stdout=d.get("expected_stdout"),
            comparison=Comparison.from_dict(d["comparison"]) if "comparison" in d else Comparison(),
        )


@dataclass(frozen=True)
class Task:
    """One benchmark problem in the unified shape all suites map onto."""

    id: str
    suite: str
    description: str
    tests: tuple[UnitTest, ...]
    signature: Optional[str] = None
    canonical_solution: Optional[str] = None
    difficulty: Difficulty = Difficulty.UNRATED
    io_mode: IoMode = IoMode.CALL_BASED

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "suite": self.suite,
            "description": self.description,
            "difficulty": self.difficulty.value,
            "io_mode": self.io_mode.value,
            "tests": [t.to_dict() for t in self.tests],
        }
        if self.signature is not None:
            d["signature"] = self.signature
        if self.canonical_solution is not None:
            d["canonical_solution"] = self.canonical_solution
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Task":
        return cls(
            id=str(d["id"]),
            suite=d.get("suite", "unknown"),
            description=d["description"],
            tests=tuple(UnitTest.from_dict(t) for t in d.get("tests", [])),
            signature=d.get("signature"),
            canonical_solution=d.get("canonical_solution"),
            difficulty=Difficulty(d.get("difficulty", "unrated")),
            io_mode=IoMode(d.get("io_mode", "call_based")),
        )


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


def validate_task(task: Task) -> list[Violation]:
    """Check Task invariants; empty list means the task is well-formed."""
    violations: list[Violation] = []
    if not task.description.strip():
        violations.append(Violation("description", "empty_description"))
    if not task.tests:
        violations.append(Violation("tests", "empty_tests"))
    seen_ids: set[str] = set()
    for test in task.tests:
        where = f"tests[{test.id}]"
        if test.id in seen_ids:
            violations.append(Violation(where, "duplicate_test_id"))
        seen_ids.add(test.id)
        has_assertion = test.assertion is not None
        has_stdio = test.stdin is not None or test.expected_stdout is not None
        if has_assertion and has_stdio:
            violations.append(Violation(where, "ambiguous_test_shape"))
        if not has_assertion and not has_stdio:
            violations.append(Violation(where, "empty_test"))
        if task.io_mode is IoMode.CALL_BASED and not has_assertion:
            violations.append(Violation(where, "missing_assertion"))
        if task.io_mode is IoMode.STDIO:
            if test.stdin is None:
                violations.append(Violation(where, "missing_stdin"))
            if test.expected_stdout is None:
                violations.append(Violation(where, "missing_expected_stdout"))
        if test.comparison.mode is ComparisonMode.FLOAT_TOLERANT:
            if test.comparison.eps is None or test.comparison.eps <= 0:
                violations.append(Violation(where, "invalid_eps"))
    return violations


DEFAULT_SYNTAX_MARKERS = (
    "SyntaxError",
    "[Ss]yntax [Ii]nvalid",
    "IndentationError",
    "TabError",
)
DEFAULT_IMPORT_MARKERS = ("ImportError", "ModuleNotFoundError")
DEFAULT_INDENT_MARKERS = ("IndentationError", "TabError")
# Final line of an interpreter failure: "NameError: x" or a bare "KeyboardInterrupt".
DEFAULT_EXCEPTION_LINE = (
    r"^([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*"
    r"(?:Error|Exception|Warning|Interrupt|Exit|Iteration))(?::|$)"
)
DEFAULT_BRANCH_TOKENS = ("if", "elif", "for", "while", "and", "or", "except")


@dataclass(frozen=True)
class LanguageProfile:
    """Target-interpreter configuration that drives execution, diagnostic
    classification, and metrics, so none of those hard-code a language.

    `interpreter_cmd` is an argv template; a ``{file}`` element is
    replaced with the driver path at execution time.
    """

    name: str = "python"
    interpreter_cmd: tuple[str, ...] = ("python3", "{file}")
    syntax_markers: tuple[str, ...] = DEFAULT_SYNTAX_MARKERS
    traceback_marker: str = "Traceback"
    assertion_marker: str = "AssertionError"
    import_markers: tuple[str, ...] = DEFAULT_IMPORT_MARKERS
    indentation_markers: tuple[str, ...] = DEFAULT_INDENT_MARKERS
    exception_line_pattern: str = DEFAULT_EXCEPTION_LINE
    comment_prefix: str = "#"
    branch_tokens: tuple[str, ...] = DEFAULT_BRANCH_TOKENS

    def __post_init__(self) -> None:
        if not self.interpreter_cmd:
            raise ValueError("interpreter_cmd must be non-empty")
        for pattern in (
            *self.syntax_markers,
            self.traceback_marker,
            self.assertion_marker,
            *self.import_markers,
            *self.indentation_markers,
            self.exception_line_pattern,
        ):
            re.compile(pattern)  # raises re.error on a bad pattern

    @classmethod
    def from_dict(cls, d: dict) -> "LanguageProfile":
        kwargs: dict = {}
        for key in (
            "name", "traceback_marker", "assertion_marker",
            "exception_line_pattern", "comment_prefix",
        ):
            if key in d:
                kwargs[key] = d[key]
        for key in (
            "interpreter_cmd", "syntax_markers", "import_markers",
            "indentation_markers", "branch_tokens",
        ):
            if key in d:
                kwargs[key] = tuple(d[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.1
    top_k: int = 1
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    def to_dict(self) -> dict:
        return {"temperature": self.temperature, "top_k": self.top_k,
                "max_tokens": self.max_tokens}

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationParams":
        return cls(temperature=float(d.get("temperature", 0.1)),
                   top_k=int(d.get("top_k", 1)),
                   max_tokens=int(d.get("max_tokens", 2048)))


class ExtractionMethod(str, Enum):
    FENCED = "fenced"
    HEURISTIC = "heuristic"
    FAILED = "failed"
    VERBATIM = "verbatim"  # candidate supplied as code directly, no response parsing


@dataclass(frozen=True)
class Candidate:
    """One piece of code attributed to a model for a task.

    iteration 0 is the initial generation; repair steps count up from 1.
    A candidate whose code could not be recovered from the raw response
    carries extraction = FAILED and empty code.
    """

    task_id: str
    model_id: str
    iteration: int
    raw_response: str
    code: str
    params: GenerationParams = GenerationParams()
    extraction: ExtractionMethod = ExtractionMethod.VERBATIM

    def __post_init__(self) -> None:
        if self.iteration < 0:
            raise ValueError("iteration must be non-negative")
        if not self.code.strip() and self.extraction is not ExtractionMethod.FAILED:
            raise ValueError("empty code requires extraction=FAILED")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "model_id": self.model_id,
            "iteration": self.iteration,
            "raw_response": self.raw_response,
            "code": self.code,
            "params": self.params.to_dict(),
            "extraction": self.extraction.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Candidate":
        return cls(
            task_id=d["task_id"],
            model_id=d["model_id"],
            iteration=int(d["iteration"]),
            raw_response=d.get("raw_response", ""),
            code=d.get("code", ""),
            params=GenerationParams.from_dict(d.get("params", {})),
            extraction=ExtractionMethod(d.get("extraction", "verbatim")),
        )


@dataclass(frozen=True)
class CodeMetrics:
    """Static characteristics of one snippet.

    cyclomatic_complexity and api_calls are None when the snippet could
    not be lexed (unterminated string); the other counters are total.
    """

    loc: int
    cyclomatic_complexity: Optional[int]
    api_calls: Optional[int]
    comment_lines: int
    tokens: int

    def to_dict(self) -> dict:
        return {
            "loc": self.loc,
            "cyclomatic_complexity": self.cyclomatic_complexity,
            "api_calls": self.api_calls,
            "comment_lines": self.comment_lines,
            "tokens": self.tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeMetrics":
        return cls(
            loc=int(d["loc"]),
            cyclomatic_complexity=d.get("cyclomatic_complexity"),
            api_calls=d.get("api_calls"),
            comment_lines=int(d["comment_lines"]),
            tokens=int(d["tokens"]),
        )


@dataclass(frozen=True)
class MetricsDelta:
    """Candidate minus canonical, per metric; only defined when both sides
    were computed."""

    d_loc: int
    d_cc: int
    d_api: int

    def to_dict(self) -> dict:
        return {"d_loc": self.d_loc, "d_cc": self.d_cc, "d_api": self.d_api}
