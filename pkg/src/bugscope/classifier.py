"""Failure classification: primary type from interpreter diagnostics,
heuristic secondary suggestion, model-assisted root causes, and review
merging.

Primary classification is marker-driven with a fixed priority: a syntax
or import marker anywhere in stderr wins, then runtime evidence, and a
failure is functional only when nothing stronger matched. Import
failures fall under Syntax even though the interpreter raises them at
runtime, because the taxonomy files Library Import Error there.

Secondary classification is a configurable mapping table over the final
exception name. It is a suggestion, not a verdict: functional failures
in particular default to a low-confidence logic-error label and expect
human review.
"""

from __future__ import annotations

import builtins
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .llm import Backend, MalformedResponse, complete
from .model import GenerationParams, LanguageProfile, Task
from .sandbox import ExecutionOutcome, Overall, Verdict
from .taxonomy import (
    BugLabel,
    InconsistentPath,
    PrimaryType,
    Provenance,
    SecondaryType,
    TertiaryType,
)


class UnclassifiableDiagnostic(RuntimeError):
    """A failing outcome matched no classification rule. Surfaced so odd
    diagnostics are looked at instead of silently bucketed."""


@dataclass(frozen=True)
class PrimaryClassification:
    primary: PrimaryType
    timeout: bool = False


def _search_any(patterns: Sequence[str], text: str) -> bool:
    return any(re.search(p, text) for p in patterns)


def classify_primary(
    outcome: ExecutionOutcome, profile: LanguageProfile
) -> PrimaryClassification:
    """Stage-one automatic classification of one execution outcome."""
    if outcome.overall is Overall.PASS:
        return PrimaryClassification(PrimaryType.PASS)

    first = outcome.first_failure
    stderr = first.stderr if first else ""
    verdict = outcome.first_failure_verdict
    timed_out = verdict is Verdict.TIMEOUT

    if _search_any(profile.syntax_markers, stderr) or _search_any(
        profile.import_markers, stderr
    ):
        return PrimaryClassification(PrimaryType.SYNTAX, timeout=timed_out)
    if timed_out:
        return PrimaryClassification(PrimaryType.RUNTIME, timeout=True)
    if re.search(profile.traceback_marker, stderr):
        final = final_exception_name(stderr, profile)
        if final is None or not re.search(profile.assertion_marker, final):
            return PrimaryClassification(PrimaryType.RUNTIME)
    if re.search(profile.assertion_marker, stderr):
        return PrimaryClassification(PrimaryType.FUNCTIONAL)
    if verdict is Verdict.WRONG_OUTPUT:
        return PrimaryClassification(PrimaryType.FUNCTIONAL)
    raise UnclassifiableDiagnostic(
        f"no rule matched failing outcome (verdict={verdict}, stderr={stderr[:200]!r})"
    )


def final_exception_name(stderr: str, profile: LanguageProfile) -> Optional[str]:
    """Exception name from the last diagnostic line; None when absent.
    With chained tracebacks this is the name from the final block."""
    pattern = re.compile(profile.exception_line_pattern)
    name: Optional[str] = None
    for line in stderr.splitlines():
        m = pattern.match(line)
        if m:
            name = m.group(1)
    return name


def _builtin_exception_names() -> frozenset[str]:
    names = set()
    for attr in dir(builtins):
        obj = getattr(builtins, attr)
        if isinstance(obj, type) and issubclass(obj, BaseException):
            names.add(attr)
    return frozenset(names)


@dataclass(frozen=True)
class ClassifierRules:
    """Exception-name mapping used for secondary suggestions. The default
    is tuned to the Python profile; swap it out alongside the profile."""

    definition_missing: frozenset[str] = frozenset({"NameError", "UnboundLocalError"})
    boundary_check: frozenset[str] = frozenset(
        {"IndexError", "KeyError", "ZeroDivisionError"}
    )
    api_kind: dict = field(
        default_factory=lambda: {
            "AttributeError": TertiaryType.ATTRIBUTE_KIND,
            "TypeError": TertiaryType.TYPE_KIND,
            "ValueError": TertiaryType.VALUE_KIND,
        }
    )
    arity_message_patterns: tuple[str, ...] = (
        r"positional argument",
        r"argument[s]? \(\d+ given\)",
        r"missing \d+ required",
    )
    known_exceptions: frozenset[str] = field(default_factory=_builtin_exception_names)


DEFAULT_RULES = ClassifierRules()


@dataclass(frozen=True)
class SecondarySuggestion:
    label: BugLabel
    rationale: str
    confidence: float


def classify_secondary(
    outcome: ExecutionOutcome,
    code: str,
    primary: PrimaryClassification,
    profile: LanguageProfile,
    rules: ClassifierRules = DEFAULT_RULES,
) -> SecondarySuggestion:
    """Suggest a secondary (and tertiary, where the table knows one)
    label for a failing outcome. Unknown patterns come back with
    confidence 0 rather than failing."""
    if primary.primary is PrimaryType.PASS:
        raise ValueError("classify_secondary requires a failing primary")

    first = outcome.first_failure
    stderr = first.stderr if first else ""

    if primary.primary is PrimaryType.SYNTAX:
        if _search_any(profile.indentation_markers, stderr):
            return _suggestion(primary.primary, SecondaryType.A2_INCORRECT_INDENTATION,
                               None, 0.95, "indentation marker in diagnostics")
        if _search_any(profile.import_markers, stderr):
            return _suggestion(primary.primary, SecondaryType.A3_LIBRARY_IMPORT_ERROR,
                               None, 0.9, "import marker in diagnostics")
        return _suggestion(primary.primary, SecondaryType.A1_INCOMPLETE_SYNTAX,
                           None, 0.8, "syntax failure without a more specific marker")

    if primary.primary is PrimaryType.RUNTIME:
        if primary.timeout:
            return _suggestion(primary.primary, SecondaryType.B5_MINORS,
                               TertiaryType.TIMEOUT, 0.95, "execution hit the time limit")
        qualified = final_exception_name(stderr, profile)
        if qualified is None:
            return _suggestion(primary.primary, SecondaryType.B1_API_MISUSE,
                               None, 0.0, "no exception name recovered")
        name = qualified.rsplit(".", 1)[-1]
        if name in rules.definition_missing:
            return _suggestion(primary.primary, SecondaryType.B2_DEFINITION_MISSING,
                               None, 0.85, f"{name}: name used before definition")
        if name in rules.boundary_check:
            return _suggestion(primary.primary, SecondaryType.B3_INCORRECT_BOUNDARY_CHECK,
                               None, 0.7, f"{name}: unchecked boundary condition")
        if name == "TypeError" and _search_any(rules.arity_message_patterns, stderr):
            return _suggestion(primary.primary, SecondaryType.B4_INCORRECT_ARGUMENT,
                               None, 0.7, "call-arity mismatch message")
        if name in rules.api_kind:
            return _suggestion(primary.primary, SecondaryType.B1_API_MISUSE,
                               rules.api_kind[name], 0.8, f"{name} raised by an API call")
        if name not in rules.known_exceptions and re.search(
            rf"\bclass\s+{re.escape(name)}\b", code
        ):
            return _suggestion(primary.primary, SecondaryType.B5_MINORS,
                               TertiaryType.LLM_DEFINED_EXCEPTION, 0.85,
                               f"{name} is defined by the candidate itself")
        return _suggestion(primary.primary, SecondaryType.B1_API_MISUSE, None, 0.2,
                           f"{name} has no mapping rule")

    # Functional failures carry no detailed diagnostics; automated
    # secondary accuracy is known to be poor, so defer to humans.
    return _suggestion(PrimaryType.FUNCTIONAL, SecondaryType.C1_MISUNDERSTANDING_LOGIC,
                       None, 0.3, "default for functional failures; needs review")


def _suggestion(
    primary: PrimaryType,
    secondary: SecondaryType,
    tertiary: Optional[TertiaryType],
    confidence: float,
    rationale: str,
) -> SecondarySuggestion:
    label = BugLabel(primary, secondary, tertiary,
                     provenance=Provenance.HEURISTIC, confidence=confidence)
    return SecondarySuggestion(label=label, rationale=rationale, confidence=confidence)


@dataclass(frozen=True)
class RootCause:
    summary: str
    explanation: str
    placeholder: bool = False


@dataclass(frozen=True)
class RootCauseSet:
    causes: tuple[RootCause, RootCause, RootCause]
    parsed_count: int

    @property
    def low_quality(self) -> bool:
        return self.parsed_count < 3

    def to_dict(self) -> dict:
        return {
            "causes": [
                {"summary": c.summary, "explanation": c.explanation,
                 "placeholder": c.placeholder}
                for c in self.causes
            ],
            "parsed_count": self.parsed_count,
        }


ROOT_CAUSE_TEMPLATE = (
    "The code below fails its unit tests, and the interpreter reported no "
    "detailed error for the failure.\n\n"
    "Problem description:\n"
    "{description}\n\n"
    "Code:\n"
    "{code}\n\n"
    "Diagnostics:\n"
    "{diagnostics}\n\n"
    "List three possible root causes of the failure. Number them 1., 2., 3. "
    "and give each a one-line summary followed by a short explanation."
)

_CAUSE_HEAD_RE = re.compile(r"^\s*\**\s*([123])[.)]\s*(.*\S)?\s*$")


def suggest_root_causes(
    task: Task,
    code: str,
    outcome: ExecutionOutcome,
    backend: Backend,
    params: GenerationParams = GenerationParams(),
) -> RootCauseSet:
    """Ask the model for exactly three candidate root causes.

    A response that parses short is padded with placeholders; a response
    with no parseable cause at all is retried once, then rejected."""
    stderr = outcome.first_failure.stderr if outcome.first_failure else ""
    prompt = ROOT_CAUSE_TEMPLATE.format(
        description=task.description, code=code,
        diagnostics=stderr or "(no diagnostics)",
    )

    causes: list[RootCause] = []
    for attempt in range(2):
        response = complete(backend, prompt, params)
        causes = _parse_causes(response.text)
        if causes:
            break
    if not causes:
        raise MalformedResponse("no numbered root causes found after one retry")

    parsed = min(len(causes), 3)
    while len(causes) < 3:
        causes.append(RootCause("unparsed", "", placeholder=True))
    return RootCauseSet(causes=tuple(causes[:3]), parsed_count=parsed)


def _parse_causes(text: str) -> list[RootCause]:
    items: list[tuple[str, list[str]]] = []
    for line in text.splitlines():
        m = _CAUSE_HEAD_RE.match(line)
        if m:
            items.append((m.group(2) or "", []))
        elif items and line.strip():
            items[-1][1].append(line.strip())
    return [RootCause(summary=s.strip() or "unparsed", explanation=" ".join(body))
            for s, body in items]


@dataclass(frozen=True)
class MergeResult:
    label: BugLabel
    disagreement: bool
    finalized: bool


def merge_review(auto: BugLabel, reviews: list[BugLabel]) -> MergeResult:
    """Resolve the current label from the automatic label plus the human
    review history.

    Human labels always override the machine. Two agreeing most-recent
    reviews finalize; two disagreeing ones raise the disagreement flag
    and leave the sample open for joint resolution.
    """
    for review in reviews:
        if review.provenance is not Provenance.HUMAN:
            raise InconsistentPath(
                f"review with provenance {review.provenance.value} is not a human label"
            )
    if not reviews:
        return MergeResult(label=auto, disagreement=False, finalized=False)
    latest = reviews[-1]
    if len(reviews) >= 2:
        if reviews[-2].path == latest.path:
            return MergeResult(label=latest, disagreement=False, finalized=True)
        return MergeResult(label=latest, disagreement=True, finalized=False)
    return MergeResult(label=latest, disagreement=False, finalized=False)
