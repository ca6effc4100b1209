"""Training-free iterative self-critique repair.

One trace per failing candidate: classify the failure, build the
feedback message, prompt the model to critique and re-correct its own
code with the full bug-category listing attached, re-evaluate the
extracted fix, and iterate while the budget lasts. Failures of the
machinery (exhausted script, prose-only response) become terminal
states in the trace, never exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .classifier import (
    ClassifierRules,
    DEFAULT_RULES,
    UnclassifiableDiagnostic,
    classify_primary,
    classify_secondary,
)
from .llm import Backend, ModelUnavailable, complete, extract_code, render_repair_prompt
from .model import Candidate, ExtractionMethod, LanguageProfile, Task
from .sandbox import DEFAULT_LIMITS, ExecLimits, ExecutionOutcome, Verdict, evaluate_candidate
from .taxonomy import (
    BugLabel,
    PrimaryType,
    Provenance,
    TertiaryType,
    render_taxonomy_listing,
)

FUNCTIONAL_FEEDBACK = "The functionality of code is incorrect."
TIMEOUT_FEEDBACK = "The execution of the code has exceeded the time limit."


def feedback_message(label: BugLabel, outcome: ExecutionOutcome) -> str:
    """Route the compiler feedback for the repair prompt.

    Syntax and runtime failures get the captured error log; timeouts and
    functional failures get their fixed sentences, since the interpreter
    has nothing useful to say about them.
    """
    if label.primary is PrimaryType.PASS:
        raise ValueError("no feedback for a passing candidate")
    timed_out = (
        label.tertiary is TertiaryType.TIMEOUT
        or outcome.first_failure_verdict is Verdict.TIMEOUT
    )
    if timed_out:
        return TIMEOUT_FEEDBACK
    if label.primary in (PrimaryType.SYNTAX, PrimaryType.RUNTIME):
        first = outcome.first_failure
        if first is None:
            return ""
        return first.stderr or first.stdout
    return FUNCTIONAL_FEEDBACK


class Terminal(str, Enum):
    FIXED = "fixed"
    EXHAUSTED = "exhausted"
    EXTRACTION_FAILED = "extraction_failed"
    MODEL_UNAVAILABLE = "model_unavailable"


@dataclass(frozen=True)
class RepairStep:
    candidate: Candidate
    outcome: Optional[ExecutionOutcome]
    label: Optional[BugLabel]

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.to_dict(),
            "outcome": self.outcome.to_dict() if self.outcome else None,
            "label": self.label.to_dict() if self.label else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RepairStep":
        return cls(
            candidate=Candidate.from_dict(d["candidate"]),
            outcome=ExecutionOutcome.from_dict(d["outcome"]) if d.get("outcome") else None,
            label=BugLabel.from_dict(d["label"]) if d.get("label") else None,
        )


@dataclass(frozen=True)
class RepairTrace:
    task_id: str
    model_id: str
    steps: tuple[RepairStep, ...]
    terminal: Terminal

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "model_id": self.model_id,
            "steps": [s.to_dict() for s in self.steps],
            "terminal": self.terminal.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RepairTrace":
        return cls(
            task_id=d["task_id"],
            model_id=d["model_id"],
            steps=tuple(RepairStep.from_dict(s) for s in d["steps"]),
            terminal=Terminal(d["terminal"]),
        )


def _label_outcome(
    outcome: ExecutionOutcome,
    code: str,
    profile: LanguageProfile,
    rules: ClassifierRules,
) -> Optional[BugLabel]:
    try:
        primary = classify_primary(outcome, profile)
    except UnclassifiableDiagnostic:
        return None
    if primary.primary is PrimaryType.PASS:
        return BugLabel(PrimaryType.PASS, provenance=Provenance.AUTOMATIC)
    return classify_secondary(outcome, code, primary, profile, rules).label


def run_repair(
    task: Task,
    initial: Candidate,
    backend: Backend,
    profile: LanguageProfile,
    limits: ExecLimits = DEFAULT_LIMITS,
    max_iterations: int = 2,
    initial_outcome: Optional[ExecutionOutcome] = None,
    rules: ClassifierRules = DEFAULT_RULES,
) -> RepairTrace:
    """Run the critique-and-correct loop for one failing candidate.

    Each iteration re-classifies the latest incorrect code fresh, feeds
    the routed feedback plus the full taxonomy listing into the repair
    prompt, and evaluates whatever code the model returns. Stops on a
    pass, on the iteration budget, or on a machinery failure.
    """
    if initial_outcome is None:
        initial_outcome = evaluate_candidate(task, initial.code, profile, limits)
    label = _label_outcome(initial_outcome, initial.code, profile, rules)
    steps = [RepairStep(initial, initial_outcome, label)]

    if label is not None and label.primary is PrimaryType.PASS:
        return RepairTrace(task.id, initial.model_id, tuple(steps), Terminal.FIXED)

    code = initial.code
    outcome = initial_outcome
    terminal = Terminal.EXHAUSTED
    listing = render_taxonomy_listing()

    for iteration in range(1, max_iterations + 1):
        if label is not None:
            feedback = feedback_message(label, outcome)
        else:
            # unclassifiable diagnostics still carry the raw error log
            feedback = outcome.first_failure.stderr if outcome.first_failure else ""
        prompt = render_repair_prompt(task, code, feedback, listing)
        try:
            response = complete(backend, prompt, initial.params)
        except ModelUnavailable:
            terminal = Terminal.MODEL_UNAVAILABLE
            break

        extraction = extract_code(response.text)
        candidate = Candidate(
            task_id=task.id,
            model_id=initial.model_id,
            iteration=iteration,
            raw_response=response.text,
            code=extraction.code,
            params=initial.params,
            extraction=extraction.method,
        )
        if extraction.method is ExtractionMethod.FAILED:
            steps.append(RepairStep(candidate, None, None))
            terminal = Terminal.EXTRACTION_FAILED
            break

        outcome = evaluate_candidate(task, extraction.code, profile, limits)
        label = _label_outcome(outcome, extraction.code, profile, rules)
        steps.append(RepairStep(candidate, outcome, label))
        if label is not None and label.primary is PrimaryType.PASS:
            terminal = Terminal.FIXED
            break
        code = extraction.code

    return RepairTrace(task.id, initial.model_id, tuple(steps), terminal)


FROM_STATES = (PrimaryType.SYNTAX, PrimaryType.RUNTIME, PrimaryType.FUNCTIONAL)
TO_STATES = (PrimaryType.SYNTAX, PrimaryType.RUNTIME, PrimaryType.FUNCTIONAL,
             PrimaryType.PASS)


@dataclass(frozen=True)
class TransitionMatrix:
    """Bug-type movement per repair iteration: counts[iteration][from][to].

    Iteration i counts transitions from step i-1 to step i; fixed traces
    land in the Pass column of the iteration that fixed them.
    """

    counts: dict

    def count(self, iteration: int, from_state: PrimaryType, to_state: PrimaryType) -> int:
        return self.counts.get(iteration, {}).get(from_state, {}).get(to_state, 0)

    def iterations(self) -> list[int]:
        return sorted(self.counts)

    def row_sum(self, iteration: int, from_state: PrimaryType) -> int:
        return sum(self.counts.get(iteration, {}).get(from_state, {}).values())

    def to_csv(self) -> str:
        lines = []
        for iteration in self.iterations():
            lines.append(f"# iteration {iteration}")
            lines.append("from," + ",".join(s.value for s in TO_STATES))
            for from_state in FROM_STATES:
                row = [str(self.count(iteration, from_state, to)) for to in TO_STATES]
                lines.append(from_state.value + "," + ",".join(row))
            lines.append("")
        return "\n".join(lines)


def transition_matrix(traces: list[RepairTrace]) -> TransitionMatrix:
    counts: dict = {}
    for trace in traces:
        for i in range(1, len(trace.steps)):
            prev = trace.steps[i - 1].label
            cur = trace.steps[i].label
            if prev is None or cur is None:
                continue
            if prev.primary not in FROM_STATES or cur.primary not in TO_STATES:
                continue
            by_from = counts.setdefault(i, {})
            by_to = by_from.setdefault(prev.primary, {})
            by_to[cur.primary] = by_to.get(cur.primary, 0) + 1
    return TransitionMatrix(counts=counts)


def fixes_by_iteration(traces: list[RepairTrace]) -> dict[int, int]:
    """How many traces reached Pass at each iteration index."""
    fixes: dict[int, int] = {}
    for trace in traces:
        if trace.terminal is not Terminal.FIXED:
            continue
        iteration = len(trace.steps) - 1
        fixes[iteration] = fixes.get(iteration, 0) + 1
    return fixes
