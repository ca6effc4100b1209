import time

import pytest
from hypothesis import given, strategies as st

from bugscope.classifier import (
    MergeResult,
    UnclassifiableDiagnostic,
    classify_primary,
    classify_secondary,
    final_exception_name,
    merge_review,
    suggest_root_causes,
)
from bugscope.llm import MalformedResponse, MockBackend, ModelUnavailable
from bugscope.model import IoMode, Task, UnitTest
from bugscope.sandbox import ExecutionOutcome, Overall, RawExecution, Verdict
from bugscope.taxonomy import (
    BugLabel,
    InconsistentPath,
    PrimaryType,
    Provenance,
    SECONDARY_CODE,
    SecondaryType,
    TertiaryType,
    parse_label_code,
)

from conftest import outcome_from_corpus_entry


def failing_outcome(stderr: str, verdict: Verdict = Verdict.EXCEPTION,
                    exit_status: int = 1, stdout: str = "") -> ExecutionOutcome:
    raw = RawExecution(exit_status=exit_status, stdout=stdout, stderr=stderr,
                       wall_time=0.05, timed_out=verdict is Verdict.TIMEOUT)
    return ExecutionOutcome(per_test=(("t0", verdict),), overall=Overall.FAIL,
                            first_failure=raw, first_failure_test_id="t0")


# --- rule suite over the captured corpus --------------------------------------

def test_corpus_shape(diagnostics_corpus):
    assert len(diagnostics_corpus) >= 30
    per_primary = {}
    for entry in diagnostics_corpus:
        per_primary.setdefault(entry["expected_primary"], []).append(entry)
    assert len(per_primary["Syntax"]) >= 10
    assert len(per_primary["Runtime"]) >= 10
    assert len(per_primary["Functional"]) >= 10
    mixed = [e for e in diagnostics_corpus if e["name"].startswith("m_")]
    assert len(mixed) >= 5


def test_corpus_classifies_at_full_agreement(diagnostics_corpus, py_profile):
    start = time.monotonic()
    for entry in diagnostics_corpus:
        outcome = outcome_from_corpus_entry(entry)
        primary = classify_primary(outcome, py_profile)
        assert primary.primary.value == entry["expected_primary"], entry["name"]
        if entry["expected_secondary"]:
            suggestion = classify_secondary(outcome, entry["code"], primary, py_profile)
            code = SECONDARY_CODE[suggestion.label.secondary]
            assert code == entry["expected_secondary"], entry["name"]
            if entry["expected_tertiary"]:
                assert suggestion.label.tertiary.value == entry["expected_tertiary"], entry["name"]
    assert time.monotonic() - start < 1.0


def test_priority_syntax_marker_flips_any_mixed_case(diagnostics_corpus, py_profile):
    # injecting a syntax marker into any failing stderr forces Syntax
    for entry in diagnostics_corpus:
        outcome = outcome_from_corpus_entry(entry)
        raw = outcome.first_failure
        injected = RawExecution(raw.exit_status, raw.stdout,
                                "SyntaxError: injected\n" + raw.stderr,
                                raw.wall_time, raw.timed_out)
        mutated = ExecutionOutcome(outcome.per_test, outcome.overall, injected, "t0")
        assert classify_primary(mutated, py_profile).primary is PrimaryType.SYNTAX


# --- classify_primary rules -----------------------------------------------------

def test_primary_pass(py_profile):
    outcome = ExecutionOutcome(per_test=(("t0", Verdict.PASS),), overall=Overall.PASS)
    assert classify_primary(outcome, py_profile).primary is PrimaryType.PASS


def test_primary_syntax_marker(py_profile):
    got = classify_primary(failing_outcome("SyntaxError: invalid syntax"), py_profile)
    assert got.primary is PrimaryType.SYNTAX


def test_primary_traceback_runtime(py_profile):
    stderr = ("Traceback (most recent call last):\n"
              '  File "x.py", line 2, in <module>\n'
              "ZeroDivisionError: division by zero\n")
    assert classify_primary(failing_outcome(stderr), py_profile).primary is PrimaryType.RUNTIME


def test_primary_assertion_is_functional_despite_traceback(py_profile):
    stderr = ("Traceback (most recent call last):\n"
              '  File "x.py", line 9, in <module>\n'
              "AssertionError\n")
    assert classify_primary(failing_outcome(stderr), py_profile).primary is PrimaryType.FUNCTIONAL


def test_primary_mixed_markers_prefer_syntax(py_profile):
    stderr = ("Traceback (most recent call last):\n"
              "SyntaxError: invalid syntax\n")
    assert classify_primary(failing_outcome(stderr), py_profile).primary is PrimaryType.SYNTAX


def test_primary_timeout_flag(py_profile):
    got = classify_primary(failing_outcome("", verdict=Verdict.TIMEOUT), py_profile)
    assert got.primary is PrimaryType.RUNTIME
    assert got.timeout


def test_primary_wrong_output_clean_stderr(py_profile):
    got = classify_primary(
        failing_outcome("", verdict=Verdict.WRONG_OUTPUT, exit_status=0, stdout="3.0\n"),
        py_profile)
    assert got.primary is PrimaryType.FUNCTIONAL


def test_primary_unclassifiable_surfaces(py_profile):
    with pytest.raises(UnclassifiableDiagnostic):
        classify_primary(failing_outcome("", verdict=Verdict.EXCEPTION), py_profile)


def test_functional_exclusivity_over_corpus(diagnostics_corpus, py_profile):
    import re
    for entry in diagnostics_corpus:
        if entry["expected_primary"] != "Functional":
            continue
        stderr = entry["stderr"]
        assert not any(re.search(p, stderr) for p in py_profile.syntax_markers)
        final = final_exception_name(stderr, py_profile)
        if final is not None:
            assert re.search(py_profile.assertion_marker, final)


# --- final_exception_name ---------------------------------------------------------

def test_final_exception_simple(py_profile):
    stderr = ("Traceback (most recent call last):\n"
              '  File "x.py", line 1, in <module>\n'
              "TypeError: 'tuple' object does not support item assignment\n")
    assert final_exception_name(stderr, py_profile) == "TypeError"


def test_final_exception_empty(py_profile):
    assert final_exception_name("", py_profile) is None


def test_final_exception_chained_takes_last(diagnostics_corpus, py_profile):
    entry = next(e for e in diagnostics_corpus if e["name"] == "r_chained_traceback")
    assert final_exception_name(entry["stderr"], py_profile) == "ValueError"


# --- classify_secondary ------------------------------------------------------------

def test_secondary_indentation(py_profile):
    outcome = failing_outcome("IndentationError: unexpected indent")
    primary = classify_primary(outcome, py_profile)
    suggestion = classify_secondary(outcome, "", primary, py_profile)
    assert suggestion.label.secondary is SecondaryType.A2_INCORRECT_INDENTATION
    assert suggestion.confidence >= 0.9


def test_secondary_name_error(py_profile):
    stderr = "Traceback (most recent call last):\nNameError: name 'MOD' is not defined\n"
    outcome = failing_outcome(stderr)
    primary = classify_primary(outcome, py_profile)
    suggestion = classify_secondary(outcome, "return result", primary, py_profile)
    assert suggestion.label.secondary is SecondaryType.B2_DEFINITION_MISSING


def test_secondary_timeout(py_profile):
    outcome = failing_outcome("", verdict=Verdict.TIMEOUT)
    primary = classify_primary(outcome, py_profile)
    suggestion = classify_secondary(outcome, "while True: pass", primary, py_profile)
    assert suggestion.label.secondary is SecondaryType.B5_MINORS
    assert suggestion.label.tertiary is TertiaryType.TIMEOUT


def test_secondary_functional_low_confidence(py_profile):
    outcome = failing_outcome("AssertionError\n")
    primary = classify_primary(outcome, py_profile)
    suggestion = classify_secondary(outcome, "def f(): pass", primary, py_profile)
    assert suggestion.label.secondary is SecondaryType.C1_MISUNDERSTANDING_LOGIC
    assert suggestion.confidence <= 0.3


def test_secondary_unknown_exception_confidence_zero(py_profile):
    stderr = "Traceback (most recent call last):\nsocket.gaierror: lookup failed\n"
    outcome = failing_outcome(stderr)
    primary = classify_primary(outcome, py_profile)
    suggestion = classify_secondary(outcome, "", primary, py_profile)
    assert suggestion.confidence <= 0.2


# --- root causes ------------------------------------------------------------------

def make_task():
    return Task(id="t", suite="mini", description="do the thing",
                tests=(UnitTest(id="t0", assertion="assert f() == 1"),),
                io_mode=IoMode.CALL_BASED)


THREE_CAUSES = """Possible root causes:
1. Off-by-one in the loop bound.
   The range excludes the final element.
2. Wrong initial value.
   Starting from 0 breaks negative-only inputs.
3. Misread requirement.
   The function should concatenate, not add.
"""


def test_root_causes_parses_three():
    backend = MockBackend([THREE_CAUSES])
    causes = suggest_root_causes(make_task(), "code", failing_outcome("AssertionError"), backend)
    assert causes.parsed_count == 3
    assert not causes.low_quality
    assert causes.causes[0].summary == "Off-by-one in the loop bound."
    assert "final element" in causes.causes[0].explanation


def test_root_causes_pads_shortfall():
    backend = MockBackend(["1. Only cause one.\n2. And two."])
    causes = suggest_root_causes(make_task(), "code", failing_outcome("AssertionError"), backend)
    assert causes.parsed_count == 2
    assert causes.low_quality
    assert causes.causes[2].placeholder


def test_root_causes_retries_once_then_fails():
    backend = MockBackend(["no numbers here", "still prose"])
    with pytest.raises(MalformedResponse):
        suggest_root_causes(make_task(), "code", failing_outcome("AssertionError"), backend)
    assert backend.call_count == 2


def test_root_causes_backend_down():
    backend = MockBackend([])
    with pytest.raises(ModelUnavailable):
        suggest_root_causes(make_task(), "code", failing_outcome("AssertionError"), backend)


# --- merge_review --------------------------------------------------------------------

def human(path: str) -> BugLabel:
    return parse_label_code(path, provenance=Provenance.HUMAN)


def test_merge_two_agreeing_reviews_finalize():
    auto = parse_label_code("C.1", provenance=Provenance.HEURISTIC, confidence=0.3)
    result = merge_review(auto, [human("C.2"), human("C.2")])
    assert result.label.path == "C.2"
    assert result.finalized and not result.disagreement


def test_merge_disagreement_flags_and_stays_open():
    auto = parse_label_code("C.1", provenance=Provenance.HEURISTIC)
    result = merge_review(auto, [human("C.1/MissingCornerCases"), human("C.3")])
    assert result.disagreement and not result.finalized


def test_merge_no_reviews_keeps_auto():
    auto = parse_label_code("B.2", provenance=Provenance.HEURISTIC, confidence=0.85)
    result = merge_review(auto, [])
    assert result.label is auto
    assert result.label.provenance is Provenance.HEURISTIC
    assert not result.finalized


def test_merge_rejects_non_human_review():
    auto = parse_label_code("C.1")
    with pytest.raises(InconsistentPath):
        merge_review(auto, [parse_label_code("C.2", provenance=Provenance.HEURISTIC)])


@given(st.lists(st.sampled_from(["C.1", "C.2", "C.3", "B.1", "C.1/MissingCornerCases"]),
                max_size=6))
def test_merge_idempotent(paths):
    auto = parse_label_code("C.1", provenance=Provenance.HEURISTIC)
    reviews = [human(p) for p in paths]
    first = merge_review(auto, reviews)
    second = merge_review(auto, reviews)
    assert first == second
