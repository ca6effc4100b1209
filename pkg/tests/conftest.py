import json
import sys
from pathlib import Path

import pytest

from bugscope.model import LanguageProfile
from bugscope.sandbox import ExecLimits, ExecutionOutcome, Overall, RawExecution, Verdict

DATA_DIR = Path(__file__).parent / "data"

_acceptance_results: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_results.append((name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed in _acceptance_results:
        terminalreporter.write_line(f"{name}: {'PASS' if passed else 'FAIL'}")


@pytest.fixture(scope="session")
def py_profile() -> LanguageProfile:
    return LanguageProfile(interpreter_cmd=(sys.executable, "{file}"))


@pytest.fixture(scope="session")
def fast_limits() -> ExecLimits:
    return ExecLimits(time_seconds=8.0)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def diagnostics_corpus() -> list[dict]:
    path = DATA_DIR / "diagnostics_corpus.jsonl"
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def outcome_from_corpus_entry(entry: dict) -> ExecutionOutcome:
    """Rebuild the execution outcome a corpus entry captured."""
    raw = RawExecution(
        exit_status=entry["exit_status"],
        stdout=entry["stdout"],
        stderr=entry["stderr"],
        wall_time=0.1,
        timed_out=entry["timed_out"],
    )
    return ExecutionOutcome(
        per_test=(("t0", Verdict(entry["verdict"])),),
        overall=Overall.FAIL,
        first_failure=raw,
        first_failure_test_id="t0",
    )
