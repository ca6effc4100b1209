"""Isolated execution of candidate programs against unit tests.

Each unit test runs in a fresh child process built from the language
profile's interpreter command, with a wall-clock kill, capped output
capture, and an environment reduced to an explicit allowlist. Isolation
is process-level by design: the workload is benchmark code, not an
adversary, so there is no syscall filtering or container layer here.

Per-test isolation also means a crash in one test can never mask the
verdicts of later tests, which the failure classifier depends on.
"""

from __future__ import annotations

import os
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .model import Comparison, ComparisonMode, IoMode, LanguageProfile, Task, UnitTest


class ModeMismatch(ValueError):
    """Test shape contradicts the task's I/O mode."""


class SandboxSpawnFailure(RuntimeError):
    """The interpreter itself could not be started (harness problem,
    not a candidate failure)."""


@dataclass(frozen=True)
class ExecLimits:
    time_seconds: float = 10.0
    output_cap_bytes: int = 1 << 20
    env: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.time_seconds <= 0:
            raise ValueError("time limit must be positive")
        if self.output_cap_bytes < 0:
            raise ValueError("output cap must be non-negative")


DEFAULT_LIMITS = ExecLimits()

# global cap on concurrent sandbox children, shared by all threads
_child_slots = threading.BoundedSemaphore(16)


def set_max_children(n: int) -> None:
    global _child_slots
    if n < 1:
        raise ValueError("child cap must be >= 1")
    _child_slots = threading.BoundedSemaphore(n)


@dataclass(frozen=True)
class RawExecution:
    """What one child process did: exit status (negative = killed by that
    signal), captured streams truncated at the cap, and timing."""

    exit_status: int
    stdout: str
    stderr: str
    wall_time: float
    timed_out: bool


class Verdict(str, Enum):
    PASS = "pass"
    WRONG_OUTPUT = "wrong_output"
    EXCEPTION = "exception"
    TIMEOUT = "timeout"


class Overall(str, Enum):
    PASS = "Pass"
    FAIL = "Fail"


@dataclass(frozen=True)
class ExecutionOutcome:
    per_test: tuple[tuple[str, Verdict], ...]
    overall: Overall
    first_failure: Optional[RawExecution] = None
    first_failure_test_id: Optional[str] = None

    @property
    def first_failure_verdict(self) -> Optional[Verdict]:
        for test_id, verdict in self.per_test:
            if verdict is not Verdict.PASS:
                return verdict
        return None

    def to_dict(self) -> dict:
        d: dict = {
            "per_test": [[tid, v.value] for tid, v in self.per_test],
            "overall": self.overall.value,
            "first_failure_test_id": self.first_failure_test_id,
        }
        if self.first_failure is not None:
            ff = self.first_failure
            d["first_failure"] = {
                "exit_status": ff.exit_status,
                "stdout": ff.stdout,
                "stderr": ff.stderr,
                "wall_time": ff.wall_time,
                "timed_out": ff.timed_out,
            }
        else:
            d["first_failure"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionOutcome":
        ff = d.get("first_failure")
        return cls(
            per_test=tuple((tid, Verdict(v)) for tid, v in d["per_test"]),
            overall=Overall(d["overall"]),
            first_failure=RawExecution(**ff) if ff else None,
            first_failure_test_id=d.get("first_failure_test_id"),
        )


def build_driver(task: Task, code: str, test: UnitTest, profile: LanguageProfile) -> str:
    """Produce the program actually executed for one test.

    call_based: candidate code with the assertion appended on a new line.
    stdio: the candidate code unmodified (stdin supplied at execution).
    """
    if task.io_mode is IoMode.CALL_BASED:
        if test.assertion is None:
            raise ModeMismatch(f"test {test.id} has no assertion for a call_based task")
        return code + "\n" + test.assertion
    if test.stdin is None or test.expected_stdout is None:
        raise ModeMismatch(f"test {test.id} lacks stdin/expected_stdout for a stdio task")
    return code


def execute_driver(
    driver: str,
    profile: LanguageProfile,
    stdin: Optional[str] = None,
    limits: ExecLimits = DEFAULT_LIMITS,
) -> RawExecution:
    """Run one driver in a fresh child process under the profile's
    interpreter, killing the whole process group at the time limit."""
    workdir = tempfile.mkdtemp(prefix="bugscope-exec-")
    try:
        driver_path = Path(workdir) / "driver.py"
        driver_path.write_text(driver, encoding="utf-8")

        argv = [driver_path.as_posix() if part == "{file}" else part
                for part in profile.interpreter_cmd]
        resolved = shutil.which(argv[0])
        if resolved is None:
            raise SandboxSpawnFailure(f"interpreter not found: {argv[0]!r}")
        argv[0] = resolved

        out_path = Path(workdir) / "stdout"
        err_path = Path(workdir) / "stderr"
        timed_out = False
        start = time.monotonic()
        with _child_slots, open(out_path, "wb") as out_f, open(err_path, "wb") as err_f:
            try:
                proc = subprocess.Popen(
                    argv,
                    stdin=subprocess.PIPE if stdin is not None else subprocess.DEVNULL,
                    stdout=out_f,
                    stderr=err_f,
                    cwd=workdir,
                    env=dict(limits.env),
                    start_new_session=True,
                )
            except OSError as exc:
                raise SandboxSpawnFailure(f"failed to spawn {argv[0]!r}: {exc}") from exc
            try:
                proc.communicate(
                    input=stdin.encode("utf-8") if stdin is not None else None,
                    timeout=limits.time_seconds,
                )
            except subprocess.TimeoutExpired:
                timed_out = True
                _kill_group(proc)
                proc.wait()
            except BrokenPipeError:
                # child exited without draining stdin; its status still counts
                proc.wait()
        wall_time = time.monotonic() - start

        cap = limits.output_cap_bytes
        stdout = out_path.read_bytes()[:cap].decode("utf-8", errors="replace")
        stderr = err_path.read_bytes()[:cap].decode("utf-8", errors="replace")
        # the throwaway workdir path is harness noise; scrubbing it keeps
        # diagnostics (and everything built from them) reproducible
        stdout = stdout.replace(workdir, "<sandbox>")
        stderr = stderr.replace(workdir, "<sandbox>")
        return RawExecution(
            exit_status=proc.returncode,
            stdout=stdout,
            stderr=stderr,
            wall_time=wall_time,
            timed_out=timed_out,
        )
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def evaluate_candidate(
    task: Task,
    code: str,
    profile: LanguageProfile,
    limits: ExecLimits = DEFAULT_LIMITS,
) -> ExecutionOutcome:
    """Run every unit test of `task` against `code`, each in its own child.

    Tests never short-circuit: a syntax error on test one still leaves
    verdicts for the rest. first_failure keeps the raw execution of the
    earliest failing test in list order.
    """
    per_test: list[tuple[str, Verdict]] = []
    first_failure: Optional[RawExecution] = None
    first_failure_test_id: Optional[str] = None

    for test in task.tests:
        driver = build_driver(task, code, test, profile)
        stdin = test.stdin if task.io_mode is IoMode.STDIO else None
        raw = execute_driver(driver, profile, stdin=stdin, limits=limits)

        if raw.timed_out:
            verdict = Verdict.TIMEOUT
        elif raw.exit_status != 0:
            verdict = Verdict.EXCEPTION
        elif task.io_mode is IoMode.STDIO:
            if compare_output(raw.stdout, test.expected_stdout or "", test.comparison):
                verdict = Verdict.PASS
            else:
                verdict = Verdict.WRONG_OUTPUT
        else:
            verdict = Verdict.PASS

        per_test.append((test.id, verdict))
        if verdict is not Verdict.PASS and first_failure is None:
            first_failure = raw
            first_failure_test_id = test.id

    overall = Overall.PASS if all(v is Verdict.PASS for _, v in per_test) else Overall.FAIL
    return ExecutionOutcome(
        per_test=tuple(per_test),
        overall=overall,
        first_failure=first_failure,
        first_failure_test_id=first_failure_test_id,
    )


def compare_output(actual: str, expected: str, comparison: Comparison) -> bool:
    if comparison.mode is ComparisonMode.EXACT:
        return actual == expected
    if comparison.mode is ComparisonMode.WHITESPACE_NORMALIZED:
        return _normalize(actual) == _normalize(expected)
    eps = comparison.eps or 0.0
    got, want = actual.split(), expected.split()
    if len(got) != len(want):
        return False
    for g, w in zip(got, want):
        try:
            if abs(float(g) - float(w)) > eps:
                return False
        except ValueError:
            if g != w:
                return False
    return True


def _normalize(text: str) -> str:
    """Strip trailing whitespace per line and trailing blank lines."""
    lines = [line.rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines)
