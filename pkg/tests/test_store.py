import json
import threading

import pytest

from bugscope.ingest import export_tasks, ingest_tasks
from bugscope.model import (
    Candidate,
    CodeMetrics,
    Difficulty,
    ExtractionMethod,
    GenerationParams,
    IoMode,
    MetricsDelta,
)
from bugscope.reports import final_records, report
from bugscope.sandbox import ExecutionOutcome, Overall, RawExecution, Verdict
from bugscope.store import (
    DuplicateKey,
    EmptyRun,
    NotFound,
    RunRecord,
    RunStore,
    SampleKey,
    VersionConflict,
)
from bugscope.taxonomy import Provenance, parse_label_code


def outcome(passed: bool) -> ExecutionOutcome:
    if passed:
        return ExecutionOutcome(per_test=(("t0", Verdict.PASS),), overall=Overall.PASS)
    raw = RawExecution(1, "", "Traceback (most recent call last):\nAssertionError\n",
                       0.01, False)
    return ExecutionOutcome(per_test=(("t0", Verdict.EXCEPTION),), overall=Overall.FAIL,
                            first_failure=raw, first_failure_test_id="t0")


def make_record(run_id, task_id, model_id, iteration=0, passed=True,
                label_path=None, comments=0, delta=None):
    code = "def f():\n    return 1"
    label = parse_label_code(
        label_path or ("PASS" if passed else "C.1"),
        provenance=Provenance.AUTOMATIC if passed else Provenance.HEURISTIC,
        confidence=1.0 if passed else 0.3,
    )
    return RunRecord(
        run_id=run_id,
        task_id=task_id,
        model_id=model_id,
        candidate=Candidate(task_id=task_id, model_id=model_id, iteration=iteration,
                            raw_response=code, code=code, params=GenerationParams(),
                            extraction=ExtractionMethod.VERBATIM),
        outcome=outcome(passed),
        label=label,
        metrics=CodeMetrics(loc=2, cyclomatic_complexity=1, api_calls=0,
                            comment_lines=comments, tokens=9),
        delta=delta,
        created_at="2026-01-01T00:00:00+00:00",
    )


@pytest.fixture
def store(tmp_path) -> RunStore:
    s = RunStore(tmp_path / "runs")
    s.create_run("r1", {"seed": 0})
    return s


# --- records ---------------------------------------------------------------

def test_duplicate_key_rejected(store):
    record = make_record("r1", "task-a", "model-x")
    store.record_result(record)
    with pytest.raises(DuplicateKey):
        store.record_result(make_record("r1", "task-a", "model-x"))


def test_write_then_read_back_identical(store):
    record = make_record("r1", "task-a", "model-x", passed=False, label_path="B.2")
    store.record_result(record)
    loaded = store.get_record(SampleKey("r1", "task-a", "model-x", 0))
    assert loaded.to_dict() == record.to_dict()


def test_concurrent_distinct_writes_all_present(store):
    errors = []

    def writer(i):
        try:
            store.record_result(make_record("r1", f"task-{i:03d}", "model-x"))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=writer, args=(i,)) for i in range(24)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(list(store.iter_records("r1"))) == 24


def test_empty_run_raises(store):
    with pytest.raises(EmptyRun):
        store.records("r1")
    with pytest.raises(NotFound):
        store.get_record(SampleKey("r1", "nope", "m", 0))
    with pytest.raises(NotFound):
        store.records("never-created")


def test_sample_key_string_round_trip():
    key = SampleKey("r1", "HumanEval/0", "model-x", 2)
    assert SampleKey.parse(str(key)) == key


# --- label versioning ---------------------------------------------------------

def test_two_agreeing_reviews_finalize(store):
    record = make_record("r1", "task-a", "model-x", passed=False)
    store.record_result(record)
    key = record.key
    store.post_label(key, parse_label_code("C.2"), "alice", base_version=0)
    state = store.post_label(key, parse_label_code("C.2"), "bob", base_version=1)
    assert state.label.path == "C.2"
    assert state.finalized and not state.disagreement
    assert state.version == 2
    assert state.label.provenance is Provenance.HUMAN


def test_stale_base_version_conflicts_without_write(store):
    record = make_record("r1", "task-a", "model-x", passed=False)
    store.record_result(record)
    key = record.key
    store.post_label(key, parse_label_code("C.2"), "alice", base_version=0)
    with pytest.raises(VersionConflict):
        store.post_label(key, parse_label_code("C.3"), "bob", base_version=0)
    assert len(store.label_history(key)) == 1


def test_concurrent_stale_write_exactly_one_conflict(store):
    record = make_record("r1", "task-a", "model-x", passed=False)
    store.record_result(record)
    key = record.key
    conflicts, successes = [], []
    barrier = threading.Barrier(2)

    def reviewer(name, path):
        barrier.wait()
        try:
            store.post_label(key, parse_label_code(path), name, base_version=0)
            successes.append(name)
        except VersionConflict:
            conflicts.append(name)

    threads = [threading.Thread(target=reviewer, args=("alice", "C.2")),
               threading.Thread(target=reviewer, args=("bob", "C.3"))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(successes) == 1 and len(conflicts) == 1
    history = store.label_history(key)
    assert [e["version"] for e in history] == [1]


def test_disagreement_flow(store):
    record = make_record("r1", "task-a", "model-x", passed=False)
    store.record_result(record)
    key = record.key
    store.post_label(key, parse_label_code("C.1/MissingCornerCases"), "alice", 0)
    state = store.post_label(key, parse_label_code("C.3"), "bob", 1)
    assert state.disagreement and not state.finalized
    # joint resolution: both resubmit the agreed path
    store.post_label(key, parse_label_code("C.3"), "alice", 2)
    state = store.post_label(key, parse_label_code("C.3"), "bob", 3)
    assert state.finalized and not state.disagreement


def test_export_labels_deterministic_and_flagged(store):
    a = make_record("r1", "task-a", "model-x", passed=False)
    b = make_record("r1", "task-b", "model-x", passed=True)
    store.record_result(a)
    store.record_result(b)
    store.post_label(a.key, parse_label_code("C.2"), "alice", 0)
    store.post_label(a.key, parse_label_code("C.1"), "bob", 1)

    first = store.export_labels("r1")
    second = store.export_labels("r1")
    assert first == second
    lines = [json.loads(line) for line in first.splitlines()]
    assert [l["task_id"] for l in lines] == ["task-a", "task-b"]
    flagged = lines[0]
    assert flagged["disagreement"] is True
    assert flagged["label_path"] == "C.1"
    assert sorted(flagged["reviewers"]) == ["alice", "bob"]
    assert lines[1]["label_path"] == "PASS"
    assert lines[1]["provenance"] == "automatic"


def test_append_only_files_grow(store, tmp_path):
    record = make_record("r1", "task-a", "model-x", passed=False)
    store.record_result(record)
    records_path = store.run_dir("r1") / "records.jsonl"
    before = records_path.read_bytes()
    store.post_label(record.key, parse_label_code("C.2"), "alice", 0)
    store.record_result(make_record("r1", "task-b", "model-x"))
    after = records_path.read_bytes()
    assert after.startswith(before)


# --- ingestion ---------------------------------------------------------------

def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


def test_ingest_rwpb(tmp_path):
    record = {
        "id": "rw-001",
        "signature": "def choose(xs, n):",
        "docstring": "Pick n items from xs, preserving order.",
        "body": "def choose(xs, n):\n    return xs[:n]",
        "tests": [f"assert choose({list(range(5))}, {i}) == {list(range(i))}"
                  for i in range(5)],
    }
    path = tmp_path / "rwpb.jsonl"
    write_jsonl(path, [record])
    result = ingest_tasks(path, "rwpb")
    assert not result.errors
    task = result.tasks[0]
    assert task.io_mode is IoMode.CALL_BASED
    assert task.canonical_solution.startswith("def choose")
    assert len(task.tests) == 5
    assert task.suite == "rwpb"


def test_ingest_apps_plus(tmp_path):
    record = {
        "id": "apps-17",
        "question": "Read two integers and print their sum.",
        "solutions": ["a, b = map(int, input().split())\nprint(a + b)"],
        "input_output": {"inputs": ["2 3\n", "10 -4\n"], "outputs": ["5\n", "6\n"]},
        "difficulty": "competition",
    }
    path = tmp_path / "apps.jsonl"
    write_jsonl(path, [record])
    result = ingest_tasks(path, "apps_plus")
    task = result.tasks[0]
    assert task.io_mode is IoMode.STDIO
    assert task.difficulty is Difficulty.COMPETITION
    assert task.tests[0].stdin == "2 3\n"
    assert task.tests[0].expected_stdout == "5\n"


def test_ingest_rejects_zero_tests(tmp_path):
    record = {"id": "rw-002", "signature": "def f():", "docstring": "Do nothing.",
              "body": "def f():\n    return None", "tests": []}
    path = tmp_path / "rwpb.jsonl"
    write_jsonl(path, [record])
    result = ingest_tasks(path, "rwpb")
    assert not result.tasks
    assert result.errors[0].record == "rw-002"
    assert any("empty_tests" in p for p in result.errors[0].problems)


def test_ingest_he_plus_harness(tmp_path):
    record = {
        "task_id": "HumanEval/0",
        "prompt": 'def add(a, b):\n    """Add two numbers."""\n',
        "canonical_solution": "    return a + b\n",
        "entry_point": "add",
        "test": "def check(candidate):\n    assert candidate(1, 2) == 3\n",
    }
    path = tmp_path / "he.jsonl"
    write_jsonl(path, [record])
    result = ingest_tasks(path, "he_plus")
    task = result.tasks[0]
    assert task.canonical_solution.startswith("def add")
    assert task.tests[0].assertion.endswith("check(add)")
    assert task.signature == "def add(a, b):"


def test_ingest_mbpp_plus(tmp_path):
    record = {"task_id": "11", "text": "Write a function to reverse a list.",
              "code": "def rev(xs):\n    return xs[::-1]",
              "test_list": ["assert rev([1,2]) == [2,1]"]}
    path = tmp_path / "mbpp.jsonl"
    write_jsonl(path, [record])
    result = ingest_tasks(path, "mbpp_plus")
    assert result.tasks[0].suite == "mbpp-plus"
    assert result.tasks[0].tests[0].assertion == "assert rev([1,2]) == [2,1]"


def test_ingest_unified_round_trip(tmp_path):
    record = {
        "id": "u-1", "suite": "mini", "description": "Square x.",
        "signature": "def square(x):",
        "canonical_solution": "def square(x):\n    return x * x",
        "difficulty": "introductory", "io_mode": "call_based",
        "tests": [{"id": "t0", "assertion": "assert square(2) == 4",
                   "comparison": {"mode": "whitespace_normalized"}}],
    }
    path = tmp_path / "unified.jsonl"
    write_jsonl(path, [record])
    tasks = ingest_tasks(path, "unified").tasks

    exported = export_tasks(tasks)
    path2 = tmp_path / "again.jsonl"
    path2.write_text(exported)
    again = ingest_tasks(path2, "unified").tasks
    assert again == tasks


def test_ingest_flags_image_placeholders(tmp_path):
    record = {
        "id": "apps-img", "question": "See the diagram [image] and count edges.",
        "solutions": ["print(3)"],
        "input_output": {"inputs": [""], "outputs": ["3\n"]},
    }
    path = tmp_path / "apps.jsonl"
    write_jsonl(path, [record])
    kept = ingest_tasks(path, "apps_plus")
    assert kept.flagged == ["apps-img"] and len(kept.tasks) == 1
    dropped = ingest_tasks(path, "apps_plus", drop_flagged=True)
    assert dropped.flagged == ["apps-img"] and not dropped.tasks


def test_ingest_unreadable_file(tmp_path):
    from bugscope.ingest import UnreadableFile
    with pytest.raises(UnreadableFile):
        ingest_tasks(tmp_path / "missing.jsonl", "unified")


# --- reports -------------------------------------------------------------------

def seeded_run(store: RunStore) -> None:
    store.record_result(make_record("r1", "task-a", "model-x", passed=True))
    store.record_result(make_record("r1", "task-b", "model-x", passed=True))
    store.record_result(make_record("r1", "task-c", "model-x", passed=False,
                                    label_path="A.1"))
    store.record_result(make_record("r1", "task-d", "model-x", passed=False,
                                    label_path="C.1"))


def test_taxonomy_distribution_rows(store):
    seeded_run(store)
    table = report(store, "r1", "taxonomy_distribution")
    rows = {row[0]: row[2] for row in table.rows if row[1] == "leaf"}
    assert rows["PASS"] == 50.0
    assert rows["A.1"] == 25.0
    assert rows["C.1"] == 25.0
    assert rows["B.2"] == 0.0
    leaf_sum = sum(row[2] for row in table.rows if row[1] == "leaf")
    assert abs(leaf_sum - 100.0) <= 0.1


def test_taxonomy_distribution_all_pass(store):
    store.record_result(make_record("r1", "task-a", "model-x", passed=True))
    table = report(store, "r1", "taxonomy_distribution")
    rows = {row[0]: row[2] for row in table.rows if row[1] == "leaf"}
    assert rows["PASS"] == 100.0


def test_pass_rates_match_recount(store):
    seeded_run(store)
    table = report(store, "r1", "pass_rates")
    row = table.rows[0]
    assert row[0] == "model-x"
    # independent recount straight off the raw records
    records = list(store.iter_records("r1"))
    passes = sum(1 for r in records if r.outcome.overall is Overall.PASS)
    assert row[2] == passes
    assert row[3] == pytest.approx(100.0 * passes / len(records))


def test_reports_use_final_iteration(store):
    store.record_result(make_record("r1", "task-a", "model-x", iteration=0,
                                    passed=False, label_path="B.2"))
    store.record_result(make_record("r1", "task-a", "model-x", iteration=1,
                                    passed=True))
    finals = final_records(store, "r1")
    assert len(finals) == 1
    assert finals[0].candidate.iteration == 1
    table = report(store, "r1", "pass_rates")
    assert table.rows[0][3] == 100.0


def test_comment_distribution_medians(store):
    for i in range(4):
        store.record_result(make_record("r1", f"good-{i}", "model-x", passed=True,
                                        comments=1))
    for i in range(4):
        store.record_result(make_record("r1", f"bad-{i}", "model-x", passed=False,
                                        comments=4 + i))
    table = report(store, "r1", "comment_distribution")
    rows = {(row[0], row[1]): row for row in table.rows}
    correct_median = rows[("model-x", "correct")][4]
    incorrect_median = rows[("model-x", "incorrect")][4]
    assert incorrect_median > correct_median


def test_metric_deltas_quartiles(store):
    deltas = [MetricsDelta(-6, 1, 0), MetricsDelta(-2, 0, 1), MetricsDelta(-4, 2, 0)]
    for i, delta in enumerate(deltas):
        store.record_result(make_record("r1", f"task-{i}", "model-x", passed=True,
                                        delta=delta))
    table = report(store, "r1", "metric_deltas")
    by_metric = {row[1]: row for row in table.rows}
    assert by_metric["d_loc"][4] == -4.0  # median
    assert by_metric["d_cc"][2] == 0.0    # min
    assert by_metric["d_api"][6] == 1.0   # max


def test_report_csv_byte_deterministic(store):
    seeded_run(store)
    first = report(store, "r1", "taxonomy_distribution").to_csv()
    second = report(store, "r1", "taxonomy_distribution").to_csv()
    assert first == second
    assert first.startswith("label,row_kind,model-x")


def test_report_empty_run(store):
    with pytest.raises(EmptyRun):
        report(store, "r1", "pass_rates")


def test_report_unknown_kind(store):
    seeded_run(store)
    with pytest.raises(ValueError):
        report(store, "r1", "bogus")
