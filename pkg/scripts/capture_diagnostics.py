#!/usr/bin/env python3
"""Regenerate the classifier rule-suite corpus.

Runs a fixed set of small programs through the sandbox, captures the
interpreter diagnostics they actually produce, attaches the hand label
for each, and writes tests/data/diagnostics_corpus.jsonl. The committed
corpus is authoritative; rerun this only to extend it, and re-check the
hand labels when you do.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bugscope.model import LanguageProfile
from bugscope.sandbox import ExecLimits, execute_driver

PROFILE = LanguageProfile(interpreter_cmd=(sys.executable, "{file}"))

# (name, program, stdin, kind, expected primary/secondary/tertiary)
# kind: "exception" (nonzero exit), "wrong_output" (clean run, bad stdout),
#       "timeout" (runs until killed)
CASES = [
    # --- syntax ---------------------------------------------------------
    ("s_unclosed_paren", 'print((1, 2)\n', None, "exception", "Syntax", "A.1", None),
    ("s_missing_colon", "def f()\n    return 1\n", None, "exception", "Syntax", "A.1", None),
    ("s_unclosed_string", 'x = "abc\n', None, "exception", "Syntax", "A.1", None),
    ("s_invalid_assign", "def = 3\n", None, "exception", "Syntax", "A.1", None),
    ("s_eof_in_expr", "x = (1 +\n", None, "exception", "Syntax", "A.1", None),
    ("s_unexpected_indent", "x = 1\n    y = 2\n", None, "exception", "Syntax", "A.2", None),
    ("s_unindent_mismatch", "def f():\n        x = 1\n      return x\nf()\n",
     None, "exception", "Syntax", "A.2", None),
    ("s_tab_space_mix", "def f():\n\tx = 1\n        return x\nf()\n",
     None, "exception", "Syntax", "A.2", None),
    # import * inside a function is reported as a SyntaxError, so the
    # secondary heuristic cannot tell it from A.1; primary only.
    ("s_import_star_in_function", "def f():\n    from heapq import *\n",
     None, "exception", "Syntax", None, None),
    ("s_module_not_found", "import no_such_module_xyz\n",
     None, "exception", "Syntax", "A.3", None),
    ("s_import_name_missing", "from math import no_such_name\n",
     None, "exception", "Syntax", "A.3", None),
    # --- runtime --------------------------------------------------------
    ("r_zero_division", "n = 0\nprint(1 / n)\n", None, "exception", "Runtime", "B.3", None),
    ("r_index_error", "xs = [1]\nprint(xs[5])\n", None, "exception", "Runtime", "B.3", None),
    ("r_key_error", "d = {}\nprint(d['k'])\n", None, "exception", "Runtime", "B.3", None),
    ("r_name_error", "print(undefined_var)\n", None, "exception", "Runtime", "B.2", None),
    ("r_unbound_local",
     "def f():\n    x += 1\n    return x\nf()\n",
     None, "exception", "Runtime", "B.2", None),
    ("r_tuple_sort",
     "def find_min_diff(tup, n):\n    tup.sort()\n    return tup\nfind_min_diff((3, 1), 2)\n",
     None, "exception", "Runtime", "B.1", "AttributeKind"),
    ("r_str_plus_int", 'print("a" + 1)\n', None, "exception", "Runtime", "B.1", "TypeKind"),
    ("r_bad_int_parse", 'print(int("abc"))\n', None, "exception", "Runtime", "B.1", "ValueKind"),
    ("r_missing_argument",
     "def f(a, b):\n    return a + b\nf(1)\n",
     None, "exception", "Runtime", "B.4", None),
    ("r_custom_exception",
     'class PuzzleError(Exception):\n    pass\nraise PuzzleError("unspecified branch")\n',
     None, "exception", "Runtime", "B.5", "LlmDefinedException"),
    ("r_recursion_depth",
     "import sys\nsys.setrecursionlimit(60)\ndef f(n):\n    return f(n + 1)\nf(0)\n",
     None, "exception", "Runtime", None, None),
    ("r_chained_traceback",
     "try:\n    {}['k']\nexcept KeyError as exc:\n    raise ValueError('bad value') from exc\n",
     None, "exception", "Runtime", "B.1", "ValueKind"),
    ("r_timeout_infinite_loop", "while True:\n    pass\n", None, "timeout",
     "Runtime", "B.5", "Timeout"),
    # --- functional ------------------------------------------------------
    ("f_assert_simple", "assert 1 == 2\n", None, "exception", "Functional", "C.1", None),
    ("f_assert_square",
     "def square(x):\n    return x + x\nassert square(3) == 9\n",
     None, "exception", "Functional", "C.1", None),
    ("f_assert_message",
     'def mean(xs):\n    return sum(xs) // len(xs)\nassert mean([1, 2]) == 1.5, "wrong mean"\n',
     None, "exception", "Functional", "C.1", None),
    ("f_assert_check_harness",
     "def candidate(x):\n    return x * 2\ndef check(f):\n    assert f(1) == 2\n    assert f(5) == 11\ncheck(candidate)\n",
     None, "exception", "Functional", "C.1", None),
    ("f_assert_helper_chain",
     "def inner(x):\n    assert x > 0\ndef outer(x):\n    inner(x)\nouter(-1)\n",
     None, "exception", "Functional", "C.1", None),
    ("f_assert_max_sum",
     "def max_sum_list(lists):\n    best = 0\n    out = None\n    for lst in lists:\n        if sum(lst) > best:\n            best = sum(lst)\n            out = lst\n    return out\nassert max_sum_list([[-1], [-2]]) == [-1]\n",
     None, "exception", "Functional", "C.1", None),
    ("f_wrong_output_clean", "print(3.0)\n", None, "wrong_output", "Functional", "C.1", None),
    ("f_wrong_output_sum", "a, b = map(int, input().split())\nprint(a - b)\n",
     "2 3\n", "wrong_output", "Functional", "C.1", None),
    ("f_wrong_output_extra_line", "print('ok')\nprint('extra')\n", None,
     "wrong_output", "Functional", "C.1", None),
    ("f_wrong_output_order", "print('b')\nprint('a')\n", None,
     "wrong_output", "Functional", "C.1", None),
    # --- mixed markers: priority must pick Syntax ------------------------
    ("m_fake_syntax_then_runtime",
     'import sys\nsys.stderr.write("SyntaxError: invalid syntax\\n")\nn = 0\nprint(1 / n)\n',
     None, "exception", "Syntax", None, None),
    ("m_syntax_invalid_in_message",
     "raise ValueError('Syntax invalid near token 7')\n",
     None, "exception", "Syntax", None, None),
    ("m_assert_with_syntax_marker",
     "assert False, 'parser saw SyntaxError earlier'\n",
     None, "exception", "Syntax", None, None),
    ("m_import_marker_in_message",
     "raise TypeError('wrapped ModuleNotFoundError for plugin')\n",
     None, "exception", "Syntax", None, None),
    ("m_timeout_with_syntax_noise",
     'import sys\nsys.stderr.write("SyntaxError: invalid syntax\\n")\nsys.stderr.flush()\nwhile True:\n    pass\n',
     None, "timeout", "Syntax", None, None),
]


def main() -> None:
    out_path = Path(__file__).resolve().parents[1] / "tests" / "data" / "diagnostics_corpus.jsonl"
    entries = []
    for name, program, stdin, kind, primary, secondary, tertiary in CASES:
        limits = ExecLimits(time_seconds=1.0 if kind == "timeout" else 10.0)
        raw = execute_driver(program, PROFILE, stdin=stdin, limits=limits)
        if kind == "timeout":
            assert raw.timed_out, name
            verdict = "timeout"
        elif kind == "exception":
            assert raw.exit_status != 0, f"{name}: expected failure, got exit 0"
            verdict = "exception"
        else:
            assert raw.exit_status == 0, f"{name}: expected clean run"
            verdict = "wrong_output"
        entries.append({
            "name": name,
            "code": program,
            "verdict": verdict,
            "timed_out": raw.timed_out,
            "exit_status": raw.exit_status,
            "stdout": raw.stdout,
            "stderr": raw.stderr,
            "expected_primary": primary,
            "expected_secondary": secondary,
            "expected_tertiary": tertiary,
        })
    with open(out_path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
    print(f"wrote {len(entries)} entries to {out_path}")


if __name__ == "__main__":
    main()
