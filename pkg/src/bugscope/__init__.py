"""bugscope: an evaluation harness for machine-generated code.

Runs candidate programs against unit tests in process-isolated
sandboxes, classifies failures into a three-level bug taxonomy, computes
code-characteristic metrics, drives an iterative self-critique repair
loop, screens benchmark corpora for near-duplicates, and serves a human
triage workflow over HTTP.
"""

from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path to a bundled data file (e.g. the mini benchmark)."""
    return Path(__file__).parent / "data" / name
