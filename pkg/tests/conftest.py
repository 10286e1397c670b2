import os
import time
import warnings
from pathlib import Path

import pytest

from crisis_assoc.panel import load_panel

DATASET_ENV = "CRISIS_PANEL_PATH"


def dataset_path():
    """Local copy of the Reinhart-Rogoff crisis panel (long layout), if any."""
    candidates = [os.environ.get(DATASET_ENV), Path(__file__).parent / "data" / "rr_banking_crises.csv"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


@pytest.fixture(scope="session")
def rr_panel():
    path = dataset_path()
    if path is None:
        msg = f"Reinhart-Rogoff panel not found; set {DATASET_ENV} to run dataset checks"
        warnings.warn(msg)
        pytest.skip(msg)
    layout = "wide" if path.read_text(encoding="utf-8").splitlines()[0].count(",") > 3 else "long"
    return load_panel(path, layout)


_ACCEPTANCE_LINES: list[str] = []


class _Criterion:
    def __init__(self, label: str):
        self.label = label
        self.start = 0.0

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            status = "PASS"
        elif issubclass(exc_type, pytest.skip.Exception):
            status = "SKIP"
        else:
            status = "FAIL"
        line = f"[{status}] {self.label} ({elapsed:.2f} s)"
        if status == "SKIP":
            line += f": {exc}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return False


@pytest.fixture
def criterion():
    """``with criterion("AC1 ..."):`` records a pass/fail/skip line for the acceptance report."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
