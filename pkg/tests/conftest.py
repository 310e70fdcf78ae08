from __future__ import annotations

import warnings

import numpy as np
import pytest

from spinsqueeze.params import ValidityWarning

# outcome lines collected by the acceptance module, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_configure(config):
    warnings.filterwarnings("ignore", category=ValidityWarning)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
