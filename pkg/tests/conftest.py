import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mirrorloc.model import EffectiveModel  # noqa: E402
from mirrorloc.params import DimensionlessParams  # noqa: E402


@pytest.fixture
def canonical():
    return DimensionlessParams()


@pytest.fixture
def harmonic_model():
    """Pure unit harmonic well: no drive, no arctan well."""
    return EffectiveModel(DimensionlessParams(beta=0.0, lam_eff=0.0))


@pytest.fixture
def undriven_model():
    """Canonical arctan well without modulation."""
    return EffectiveModel(DimensionlessParams(lam_eff=0.0))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
