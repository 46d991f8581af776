import numpy as np
import pytest

from gaussmag.averages import AverageEngine
from gaussmag.checks import random_canonical_state, random_symplectic_pair
from gaussmag.core import to_magnetic
from gaussmag.fields import TrigField2D


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def trig_state(rng):
    """A random normalized 2D state in magnetic variables for the trig field."""
    cs = random_canonical_state(rng, 2, 5e-2)
    avg = AverageEngine().averages(TrigField2D(1.0), cs)
    return to_magnetic(cs, avg.A, avg.J)


__all__ = ["random_canonical_state", "random_symplectic_pair"]


# -- acceptance report -------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
