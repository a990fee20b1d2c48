import numpy as np
import pytest

from neural_granger.panel import TimeSeriesPanel
from neural_granger.simulate import LorenzSpec, simulate_lorenz96


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_lorenz():
    panel, truth = simulate_lorenz96(LorenzSpec(p=6, F=10, T=120, seed=3))
    panel, _, _ = panel.standardized()
    return panel, truth


def random_panel(rng, p, lengths):
    return TimeSeriesPanel([rng.standard_normal((T, p)) for T in lengths])


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
