import sys

import numpy as np
import pytest

from memmap.model import Dataset


def sin_dataset(N=200, seed=0, noise=0.05, outputs=("sin",)):
    """y = sin(2 pi x) (and optionally cos) + N(0, noise^2), x ~ U[0, 1]."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, N)
    funcs = {"sin": np.sin, "cos": np.cos}
    Y = np.column_stack([funcs[f](2 * np.pi * x) + rng.normal(0.0, noise, N) for f in outputs])
    return Dataset(x[:, None], Y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sin_data():
    return sin_dataset()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
