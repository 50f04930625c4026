import re

import numpy as np
import pytest

from dualloco import Dataset

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_ACCEPTANCE.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num} ({name}): {status}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def low_rank_regression(n, p, r, seed, noise=0.1):
    """X = A B' with Gaussian factors, unit-norm signal, Gaussian noise."""
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, r)) @ g.standard_normal((p, r)).T
    beta = g.standard_normal(p)
    beta /= np.linalg.norm(beta)
    y = X @ beta + noise * g.standard_normal(n)
    return Dataset(X, y)


def classification(n, p, seed):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, p))
    y = np.sign(X @ g.standard_normal(p) + 0.3 * g.standard_normal(n))
    y[y == 0] = 1.0
    return Dataset(X, y)


@pytest.fixture
def small_regression():
    return low_rank_regression(80, 24, 24, seed=3)


@pytest.fixture
def small_classification():
    return classification(80, 24, seed=4)
