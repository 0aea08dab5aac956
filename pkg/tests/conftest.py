import sys

import numpy as np
import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion after the run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


_STUDY_CACHE: dict[str, object] = {}


def cached_study(name: str):
    """Run a preset study once per session; several test modules share it."""
    from pmpo import run_study

    if name not in _STUDY_CACHE:
        _STUDY_CACHE[name] = run_study(name)
    return _STUDY_CACHE[name]


def central_difference(fn, x, eps=1e-6):
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = eps
        grad[i] = (fn(x + bump) - fn(x - bump)) / (2.0 * eps)
    return grad


def assert_gradient_close(fn, grad, x, rtol=1e-5, atol=1e-7, eps=1e-6):
    """Compare an analytic gradient against central differences of fn at x."""
    numeric = central_difference(fn, x, eps)
    np.testing.assert_allclose(grad, numeric, rtol=rtol, atol=atol)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
