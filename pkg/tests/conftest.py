import sys

import numpy as np
import pytest

from foliate import _pykernels, matgroup

try:
    from foliate import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
if _kernels is not None:
    BACKENDS.append(pytest.param(_kernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def taylor_exp(X, terms=30):
    """Truncated power series; accurate oracle for small ``X``."""
    n = X.shape[0]
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms):
        term = term @ X / k
        out = out + term
    return out


def random_unit_norm(rng, n=3, scale=1.0):
    X = rng.standard_normal((n, n))
    return scale * X / np.linalg.norm(X, 2)


__all__ = ["matgroup", "taylor_exp", "random_unit_norm"]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
