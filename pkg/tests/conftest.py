import sys

import numpy as np
import pytest

from longmem import varfima


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def white2(rng):
    """Seeded bivariate Gaussian white noise, n = 128."""
    return rng.standard_normal((128, 2))


@pytest.fixture(scope="session")
def varfima_pair():
    spec = varfima.VarfimaSpec.bivariate(0.2, 0.3, 0.4, truncation=5000, seed=11, n=512)
    return varfima.simulate(spec)


def brute_dft(x, lam):
    """Textbook DFT sum with t = 1..n; x is (n, q)."""
    n, q = x.shape
    out = []
    for i in range(q):
        acc = 0j
        for t in range(1, n + 1):
            acc += x[t - 1, i] * complex(np.cos(lam * t), np.sin(lam * t))
        out.append(acc / np.sqrt(2 * np.pi * n))
    return np.array(out)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "REPORT", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.REPORT):
        terminalreporter.write_line(mod.REPORT[num])
