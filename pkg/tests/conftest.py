import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from synthcap.channels import bsc, erasure, identity, scatter

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def bsc01():
    return bsc(0.1)


@pytest.fixture
def erasure05():
    return erasure(0.5)


@pytest.fixture
def ident2():
    return identity(2)


@pytest.fixture
def scatter3():
    return scatter(3)


def random_joint(rng, shape, zeros=0.0):
    t = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    if zeros:
        t = np.where(rng.random(shape) < zeros, 0.0, t)
        if t.sum() == 0:
            t.flat[0] = 1.0
        t = t / t.sum()
    return t


# acceptance criteria report one line each at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
