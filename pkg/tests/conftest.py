import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from kreinapprox.krein import KreinMap, SignatureSpace

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def H(*signs):
    return SignatureSpace.diag(signs)


def kmap(M, dom, cod=None):
    return KreinMap(np.asarray(M, dtype=complex), dom, dom if cod is None else cod)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


seeds = st.integers(min_value=0, max_value=2**31 - 1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in mod.REPORT:
            terminalreporter.write_line(line)
