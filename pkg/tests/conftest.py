import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


@st.composite
def spd_matrices(draw, m):
    a = draw(arrays(np.float64, (m, m), elements=finite))
    return a @ a.T / m + np.eye(m)


@st.composite
def sym_matrices(draw, m):
    a = draw(arrays(np.float64, (m, m), elements=finite))
    return 0.5 * (a + a.T)


@st.composite
def screen_pairs(draw, min_m=2, max_m=5):
    """``(g, lam)`` with SPD ``g`` and symmetric ``lam``."""
    m = draw(st.integers(min_m, max_m))
    return draw(spd_matrices(m)), draw(sym_matrices(m))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request, capsys):
    """Print and record one PASS/FAIL line; returns the condition for asserting."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def report(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}", end="")
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
