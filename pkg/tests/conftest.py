import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import shortest_path

from metricmaps.metric_core import FiniteMetricSpace

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_space(rng, n, kind=None):
    """Random valid metric: a planar point cloud or shortest paths of random weights."""
    kind = kind or rng.choice(["points", "graph"])
    if kind == "points":
        return FiniteMetricSpace.from_points(rng.random((n, 2)))
    w = rng.uniform(0.1, 2.0, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    d = shortest_path(w, directed=False)
    return FiniteMetricSpace(None, d)


def random_relation_pairs(rng, n, m, total=True, surjective=True, extra=0.2):
    mask = rng.random((n, m)) < extra
    if total:
        mask[np.arange(n), rng.integers(0, m, n)] = True
    if surjective:
        mask[rng.integers(0, n, m), np.arange(m)] = True
    if not mask.any():
        mask[0, 0] = True
    return np.argwhere(mask)


@st.composite
def spaces(draw, min_size=1, max_size=8):
    n = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_space(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
