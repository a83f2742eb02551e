import math

import numpy as np
import pytest

from metricmaps.axioms import check_A3
from metricmaps.dilations import Euclidean, Heisenberg, LogPerturbedEuclidean
from metricmaps.errors import ArgumentError, DependencyError
from metricmaps.metric_core import FiniteMetricSpace
from metricmaps.relations import Relation
from metricmaps.zoom import (
    build_template,
    build_zoom,
    cascade_check,
    composite_map,
    foveal,
    foveal_bounds,
    foveal_fixedpoint_check,
    hausdorff_Dmu,
    match_points,
    relation_hausdorff,
    scale_stability,
    viewpoint_difference,
    viewpoint_stability,
    zoom_quality,
)

SCHEDULE = tuple(2.0 ** -k for k in range(3, 8))


def make_zoom(s, rng, x=None):
    x = np.zeros(s.dim) if x is None else np.asarray(x, dtype=float)
    u, v = s.sample(rng, x, 200, 1.0), s.sample(rng, x, 200, 1.0)
    a3 = check_A3(s, x, u, v, SCHEDULE, tangent=s.tangent_distance(x))
    return build_zoom(s, x, SCHEDULE, a3)


@pytest.fixture(scope="module")
def zooms():
    rng = np.random.default_rng(5)
    return {s.name: make_zoom(s, rng) for s in (Euclidean(2), LogPerturbedEuclidean(2), Heisenberg())}


def test_template_centre_and_ball():
    s = Euclidean(2)
    disp, pts = build_template(s, np.zeros(2))
    assert np.array_equal(pts[0], [0, 0])
    assert np.all(s.distance(np.zeros(2), pts) <= 1 + 1e-12)
    assert len(np.unique(pts, axis=0)) == len(pts)


def test_match_points():
    ref = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert match_points(ref, np.array([[1.0, 0.0], [5.0, 5.0]])).tolist() == [1, -1]


def test_dependency_on_A3():
    with pytest.raises(DependencyError):
        build_zoom(Euclidean(2), np.zeros(2), SCHEDULE, None)


def test_zoom_quality(zooms):
    z = zooms["euclid"]
    q = zoom_quality(z, SCHEDULE[0])
    assert q.accuracy == 0
    with pytest.raises(ArgumentError):
        zoom_quality(z, 0.3)
    zl = zooms["logpe"]
    q = zoom_quality(zl, SCHEDULE[0])
    assert q.accuracy > 0 and q.precision <= 2 * q.accuracy + 1e-12


def test_logpe_modulus_decreases(zooms):
    est = zooms["logpe"].modulus_estimate()
    assert est.verdict == "converges" and est.fitted_order == pytest.approx(1, abs=0.15)


def test_euclid_composite_is_division_by_mu(zooms):
    z = zooms["euclid"]
    mu = 0.5
    rel = composite_map(z, SCHEDULE[0], mu)
    assert not rel.is_empty
    t = z.template
    assert np.array_equal(t[rel.pairs[:, 1]], t[rel.pairs[:, 0]] / mu)
    with pytest.raises(ArgumentError):
        composite_map(z, SCHEDULE[0], 1.5)


@pytest.mark.parametrize("name", ["euclid", "logpe", "heis"])
def test_cascade_holds(zooms, name):
    out = cascade_check(zooms[name], SCHEDULE[:3], 0.5)
    assert out["holds"]
    assert len(out["bound_vs_mu"]["bound"]) == 3


def test_relation_hausdorff_examples():
    X = FiniteMetricSpace.from_points([0.0, 1.0, 3.0])
    r1 = Relation([[0, 0], [1, 1]], X, X)
    r2 = Relation([[0, 0], [1, 1], [2, 2]], X, X)
    # the extra pair (2, 2) is at weighted distance 2 + 2 from (1, 1)
    assert relation_hausdorff(r1, r2) == 4
    assert hausdorff_Dmu(r1, r2, 0.5) == 2 / 0.5 + 2
    assert relation_hausdorff(r1, r1) == 0
    assert relation_hausdorff(r1, Relation([], X, X)) == math.inf
    with pytest.raises(ArgumentError):
        hausdorff_Dmu(r1, r2, 0)


@pytest.mark.parametrize("name", ["euclid", "heis"])
def test_linear_structures_are_self_similar(zooms, name):
    rep = scale_stability(zooms[name], 0.5)
    assert max(rep.modulus) == 0 and max(rep.self_similarity.residuals) == 0
    assert rep.holds


def test_logpe_stability(zooms):
    rep = scale_stability(zooms["logpe"], 0.5)
    assert rep.holds
    assert rep.self_similarity.verdict == "converges"


def test_viewpoint_at_centre_is_identity(zooms):
    z = zooms["heis"]
    rel = viewpoint_difference(z, SCHEDULE[0], z.centre)
    assert np.array_equal(rel.pairs[:, 0], rel.pairs[:, 1])
    assert len(rel.pairs) == len(z.template)
    with pytest.raises(ArgumentError):
        viewpoint_difference(z, SCHEDULE[0], 10**6)


def test_viewpoint_stability(zooms):
    z = zooms["euclid"]
    rep = viewpoint_stability(z, 1)
    assert rep.limit_residual == 0 and max(rep.modulus) == 0


@pytest.mark.parametrize("name", ["euclid", "logpe", "heis"])
def test_foveal(zooms, name):
    z = zooms[name]
    fz = foveal(z, 0.5)
    for eps in z.schedule:
        src, rel = z.relation(eps), fz.relation(eps)
        inner = fz.inner[eps]
        outer = lambda r: r.pairs[~np.isin(r.pairs[:, 0], inner)]  # noqa: E731
        assert np.array_equal(outer(src), outer(rel))
    assert foveal_bounds(fz)["holds"]
    assert foveal_fixedpoint_check(fz)["max"] == 0
