import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metricmaps.errors import ArgumentError, PreconditionError, StructuralError
from metricmaps.metric_core import FiniteMetricSpace
from metricmaps.relations import (
    Relation,
    accuracy,
    check_generalization_bounds,
    compose,
    generalize,
    inverse,
    is_dense,
    map_quality,
    read_relation,
)

from conftest import random_relation_pairs, random_space


def brute_quality(rho):
    """Direct evaluation of accuracy, resolution and precision from their definitions."""
    d, D = rho.src.dist, rho.dst.dist
    pairs = [tuple(p) for p in rho.pairs]
    acc = max(abs(D[y1, y2] - d[x1, x2]) for (x1, y1), (x2, y2) in itertools.product(pairs, pairs))
    res = max(d[x1, x2] for (x1, y1), (x2, y2) in itertools.product(pairs, pairs) if y1 == y2)
    prec = max(D[y1, y2] for (x1, y1), (x2, y2) in itertools.product(pairs, pairs) if x1 == x2)
    return acc, res, prec


def two_point(d):
    return FiniteMetricSpace(None, [[0, d], [d, 0]])


def test_identity_quality(rng):
    X = random_space(rng, 7)
    q = map_quality(Relation.identity(X))
    assert (q.accuracy, q.resolution, q.precision) == (0, 0, 0)


def test_bijection_d1_D3():
    q = map_quality(Relation([[0, 0], [1, 1]], two_point(1), two_point(3)))
    assert (q.accuracy, q.resolution, q.precision) == (2, 0, 0)


def test_collapse_onto_one_pixel():
    Y = FiniteMetricSpace(None, [[0]])
    q = map_quality(Relation([[0, 0], [1, 0]], two_point(1), Y))
    assert (q.accuracy, q.resolution, q.precision) == (1, 1, 0)
    assert q.resolution_at == {0: 1.0}


def test_relation_validation():
    X = two_point(1)
    with pytest.raises(StructuralError):
        Relation([[0, 2]], X, X)
    with pytest.raises(StructuralError):
        Relation([[0, 1, 1]], X, X)
    r = Relation([[1, 1], [0, 0], [1, 1]], X, X)
    assert r.pairs.tolist() == [[0, 0], [1, 1]]
    assert Relation([], X, X).is_empty


def test_quality_invariant_is_asserted():
    from metricmaps.relations import MapQuality

    with pytest.raises(AssertionError):
        MapQuality(1.0, 2.0, 0.0, {}, {})


@given(st.integers(0, 2**32 - 1))
def test_quality_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_space(rng, rng.integers(1, 7)), random_space(rng, rng.integers(1, 7))
    rho = Relation(random_relation_pairs(rng, X.n, Y.n, total=False, surjective=False, extra=0.3), X, Y)
    q = map_quality(rho)
    acc, res, prec = brute_quality(rho)
    assert q.accuracy == pytest.approx(acc, abs=1e-15)
    assert q.resolution == res and q.precision == prec
    assert q.resolution <= q.accuracy and q.precision <= q.accuracy


@given(st.integers(0, 2**32 - 1))
def test_inverse_symmetries(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_space(rng, rng.integers(1, 8)), random_space(rng, rng.integers(1, 8))
    rho = Relation(random_relation_pairs(rng, X.n, Y.n), X, Y)
    inv = inverse(rho)
    assert inverse(inv) == rho
    q, qi = map_quality(rho), map_quality(inv)
    assert qi.accuracy == q.accuracy
    assert qi.resolution == q.precision and qi.precision == q.resolution


def test_inverse_of_bijection_graph():
    X = random_space(np.random.default_rng(1), 5)
    perm = [2, 0, 4, 1, 3]
    rho = Relation.from_function(perm, X, X)
    assert inverse(rho) == Relation.from_function(np.argsort(perm), X, X)


def test_compose_examples(rng):
    X, Y, Z = (random_space(rng, 4) for _ in range(3))
    rho = Relation(random_relation_pairs(rng, 4, 4), X, Y)
    assert compose(rho, Relation.identity(Y)) == rho
    assert compose(Relation([[0, 0]], X, Y), Relation([[1, 0]], Y, Z)).is_empty
    with pytest.raises(ArgumentError):
        compose(rho, Relation.identity(Z))


@given(st.integers(0, 2**32 - 1))
def test_compose_matches_triple_loop(seed):
    rng = np.random.default_rng(seed)
    n, m, k = rng.integers(1, 6, 3)
    X, Y, Z = random_space(rng, n), random_space(rng, m), random_space(rng, k)
    r1 = Relation(random_relation_pairs(rng, n, m, False, False, 0.4), X, Y)
    r2 = Relation(random_relation_pairs(rng, m, k, False, False, 0.4), Y, Z)
    want = {(a, c) for a, b in r1.pair_set() for b2, c in r2.pair_set() if b == b2}
    assert compose(r1, r2).pair_set() == want


def test_isometry_graph_has_perfect_quality():
    pts = np.array([[0, 0], [1, 0], [0, 2], [3, 1]], dtype=float)
    X = FiniteMetricSpace.from_points(pts)
    Y = FiniteMetricSpace.from_points(pts @ np.array([[0, -1], [1, 0]]) + 5)
    q = map_quality(Relation.identity(X).__class__([[i, i] for i in range(4)], X, Y))
    assert (q.accuracy, q.resolution, q.precision) == (0, 0, 0)


def test_is_dense_examples(rng):
    X = random_space(rng, 6)
    assert is_dense(range(6), X, 0)
    assert not is_dense([], X, 10)


def test_generalize_examples(rng):
    X, Y = random_space(rng, 5), random_space(rng, 5)
    rho = Relation(random_relation_pairs(rng, 5, 5), X, Y)
    assert generalize(rho, 0, 0) == rho
    full = generalize(Relation([[0, 0]], X, Y), X.diameter, Y.diameter)
    assert len(full) == 25
    with pytest.raises(PreconditionError) as exc:
        generalize(Relation([[0, 0]], X, Y), 0, 0)
    assert exc.value.point is not None


@given(st.integers(0, 2**32 - 1))
def test_generalize_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    X = FiniteMetricSpace.from_points(np.arange(10) / 9)
    Y = FiniteMetricSpace.from_points(np.arange(10) / 9)
    rho = Relation(random_relation_pairs(rng, 10, 10, extra=0.05), X, Y)
    eps, mu = rng.uniform(0, 0.4, 2)
    bar = generalize(rho, eps, mu)
    want = {
        (x, y)
        for x in range(10)
        for y in range(10)
        if any(X.dist[x, a] <= eps and Y.dist[y, b] <= mu for a, b in rho.pair_set())
    }
    assert bar.pair_set() == want


@given(st.integers(0, 2**32 - 1))
def test_generalize_monotone(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_space(rng, 6), random_space(rng, 6)
    rho = Relation(random_relation_pairs(rng, 6, 6), X, Y)
    e1, m1 = rng.uniform(0, 1, 2)
    e2, m2 = e1 + rng.uniform(0, 1), m1 + rng.uniform(0, 1)
    assert generalize(rho, e1, m1).pair_set() <= generalize(rho, e2, m2).pair_set()


def test_bounds_at_zero_thickening(rng):
    X, Y = random_space(rng, 6), random_space(rng, 5)
    rho = Relation(random_relation_pairs(rng, 6, 5), X, Y)
    for c in check_generalization_bounds(rho, generalize(rho, 0, 0), 0, 0):
        if not c.witness_dependent:
            assert c.slack >= 0


def test_bounds_reject_foreign_rho_bar(rng):
    X, Y = random_space(rng, 4), random_space(rng, 4)
    rho = Relation(random_relation_pairs(rng, 4, 4), X, Y)
    with pytest.raises(ArgumentError):
        check_generalization_bounds(rho, rho, 5.0, 5.0)


def test_read_relation_fixtures():
    from pathlib import Path

    fx = Path(__file__).parent.parent / "fixtures"
    assert map_quality(read_relation(fx / "bijection_2v2.json")).accuracy == 2
    with pytest.raises(StructuralError) as exc:
        read_relation(fx / "bad_pairs.json")
    assert exc.value.field == "pairs"


def test_accuracy_jobs_independent(rng):
    X, Y = random_space(rng, 40), random_space(rng, 30)
    rho = Relation(random_relation_pairs(rng, 40, 30, extra=0.3), X, Y)
    assert accuracy(rho, jobs=1) == accuracy(rho, jobs=7)
