import numpy as np
import pytest

from metricmaps.axioms import (
    check_A0,
    check_A1_A2,
    check_A3,
    check_A4,
    conical_checks,
    difference,
    linearity_residual,
    operation_limit,
    pansu_residual,
    run_axioms,
    tangent_inverse,
    tangent_sum,
)
from metricmaps.cli import pansu_case
from metricmaps.dilations import Euclidean, Heisenberg, LogPerturbedEuclidean, Snowflake
from metricmaps.errors import ArgumentError, DomainError

E2 = Euclidean(2)
H = Heisenberg()


@pytest.mark.parametrize("s", [E2, Snowflake(2, 0.5), LogPerturbedEuclidean(2), H])
def test_A0_inclusions(s, rng):
    assert all(check_A0(s, np.zeros(s.dim), rng, k=300).values())


@pytest.mark.parametrize("s", [E2, Snowflake(2, 0.5), H])
def test_A1_A2_exact_on_lattice(s, rng):
    rep = run_axioms(s, rng, n_samples=1500)
    assert rep.a1 == 0 and rep.a2 == 0 and rep.skipped == 0
    assert max(rep.a3.residuals) == 0


def test_A1_A2_skips_outside_domain():
    with pytest.warns(RuntimeWarning):
        r = check_A1_A2(E2, np.zeros(2), 0.5, 0.5, np.array([[0.5, 0.0], [3.0, 0.0]]))
    assert r.skipped == 1


def test_A3_logpe_converges_at_first_order(rng):
    s = LogPerturbedEuclidean(2)
    rep = run_axioms(s, rng, n_samples=1500)
    assert rep.a3.verdict == "converges"
    assert rep.a3.fitted_order == pytest.approx(1, abs=0.1)
    # self-consistency mode agrees on the verdict
    u = s.sample(rng, np.zeros(2), 300, 1.0)
    v = s.sample(rng, np.zeros(2), 300, 1.0)
    assert check_A3(s, np.zeros(2), u, v).estimate.verdict == "converges"


def test_A3_rejects_degenerate_sample():
    p = np.zeros((3, 2))
    with pytest.raises(ArgumentError):
        check_A3(E2, np.zeros(2), p, p)


def test_difference_euclid_formula(rng):
    x = np.array([0.25, -0.5])
    u, v = rng.uniform(-0.5, 0.5, (20, 2)), rng.uniform(-0.5, 0.5, (20, 2))
    for eps in (0.5, 0.125):
        got = difference(E2, x, eps, u, v)
        assert np.allclose(got, x + eps * (u - x) + (v - u))


def test_difference_domain_error():
    with pytest.raises(DomainError):
        difference(E2, np.zeros(2), 0.5, np.zeros((1, 2)), np.array([[100.0, 0.0]]))
    with pytest.raises(ArgumentError):
        difference(E2, np.zeros(2), 2.0, np.zeros((1, 2)), np.zeros((1, 2)))


def test_tangent_sum_euclid(rng):
    x = np.array([0.25, 0.0])
    u, v = rng.uniform(-0.3, 0.3, (20, 2)), rng.uniform(-0.3, 0.3, (20, 2))
    eps = 0.25
    assert np.allclose(tangent_sum(E2, x, eps, u, v), u + v - x - eps * (u - x))
    lim = operation_limit(E2, lambda e: tangent_sum(E2, x, e, u, v))
    assert np.allclose(lim.extrapolated, u + v - x)


@pytest.mark.parametrize("s", [E2, H])
def test_tangent_group_laws(s, rng):
    x = np.zeros(s.dim)
    u = s.sample(rng, x, 50, 0.4)
    v = s.sample(rng, x, 50, 0.4)
    w = s.sample(rng, x, 50, 0.4)
    xs = np.broadcast_to(x, u.shape)
    eps = 2.0 ** -8
    # neutral element and inverse
    assert np.max(s.distance(tangent_sum(s, x, eps, xs, u), u)) < 1e-2
    assert np.max(s.distance(tangent_sum(s, x, eps, u, tangent_inverse(s, x, eps, u)), xs)) < 1e-2
    # associativity within ten times the finest A4 residual
    a4 = check_A4(s, x, u, v).estimate.finest
    lhs = tangent_sum(s, x, eps, tangent_sum(s, x, eps, u, v), w)
    rhs = tangent_sum(s, x, eps, u, tangent_sum(s, x, eps, v, w))
    assert np.max(s.distance(lhs, rhs)) <= 10 * max(a4, 1e-12)


@pytest.mark.parametrize("s,order", [(E2, 1.0), (H, 0.5)])
def test_A4_cauchy_order(s, order, rng):
    x = np.zeros(s.dim)
    u, v = s.sample(rng, x, 400, 1.0), s.sample(rng, x, 400, 1.0)
    est = check_A4(s, x, u, v).estimate
    assert est.verdict == "converges"
    assert est.fitted_order == pytest.approx(order, abs=0.15)


def test_linearity(rng):
    x = np.zeros(2)
    u, v = rng.uniform(-0.5, 0.5, (200, 2)), rng.uniform(-0.5, 0.5, (200, 2))
    for s in (E2, Snowflake(2, 0.5)):
        r = linearity_residual(s, x, 0.5, u, v, 0.25)
        assert r.value < 1e-14
    r = linearity_residual(LogPerturbedEuclidean(2), x, 0.5, u, v, 0.25)
    assert r.morphism < 1e-14 and r.homothety > 1e-2
    with pytest.raises(ArgumentError):
        linearity_residual(E2, x, 1.0, u, v, 0.25)


def test_conical_checks_pass(rng):
    rep = conical_checks(H, rng, n_exact=2000, n_pairs=20000)
    assert rep.passed
    assert rep.item("subadditivity").residual <= 1e-12
    assert rep.tables["H0_contraction"].verdict == "converges"


def test_pansu_cases(rng):
    f, L, x = pansu_case(E2, "linear")
    u = E2.sample(rng, x, 500, 1.0)
    assert max(pansu_residual(E2, E2, f, L, x, u).residuals) < 1e-12
    f, L, x = pansu_case(E2, "smooth")
    est = pansu_residual(E2, E2, f, L, x, u)
    assert est.verdict == "converges" and est.fitted_order == pytest.approx(1, abs=0.1)
    f, L, x = pansu_case(H, "shear")
    u = H.sample(rng, x, 500, 1.0)
    est = pansu_residual(H, H, f, L, x, u)
    assert est.verdict == "diverges"


def test_pansu_rejects_non_conical_L(rng):
    u = E2.sample(rng, np.zeros(2), 50, 1.0)
    with pytest.raises(ArgumentError, match="not a conical morphism"):
        pansu_residual(E2, E2, lambda p: p, lambda p: p + 1.0, np.zeros(2), u)
