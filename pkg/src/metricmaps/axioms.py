"""Numerical checks of the dilation-structure axioms and derived operations.

Residual tables over an eps schedule are turned into
:class:`~metricmaps.convergence.ConvergenceEstimate` objects. Max-reductions
over sample points run in chunks through :func:`parallel.max_reduce`, so
results do not depend on the number of workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .convergence import DEFAULT_SCHEDULE, check_schedule, estimate, richardson_limit
from .dilations import DilationStructure, Heisenberg
from .errors import ArgumentError, DomainError
from .parallel import max_reduce


def _pmax(values_fn, k, jobs):
    """max over i < k of ``values_fn(slice)``, evaluated chunk by chunk."""

    def chunk(a, b):
        v = values_fn(slice(a, b))
        return float(np.max(v)) if np.size(v) else 0.0

    return max_reduce(chunk, k, jobs)


def _points(p, dim):
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.shape[-1] != dim:
        raise ArgumentError(f"points must have {dim} coordinates, got shape {p.shape}")
    return p


def dyadic_factors(rng, k, kmin=0, kmax=6):
    return 2.0 ** -rng.integers(kmin, kmax + 1, size=k)


# ---------------------------------------------------------------- A0


def check_A0(s: DilationStructure, x, rng, k=2000, schedule=DEFAULT_SCHEDULE):
    """Sampled inclusion chain of A0 at base point ``x``.

    With ``U(x)`` the open ball of radius ``u_radius``, ``V_eps(x)`` and
    ``W_{1/eps}(x)`` both equal ``dilate(x, eps, U(x))``; membership in the
    latter is tested by pulling back with ``dilate(x, 1/eps, .)``.
    """
    x = np.asarray(x, dtype=float)
    ok = {"ball_in_dilated_A": True, "dilated_A_in_V": True, "V_in_W": True, "W_in_dilated_B": True,
          "difference_domain": True}
    for eps in schedule:
        v = s.sample(rng, x, k, eps * (1 - 1e-9), lattice=False)
        ok["ball_in_dilated_A"] &= bool(np.all(s.distance(x, s.dilate(x, 1 / eps, v)) < s.A))
        u = s.sample(rng, x, k, s.A * (1 - 1e-9), lattice=False)
        back = s.dilate(x, 1 / eps, s.dilate(x, eps, u))
        ok["dilated_A_in_V"] &= bool(np.all(s.distance(x, back) < s.u_radius))
        w = s.dilate(x, eps, s.sample(rng, x, k, s.u_radius * (1 - 1e-9), lattice=False))
        ok["W_in_dilated_B"] &= bool(np.all(s.distance(x, s.dilate(x, 1 / eps, w)) < s.B))
        u = s.sample(rng, x, k, s.domain_radius, lattice=False)
        v = s.sample(rng, x, k, s.domain_radius, lattice=False)
        p, q = s.dilate(x, eps, u), s.dilate(x, eps, v)
        ok["difference_domain"] &= bool(np.all(s.distance(p, s.dilate(p, 1 / eps, q)) < s.u_radius))
    return ok


# ---------------------------------------------------------------- A1, A2


@dataclass(frozen=True)
class A12Result:
    a1: float
    a2: float
    skipped: int = 0


def check_A1_A2(s: DilationStructure, x, eps, mu, u, jobs=None) -> A12Result:
    """Exactness residuals of A1 and A2 over sample tuples ``(x, eps, mu, u)``.

    Tuples with ``u`` outside the domain ball of ``x`` are skipped and
    counted (a warning is issued).
    """
    x, u = _points(x, s.dim), _points(u, s.dim)
    x = np.broadcast_to(x, u.shape)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), u.shape[:1])
    mu = np.broadcast_to(np.asarray(mu, dtype=float), u.shape[:1])
    inside = s.distance(x, u) <= s.domain_radius * (1 + 1e-12)
    skipped = int((~inside).sum())
    if skipped:
        warnings.warn(f"{skipped} sample points outside the domain were skipped", RuntimeWarning)
    x, u, eps, mu = x[inside], u[inside], eps[inside], mu[inside]
    k = len(u)

    def a1(sl):
        fixed = s.distance(s.dilate(x[sl], eps[sl], x[sl]), x[sl])
        ident = s.distance(s.dilate(x[sl], 1.0, u[sl]), u[sl])
        return np.maximum(fixed, ident)

    def a2(sl):
        lhs = s.dilate(x[sl], eps[sl], s.dilate(x[sl], mu[sl], u[sl]))
        return s.distance(lhs, s.dilate(x[sl], eps[sl] * mu[sl], u[sl]))

    return A12Result(_pmax(a1, k, jobs), _pmax(a2, k, jobs), skipped)


# ---------------------------------------------------------------- A3


def _extended(schedule):
    s = check_schedule(schedule)
    return s + (s[-1] * s[-1] / s[-2],)


def rescaled_distance(s, x, eps, u, v):
    return s.distance(s.dilate(x, eps, u), s.dilate(x, eps, v)) / eps


@dataclass(frozen=True)
class A3Result:
    estimate: object
    tangent_distance: object = field(repr=False)
    mode: str  # "guess" or "self"
    x: tuple = ()


def a3_residuals(s, x, u, v, schedule, tangent=None, jobs=None):
    k = len(u)
    if tangent is not None:
        res = []
        for eps in schedule:
            res.append(_pmax(lambda sl: np.abs(rescaled_distance(s, x, eps, u[sl], v[sl]) - tangent(u[sl], v[sl])), k, jobs))
        return res
    ext = _extended(schedule)
    return [
        _pmax(lambda sl: np.abs(rescaled_distance(s, x, e1, u[sl], v[sl]) - rescaled_distance(s, x, e2, u[sl], v[sl])), k, jobs)
        for e1, e2 in zip(ext, ext[1:])
    ]


def check_A3(s: DilationStructure, x, u, v, schedule=DEFAULT_SCHEDULE, tangent=None, jobs=None) -> A3Result:
    """Convergence of rescaled distances ``(1/eps) d(dilate u, dilate v)``.

    With ``tangent`` given the residual is the gap to it; without, the
    finest rescaled distance serves as the tangent distance and residuals
    are Cauchy gaps between consecutive scales.
    """
    schedule = check_schedule(schedule)
    x = np.asarray(x, dtype=float)
    u, v = _points(u, s.dim), _points(v, s.dim)
    if not np.any(s.distance(u, v) > 0):
        raise ArgumentError("degenerate sample: every pair has coincident points")
    est = estimate(schedule, a3_residuals(s, x, u, v, schedule, tangent, jobs))
    if tangent is None:
        fine = schedule[-1]
        td = lambda a, b: rescaled_distance(s, x, fine, a, b)  # noqa: E731
        mode = "self"
    else:
        td, mode = tangent, "guess"
    return A3Result(est, td, mode, tuple(x.tolist()))


# ---------------------------------------------------------------- A4 and tangent operations


def _in_W(s, p, q, eps):
    """Whether ``q`` lies in ``W_{1/eps}(p)``."""
    return s.distance(p, s.dilate(p, 1.0 / eps, q)) < s.u_radius


def difference(s: DilationStructure, x, eps, u, v):
    """``dilate(dilate(x, eps, u), 1/eps, dilate(x, eps, v))``."""
    _check_factor(eps)
    p, q = s.dilate(x, eps, u), s.dilate(x, eps, v)
    bad = ~np.atleast_1d(_in_W(s, p, q, eps))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(f"dilate(x, eps, v) is not in W_(1/eps)(dilate(x, eps, u)) for sample {i}, eps={eps}")
    return s.dilate(p, 1.0 / eps, q)


def tangent_sum(s: DilationStructure, x, eps, u, v):
    """``dilate(x, 1/eps, dilate(dilate(x, eps, u), eps, v))``."""
    _check_factor(eps)
    q = s.dilate(s.dilate(x, eps, u), eps, v)
    bad = ~np.atleast_1d(_in_W(s, np.broadcast_to(x, np.shape(q)), q, eps))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(f"sum at scale eps={eps} leaves W_(1/eps)(x) for sample {i}")
    return s.dilate(x, 1.0 / eps, q)


def tangent_inverse(s: DilationStructure, x, eps, u):
    return difference(s, x, eps, u, np.broadcast_to(x, np.shape(u)))


def _check_factor(eps):
    if not 0 < eps <= 1:
        raise ArgumentError(f"eps must lie in (0, 1], got {eps}")


@dataclass(frozen=True)
class LimitResult:
    estimate: object
    finest: np.ndarray = field(repr=False)
    extrapolated: np.ndarray = field(repr=False)


def operation_limit(s, op, schedule=DEFAULT_SCHEDULE, jobs=None):
    """Cauchy table and extrapolated limit of ``op(eps)`` (an array of points)."""
    schedule = check_schedule(schedule)
    ext = _extended(schedule)
    vals = [op(e) for e in ext]
    k = len(np.atleast_2d(vals[0]))
    res = []
    for a, b in zip(vals, vals[1:]):
        a2, b2 = np.atleast_2d(a), np.atleast_2d(b)
        res.append(_pmax(lambda sl: s.distance(a2[sl], b2[sl]), k, jobs))
    vals = vals[:-1]
    return LimitResult(estimate(schedule, res), np.asarray(vals[-1]), richardson_limit(schedule, vals))


def check_A4(s: DilationStructure, x, u, v, schedule=DEFAULT_SCHEDULE, jobs=None) -> LimitResult:
    """Cauchy convergence of ``difference(s, x, eps, u, v)`` as eps -> 0."""
    x = np.asarray(x, dtype=float)
    u, v = _points(u, s.dim), _points(v, s.dim)
    return operation_limit(s, lambda e: difference(s, x, e, u, v), schedule, jobs)


# ---------------------------------------------------------------- full suite


@dataclass(frozen=True)
class AxiomReport:
    structure: dict
    a0: dict
    a1: float
    a2: float
    a3: object
    a4: object
    skipped: int
    samples: int

    def to_dict(self):
        return {
            "structure": self.structure,
            "samples": self.samples,
            "skipped": self.skipped,
            "a0": self.a0,
            "a1": self.a1,
            "a2": self.a2,
            "a3": self.a3.to_dict(),
            "a4": self.a4.to_dict(),
        }


def default_bases(s: DilationStructure):
    """A small grid of lattice base points (uniformity is tested as a max over it)."""
    h = 0.25
    if isinstance(s, Heisenberg):
        return np.array([[0, 0, 0], [h, -h, 0], [-2 * h, h, h * h / 2]], dtype=float)
    pts = np.zeros((3, s.dim))
    pts[1, 0], pts[2, :] = h, -2 * h
    return pts


def run_axioms(s: DilationStructure, rng, n_samples=10_000, schedule=DEFAULT_SCHEDULE, bases=None,
               tangent="model", jobs=None) -> AxiomReport:
    """A0-A4 on lattice samples around each base point, max over bases.

    ``tangent="model"`` compares A3 against the structure's model tangent
    distance, ``tangent=None`` runs the self-consistency mode.
    """
    schedule = check_schedule(schedule)
    bases = default_bases(s) if bases is None else _points(bases, s.dim)
    nb = len(bases)
    idx = rng.integers(0, nb, size=n_samples)
    x = bases[idx]
    u = s.sample(rng, x, n_samples, s.domain_radius)
    v = s.sample(rng, x, n_samples, s.domain_radius)
    eps = dyadic_factors(rng, n_samples)
    mu = dyadic_factors(rng, n_samples)
    a12 = check_A1_A2(s, x, eps, mu, u, jobs)

    a0 = {}
    a3 = np.zeros(len(schedule))
    a4 = np.zeros(len(schedule))
    for b in range(nb):
        sel = idx == b
        if not sel.any():
            continue
        xb = bases[b]
        for key, val in check_A0(s, xb, rng, k=200, schedule=schedule).items():
            a0[key] = a0.get(key, True) and val
        td = s.tangent_distance(xb) if tangent == "model" else None
        a3 = np.maximum(a3, a3_residuals(s, xb, u[sel], v[sel], schedule, td, jobs))
        a4 = np.maximum(a4, check_A4(s, xb, u[sel], v[sel], schedule, jobs).estimate.residuals)
    return AxiomReport(
        structure=s.to_dict(),
        a0=a0,
        a1=a12.a1,
        a2=a12.a2,
        a3=estimate(schedule, a3),
        a4=estimate(schedule, a4),
        skipped=a12.skipped,
        samples=n_samples,
    )


# ---------------------------------------------------------------- linearity


@dataclass(frozen=True)
class LinearityResult:
    morphism: float
    homothety: float

    @property
    def value(self) -> float:
        return max(self.morphism, self.homothety)


def linearity_residual(s: DilationStructure, x, mu, u, v, eps, jobs=None) -> LinearityResult:
    """How far ``dilate(x, mu, .)`` is from a morphism and an exact homothety.

    morphism: max ``d(dilate(x, mu, dilate(u, eps, v)), dilate(dilate(x, mu, u), eps, dilate(x, mu, v)))``
    homothety: max ``|d(dilate(x, mu, u), dilate(x, mu, v)) - mu d(u, v)|``
    """
    if not 0 < mu < 1:
        raise ArgumentError(f"mu must lie in (0, 1), got {mu}")
    x = np.asarray(x, dtype=float)
    u, v = _points(u, s.dim), _points(v, s.dim)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), u.shape[:1])
    k = len(u)

    def morph(sl):
        mu_u, mu_v = s.dilate(x, mu, u[sl]), s.dilate(x, mu, v[sl])
        lhs = s.dilate(x, mu, s.dilate(u[sl], eps[sl], v[sl]))
        return s.distance(lhs, s.dilate(mu_u, eps[sl], mu_v))

    def homo(sl):
        d_mu = s.distance(s.dilate(x, mu, u[sl]), s.dilate(x, mu, v[sl]))
        return np.abs(d_mu - mu * s.distance(u[sl], v[sl]))

    return LinearityResult(_pmax(morph, k, jobs), _pmax(homo, k, jobs))


# ---------------------------------------------------------------- conical groups


@dataclass(frozen=True)
class CheckItem:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    def to_dict(self):
        return {"name": self.name, "residual": self.residual, "tol": self.tol, "passed": self.passed}


def conical_checks(g: Heisenberg, rng, n_exact=10_000, n_pairs=100_000, schedule=DEFAULT_SCHEDULE, jobs=None):
    """Normed-group-with-dilations checks on the Heisenberg group.

    Exact identities are tested on lattice samples with dyadic factors;
    subadditivity of the gauge on ``n_pairs`` uniform random pairs in the
    unit gauge ball.
    """
    schedule = check_schedule(schedule)
    e = np.zeros(3)
    p = g.sample(rng, e, n_exact, 1.0)
    q = g.sample(rng, e, n_exact, 1.0)
    eps = 2.0 ** -rng.integers(1, 11, size=n_exact)
    k = n_exact
    items = []

    def add(name, fn, tol, n=k):
        items.append(CheckItem(name, _pmax(fn, n, jobs), tol))

    add("identity_norm", lambda sl: np.atleast_1d(g.gauge(e)), 0.0, 1)
    add("identity_fixed", lambda sl: np.abs(g.scale(eps[sl], e) - e).max(axis=-1), 0.0)
    add("homogeneity", lambda sl: np.abs(g.gauge(g.scale(eps[sl], p[sl])) - eps[sl] * g.gauge(p[sl])), 1e-14)
    add("morphism", lambda sl: g.distance(g.scale(eps[sl], g.mul(p[sl], q[sl])),
                                          g.mul(g.scale(eps[sl], p[sl]), g.scale(eps[sl], q[sl]))), 1e-12)
    add("symmetry", lambda sl: np.abs(g.gauge(g.inv(p[sl])) - g.gauge(p[sl])), 0.0)
    nz = np.any(p != 0, axis=1)
    add("positivity", lambda sl: (nz[sl] & (g.gauge(p[sl]) <= 0)).astype(float), 0.0)

    # limits along the schedule; exact at every scale for a conical group
    def beta(sl, e_):
        prod = g.mul(g.scale(e_, p[sl]), g.scale(e_, q[sl]))
        return g.distance(g.scale(1.0 / e_, prod), g.mul(p[sl], q[sl]))

    def inv_lim(sl, e_):
        return g.distance(g.scale(1.0 / e_, g.inv(g.scale(e_, p[sl]))), g.inv(p[sl]))

    def norm_lim(sl, e_):
        return np.abs(g.gauge(g.scale(e_, p[sl])) / e_ - g.gauge(p[sl]))

    h0 = estimate(schedule, [_pmax(lambda sl: g.gauge(g.scale(e_, p[sl])), k, jobs) for e_ in schedule])
    tables = {"H0_contraction": h0}
    for name, fn in (("H1_product", beta), ("H2_inverse", inv_lim), ("norm_homogeneity_limit", norm_lim)):
        tables[name] = estimate(schedule, [_pmax(lambda sl: fn(sl, e_), k, jobs) for e_ in schedule])
        items.append(CheckItem(name, max(tables[name].residuals), 1e-12))

    a = g.sample(rng, e, n_pairs, 1.0, lattice=False)
    b = g.sample(rng, e, n_pairs, 1.0, lattice=False)
    sub = _pmax(lambda sl: g.gauge(g.mul(a[sl], b[sl])) - g.gauge(a[sl]) - g.gauge(b[sl]), n_pairs, jobs)
    items.append(CheckItem("subadditivity", max(sub, 0.0), 1e-12))
    items.append(CheckItem("H0_contraction", 0.0 if h0.verdict == "converges" else 1.0, 0.0))
    return ConicalReport(tuple(items), tables)


@dataclass(frozen=True)
class ConicalReport:
    items: tuple
    tables: dict

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def item(self, name) -> CheckItem:
        return next(i for i in self.items if i.name == name)

    def to_dict(self):
        return {
            "passed": self.passed,
            "items": [i.to_dict() for i in self.items],
            "tables": {k: v.to_dict() for k, v in self.tables.items()},
        }


# ---------------------------------------------------------------- derivative


def pansu_residual(src: DilationStructure, dst: DilationStructure, f, L, x, u, schedule=DEFAULT_SCHEDULE,
                   commute_tol=1e-9, jobs=None):
    """Convergence of ``(1/eps) d'(f(dilate(x, eps, u)), dilate'(f(x), eps, L(u)))`` to 0.

    ``u`` samples the unit ball around ``x``. ``L`` must commute with the
    dilations at ``x`` and ``f(x)``, which is checked first on the sample.
    """
    schedule = check_schedule(schedule)
    x = np.asarray(x, dtype=float)
    u = _points(u, src.dim)
    fx = f(x)
    k = len(u)
    lu = L(u)
    for e_ in schedule:
        gap = _pmax(lambda sl: dst.distance(L(src.dilate(x, e_, u[sl])), dst.dilate(fx, e_, lu[sl])), k, jobs)
        if gap > commute_tol:
            raise ArgumentError(f"not a conical morphism: commutation gap {gap:.3g} at eps={e_}")
    res = [
        _pmax(lambda sl: dst.distance(f(src.dilate(x, e_, u[sl])), dst.dilate(fx, e_, lu[sl])) / e_, k, jobs)
        for e_ in schedule
    ]
    return estimate(schedule, res)
