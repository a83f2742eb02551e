"""Zoom sequences: maps of shrinking balls, rescaled, into a fixed model ball.

A zoom sequence at ``x`` pairs each template point ``t`` of the model unit
ball with its image ``dilate(x, eps, t)`` in the ball of radius ``eps``.
The template is a multiscale dyadic lattice, closed under
``dilate(x, 1/mu, .)`` on its ``mu``-ball for ``mu = 2**-m`` with ``m`` at
most the number of levels, so composite and foveal maps always find
their witnesses.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .convergence import estimate
from .dilations import DilationStructure, Heisenberg
from .errors import ArgumentError, DependencyError
from .metric_core import FiniteMetricSpace, rescale
from .parallel import max_reduce
from .relations import Relation, accuracy, compose, inverse, map_quality

MATCH_TOL = 1e-12
BALL_TOL = 1e-12


def default_step(s: DilationStructure):
    return 0.5 if isinstance(s.tangent_structure(), Heisenberg) else 0.25


def build_template(s: DilationStructure, x, step=None, levels=3):
    """Displacements ``w`` and points ``offset(x, w)`` of the template.

    Level 0 is the lattice of step ``step`` (``step**2 / 2`` on the Heisenberg
    centre axis) inside the tangent unit ball; level ``j`` is level 0 dilated
    by ``2**-j`` about ``x``. The centre comes first.
    """
    ts = s.tangent_structure()
    x = np.asarray(x, dtype=float)
    step = default_step(s) if step is None else float(step)
    steps = np.full(ts.dim, step)
    if isinstance(ts, Heisenberg):
        steps[2] = step * step / 2
    n = np.floor(ts.box(1.0) / steps + 1e-9).astype(int)
    axes = [np.arange(-k, k + 1) * h for k, h in zip(n, steps)]
    w = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ts.dim)
    zero = np.zeros(ts.dim)
    w = w[ts.distance(zero, w) <= 1.0 + BALL_TOL]
    disp = np.concatenate([ts.dilate(zero, 2.0 ** -j, w) for j in range(levels + 1)])
    disp = np.unique(disp, axis=0)
    order = np.lexsort(disp.T[::-1])
    disp = disp[order]
    centre = np.flatnonzero(np.all(disp == 0, axis=1))
    disp = np.concatenate([disp[centre], np.delete(disp, centre, axis=0)])
    return disp, ts.offset(x, disp)


def match_points(ref, query, tol=MATCH_TOL):
    """Index into ``ref`` of the point coinciding with each query point, or -1."""
    ref = np.asarray(ref, dtype=float)
    query = np.asarray(query, dtype=float)
    if len(ref) == 0 or len(query) == 0:
        return np.full(len(query), -1)
    scale = max(1.0, float(np.abs(ref).max()))
    dist, idx = cKDTree(ref).query(query, p=np.inf, distance_upper_bound=tol * scale)
    idx = np.where(np.isfinite(dist), idx, -1)
    return idx


def _pairwise(metric, p):
    n = len(p)
    d = metric(p[:, None, :], p[None, :, :])
    d = np.array(d, dtype=float)
    d[np.arange(n), np.arange(n)] = 0.0
    return np.maximum(d, d.T)


class ZoomSequence:
    """Zoom relations at one base point along a schedule of scales.

    ``relation(eps)`` maps the territory sample ``dilate(x, eps, T)`` with
    distance ``d / eps`` onto the template ``T`` with the tangent distance.
    Scales outside the schedule are built on demand.
    """

    def __init__(self, s, x, schedule, a3, step=None, levels=3, jobs=None):
        if a3 is None:
            raise DependencyError("a tangent-distance estimate (check_A3) is required before building zoom maps")
        if any(not 0 < e <= 1 for e in schedule):
            raise ArgumentError("zoom scales must lie in (0, 1]")
        self.structure = s
        self.x = np.asarray(x, dtype=float)
        self.schedule = tuple(float(e) for e in schedule)
        self.a3 = a3
        self.levels = int(levels)
        self.jobs = jobs
        self.displacements, self.template = build_template(s, self.x, step, levels)
        if len(self.template) < 20:
            raise ArgumentError(f"template has only {len(self.template)} points; refine the step")
        self.map_space = FiniteMetricSpace(None, _pairwise(a3.tangent_distance, self.template))
        self._cache = {}

    @property
    def centre(self) -> int:
        return 0

    def territory(self, eps):
        return self._build(eps)[0]

    def territory_space(self, eps) -> FiniteMetricSpace:
        return self._build(eps)[1]

    def relation(self, eps) -> Relation:
        return self._build(eps)[2]

    def _build(self, eps):
        eps = float(eps)
        if eps not in self._cache:
            s = self.structure
            pts = s.dilate(self.x, eps, self.template)
            d = _pairwise(s.distance, pts)
            space = FiniteMetricSpace(None, d / eps)
            idx = np.arange(len(pts))
            rel = Relation(np.stack([idx, idx], axis=1), space, self.map_space)
            raw = d[0]  # distances from x (template index 0 is the centre)
            self._cache[eps] = (pts, space, rel, raw)
        return self._cache[eps]

    def radius_from_x(self, eps):
        return self._build(eps)[3]

    def modulus(self, eps) -> float:
        return accuracy(self.relation(eps), self.jobs)

    def modulus_table(self):
        return [self.modulus(e) for e in self.schedule]

    def modulus_estimate(self):
        return estimate(self.schedule, self.modulus_table())

    def inner(self, eps, radius):
        """Template indices whose territory point at scale ``eps`` lies in the closed ball of ``radius``."""
        return np.flatnonzero(self.radius_from_x(eps) <= radius * (1 + BALL_TOL))


def build_zoom(s: DilationStructure, x, schedule, a3, step=None, levels=3, jobs=None) -> ZoomSequence:
    return ZoomSequence(s, x, schedule, a3, step, levels, jobs)


def zoom_quality(z: ZoomSequence, eps):
    if float(eps) not in z.schedule:
        raise ArgumentError(f"eps={eps} is not in the zoom schedule")
    return map_quality(z.relation(eps), z.jobs)


# ---------------------------------------------------------------- composite maps and cascading


def composite_map(z: ZoomSequence, eps, mu) -> Relation:
    """Pixels ``(u', u'')`` sharing a territory witness in the ball of radius ``eps*mu``.

    ``u'`` is the pixel of the witness at scale ``eps``, ``u''`` its pixel at
    scale ``eps*mu``. The relation may be empty.
    """
    if not 0 < mu <= 1:
        raise ArgumentError(f"mu must lie in (0, 1], got {mu}")
    fine = eps * mu
    inner_fine = z.inner(fine, fine)  # every template point of the fine sample in B(x, eps*mu)
    at_eps = match_points(z.territory(eps), z.territory(fine)[inner_fine])
    ok = at_eps >= 0
    inner_coarse = at_eps[ok]
    # restrict rho_eps to the witnesses, invert, then follow rho_{eps mu}
    witness = Relation(np.stack([inner_coarse, inner_fine[ok]], axis=1), z.territory_space(eps), z.territory_space(fine))
    r_eps = Relation(z.relation(eps).pairs[np.isin(z.relation(eps).pairs[:, 0], inner_coarse)],
                     z.territory_space(eps), z.map_space)
    return compose(compose(inverse(r_eps), witness), z.relation(fine))


def composite_accuracy(rel: Relation, mu) -> float:
    """Accuracy of a pixel relation with respect to ``((1/mu) D, D)``."""
    if rel.is_empty:
        return 0.0
    return accuracy(Relation(rel.pairs, rescale(rel.src, 1.0 / mu), rel.dst))


@dataclass(frozen=True)
class CascadeRow:
    eps: float
    mu: float
    measured: float
    bound: float

    @property
    def slack(self):
        return self.bound - self.measured

    def to_dict(self):
        return {"eps": self.eps, "mu": self.mu, "measured": self.measured, "bound": self.bound,
                "slack": self.slack, "holds": self.slack >= -1e-9}


def cascade_check(z: ZoomSequence, eps_list, mu, mu_sweep=(0.5, 0.25, 0.125)):
    """Composite accuracy against ``(1/mu) F(eps) + F(eps mu)`` row by row."""
    rows = []
    for eps in eps_list:
        measured = composite_accuracy(composite_map(z, eps, mu), mu)
        bound = z.modulus(eps) / mu + z.modulus(eps * mu)
        rows.append(CascadeRow(float(eps), float(mu), measured, bound))
    e0 = float(eps_list[0])
    sweep = [z.modulus(e0) / m + z.modulus(e0 * m) for m in mu_sweep]
    return {
        "rows": rows,
        "holds": all(r.slack >= -1e-9 for r in rows),
        "bound_vs_eps": [r.bound for r in rows],
        "bound_vs_mu": {"eps": e0, "mu": list(mu_sweep), "bound": sweep},
    }


# ---------------------------------------------------------------- Hausdorff distance of relations


def relation_hausdorff(r1: Relation, r2: Relation, weight=1.0, jobs=None) -> float:
    """Symmetric Hausdorff distance between pair sets under ``weight*d1 + d2``.

    Both relations must live on the same spaces. Returns ``inf`` if either is empty.
    """
    if r1.src != r2.src or r1.dst != r2.dst:
        raise ArgumentError("relations live on different spaces")
    if r1.is_empty or r2.is_empty:
        return math.inf
    da = np.ascontiguousarray(r1.src.dist)
    db = np.ascontiguousarray(r1.dst.dist)
    a1, b1 = np.ascontiguousarray(r1.pairs[:, 0]), np.ascontiguousarray(r1.pairs[:, 1])
    a2, b2 = np.ascontiguousarray(r2.pairs[:, 0]), np.ascontiguousarray(r2.pairs[:, 1])
    fwd = max_reduce(lambda s, t: kernels.directed_hausdorff(da, db, a1, b1, a2, b2, weight, s, t), len(a1), jobs)
    bwd = max_reduce(lambda s, t: kernels.directed_hausdorff(da, db, a2, b2, a1, b1, weight, s, t), len(a2), jobs)
    return max(fwd, bwd)


def hausdorff_Dmu(r1: Relation, r2: Relation, mu, jobs=None) -> float:
    """Hausdorff distance under ``D_mu((u', u''), (v', v'')) = D(u', v')/mu + D(u'', v'')``."""
    if not mu > 0:
        raise ArgumentError(f"mu must be positive, got {mu}")
    return relation_hausdorff(r1, r2, 1.0 / mu, jobs)


# ---------------------------------------------------------------- scale stability


@dataclass(frozen=True)
class StabilityReport:
    mu: float
    limit_relation: Relation = field(repr=False)
    schedule: tuple
    modulus: tuple
    fitted: object
    self_similarity: object
    limit_residual: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.limit_residual <= self.bound

    def to_dict(self):
        return {
            "mu": self.mu,
            "schedule": list(self.schedule),
            "modulus": list(self.modulus),
            "fitted": self.fitted.to_dict(),
            "selfSimilarity": self.self_similarity.to_dict(),
            "limitResidual": self.limit_residual,
            "bound": self.bound,
            "holds": self.holds,
            "limitPairs": len(self.limit_relation),
        }


def _magnified_pixels(z, eps):
    """Template with the magnified distance ``d(dilate(x, eps, .), dilate(x, eps, .)) / eps``."""
    return z.territory_space(eps)


def scale_stability(z: ZoomSequence, mu, schedule=None, jobs=None) -> StabilityReport:
    """Convergence of composite maps to their finest-scale estimate.

    The self-similarity table holds, per scale, the accuracy of the
    composite map measured with the magnified distance on both pixel
    sides; it vanishes for linear structures and decays otherwise.
    """
    schedule = z.schedule if schedule is None else tuple(schedule)
    comps = [composite_map(z, e, mu) for e in schedule]
    limit = comps[-1]
    modulus = [hausdorff_Dmu(c, limit, mu, jobs) for c in comps]
    selfsim = []
    for e, c in zip(schedule, comps):
        mag = _magnified_pixels(z, e)
        selfsim.append(composite_accuracy(Relation(c.pairs, mag, mag), mu) if not c.is_empty else 0.0)
    limit_residual = composite_accuracy(limit, mu)
    bound = 3 * modulus[-1] + z.a3.estimate.finest
    return StabilityReport(float(mu), limit, schedule, tuple(modulus), estimate(schedule, modulus),
                           estimate(schedule, selfsim), limit_residual, bound)


# ---------------------------------------------------------------- viewpoint


def _zoom_relation_at(z: ZoomSequence, x1, eps):
    """Territory points of the zoom at ``x1`` (template displacements reused) and its relation."""
    s = z.structure
    pts = s.dilate(x1, eps, s.tangent_structure().offset(x1, z.displacements))
    return pts


def viewpoint_difference(z: ZoomSequence, eps, u_prime) -> Relation:
    """Pixels ``(v', v'')`` whose territory witness is seen from ``x`` and from ``x1``.

    ``x1`` is the territory point mapped to pixel ``u_prime`` at scale eps.
    """
    u_prime = int(u_prime)
    if not 0 <= u_prime < len(z.template):
        raise ArgumentError(f"pixel {u_prime} is not in the map sample")
    terr = z.territory(eps)
    x1 = terr[u_prime]
    other = _zoom_relation_at(z, x1, eps)
    match = match_points(terr, other)
    ok = match >= 0
    pairs = np.stack([match[ok], np.flatnonzero(ok)], axis=1)
    return Relation(pairs, z.map_space, z.map_space)


def viewpoint_stability(z: ZoomSequence, u_prime, schedule=None, jobs=None) -> StabilityReport:
    schedule = z.schedule if schedule is None else tuple(schedule)
    diffs = [viewpoint_difference(z, e, u_prime) for e in schedule]
    limit = diffs[-1]
    modulus = [hausdorff_Dmu(d, limit, 1.0, jobs) for d in diffs]
    iso = [accuracy(d, jobs) for d in diffs]
    limit_residual = accuracy(limit, jobs)
    bound = 3 * modulus[-1] + z.a3.estimate.finest
    return StabilityReport(1.0, limit, schedule, tuple(modulus), estimate(schedule, modulus),
                           estimate(schedule, iso), limit_residual, bound)


# ---------------------------------------------------------------- foveal maps


class FovealSequence:
    """Zoom relations improved on the inner ball by routing through a limit map."""

    def __init__(self, source: ZoomSequence, mu, limit: Relation, relations, inner, multivalued):
        self.source = source
        self.mu = float(mu)
        self.limit = limit
        self.relations = relations
        self.inner = inner
        self.multivalued = multivalued

    @property
    def schedule(self):
        return self.source.schedule

    def relation(self, eps) -> Relation:
        return self.relations[float(eps)]

    def modulus(self, eps) -> float:
        return accuracy(self.relation(eps), self.source.jobs)


def foveal(z: ZoomSequence, mu, limit: Relation | None = None) -> FovealSequence:
    """Replace the inner-ball pairs of each zoom relation by routes through ``limit``.

    ``(u, u')`` is kept for ``u`` in the ball of radius ``eps*mu`` when
    ``(u, w) in rho_{eps mu}`` for some ``w`` related to ``u'`` by the limit;
    outside that ball the source pairs are kept unchanged. Pixels where the
    limit is multi-valued use all their images (with a warning).
    """
    if limit is None:
        limit = scale_stability(z, mu).limit_relation
    counts = np.bincount(limit.pairs[:, 0], minlength=limit.src.n)
    multivalued = int((counts > 1).sum())
    if multivalued:
        warnings.warn(f"limit map is multi-valued on {multivalued} pixels; using all images", RuntimeWarning)
    relations, inner_sets = {}, {}
    for eps in z.schedule:
        fine = eps * mu
        src = z.relation(eps)
        inner = z.inner(eps, fine)
        outer_pairs = src.pairs[~np.isin(src.pairs[:, 0], inner)]
        # territory point u at scale eps -> its index at scale eps*mu -> pixel w
        at_fine = match_points(z.territory(fine), z.territory(eps)[inner])
        ok = at_fine >= 0
        u_to_w = Relation(np.stack([inner[ok], at_fine[ok]], axis=1), z.territory_space(eps), z.territory_space(fine))
        u_to_pixel = compose(u_to_w, z.relation(fine))
        routed = compose(u_to_pixel, inverse(limit))
        pairs = np.concatenate([outer_pairs, routed.pairs]) if not routed.is_empty else outer_pairs
        relations[float(eps)] = Relation(pairs, src.src, src.dst)
        inner_sets[float(eps)] = inner
    return FovealSequence(z, mu, limit, relations, inner_sets, multivalued)


def covering_radius(z: ZoomSequence, radius=1.0, n=4000, seed=0):
    """Largest tangent distance from a random point of the ``radius`` ball to the template."""
    ts = z.structure.tangent_structure()
    rng = np.random.default_rng(seed)
    p = ts.sample(rng, z.x, n, radius, lattice=False)
    t = z.template[ts.distance(z.x, z.template) <= radius * (1 + BALL_TOL)]
    best = np.full(n, np.inf)
    for i in range(0, len(t), 256):
        d = ts.distance(p[:, None, :], t[None, i:i + 256, :])
        best = np.minimum(best, d.min(axis=1))
    return float(best.max())


@dataclass(frozen=True)
class FovealRow:
    eps: float
    restricted: float
    restricted_bound: float
    modulus: float
    modulus_bound: float

    def to_dict(self):
        return {
            "eps": self.eps,
            "restrictedAccuracy": self.restricted,
            "restrictedBound": self.restricted_bound,
            "fovealModulus": self.modulus,
            "modulusBound": self.modulus_bound,
            "holds": self.restricted <= self.restricted_bound and self.modulus <= self.modulus_bound,
        }


def foveal_bounds(fz: FovealSequence, stability: StabilityReport | None = None):
    """Inner-ball accuracy against ``mu F(eps mu)`` and foveal modulus against ``F(eps) + mu F_mu(eps)``.

    Both bounds carry a sampling slack of twice the template covering radius.
    """
    z, mu = fz.source, fz.mu
    if stability is None:
        stability = scale_stability(z, mu)
    slack = 2 * covering_radius(z)
    fmu = dict(zip(stability.schedule, stability.modulus))
    rows = []
    for eps in z.schedule:
        rel = fz.relation(eps)
        inner = fz.inner[eps]
        pix_ok = np.flatnonzero(z.map_space.dist[0] <= mu * (1 + BALL_TOL))
        keep = np.isin(rel.pairs[:, 0], inner) & np.isin(rel.pairs[:, 1], pix_ok)
        restricted = accuracy(Relation(rel.pairs[keep], rel.src, rel.dst)) if keep.any() else 0.0
        rows.append(FovealRow(
            float(eps),
            restricted,
            mu * z.modulus(eps * mu) + slack,
            fz.modulus(eps),
            z.modulus(eps) + mu * fmu.get(eps, 0.0) + slack,
        ))
    return {"slack": slack, "rows": rows,
            "holds": all(r.restricted <= r.restricted_bound and r.modulus <= r.modulus_bound for r in rows)}


def foveal_fixedpoint_check(fz: FovealSequence, jobs=None):
    """Distance between ``limit`` applied after the foveal map and the zoom map at ``eps*mu``.

    Territory points of the inner ball are identified with the fine-scale
    sample, and the zoom map at ``eps*mu`` is restricted to those points.
    Pairs are compared under the sum of the rescaled territory and pixel
    distances.
    """
    z, mu = fz.source, fz.mu
    rows = []
    for eps in z.schedule:
        fine = eps * mu
        inner = fz.inner[eps]
        rel = fz.relation(eps)
        routed = compose(Relation(rel.pairs[np.isin(rel.pairs[:, 0], inner)], rel.src, rel.dst), fz.limit)
        idx = match_points(z.territory(fine), z.territory(eps)[routed.pairs[:, 0]]) if not routed.is_empty else []
        idx = np.asarray(idx, dtype=int)
        ok = idx >= 0
        moved = Relation(np.stack([idx[ok], routed.pairs[ok, 1]], axis=1), z.territory_space(fine), z.map_space) \
            if ok.any() else Relation([], z.territory_space(fine), z.map_space)
        target = z.relation(fine)
        # compare on the witnessed part of the fine sample
        target = Relation(target.pairs[np.isin(target.pairs[:, 0], idx[ok])], target.src, target.dst)
        rows.append({"eps": float(eps), "distance": relation_hausdorff(moved, target, 1.0, jobs),
                     "unmatched": int((~ok).sum())})
    return {"mu": mu, "rows": rows, "max": max(r["distance"] for r in rows)}
