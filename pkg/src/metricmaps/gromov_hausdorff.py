"""Gromov-Hausdorff distance between finite metric spaces.

The distance is the smallest accuracy of a relation whose domain is all
of ``X`` and whose image is all of ``Y``. No factor 1/2 is applied; pass
``classical=True`` to :meth:`GhResult.to_dict` for the halved convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ArgumentError, StructuralError
from .metric_core import FiniteMetricSpace
from .relations import Relation, accuracy

# pixel sides larger than this are never handed to the exact search
MAX_EXACT_PIXELS = 16
ORACLE_MAX_PAIRS = 16


class Correspondence(Relation):
    """A relation with full domain and full image."""

    __slots__ = ()

    def __init__(self, pairs, src, dst):
        super().__init__(pairs, src, dst)
        if not self.is_total:
            raise StructuralError("correspondence must cover every source point", field="pairs")
        if not self.is_surjective:
            raise StructuralError("correspondence must cover every target point", field="pairs")

    @classmethod
    def from_relation(cls, rho: Relation):
        return cls(rho.pairs, rho.src, rho.dst)


@dataclass(frozen=True)
class GhResult:
    value: float
    witness: Correspondence
    exact: bool
    lower_bound: float
    upper_bound: float
    nodes_explored: int = 0
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        tol = 1e-12 * max(1.0, abs(self.upper_bound))
        if not (self.lower_bound - tol <= self.value <= self.upper_bound + tol):
            raise AssertionError(f"bounds do not bracket value: {self}")
        if self.exact and not (self.lower_bound == self.value == self.upper_bound):
            raise AssertionError("exact result must have collapsed bounds")

    def to_dict(self, classical=False):
        k = 0.5 if classical else 1.0
        return {
            "value": k * self.value,
            "exact": self.exact,
            "lowerBound": k * self.lower_bound,
            "upperBound": k * self.upper_bound,
            "nodesExplored": self.nodes_explored,
            "classical": bool(classical),
            "witness": self.witness.pairs.tolist(),
        }


def is_admissible(rho: Relation, mu: float) -> bool:
    return bool(rho.is_total and rho.is_surjective and accuracy(rho) <= mu)


def _check_spaces(X, Y):
    for s in (X, Y):
        if not isinstance(s, FiniteMetricSpace) or s.n == 0:
            raise ArgumentError("Gromov-Hausdorff computations need two nonempty spaces")


def _distance_values(space):
    return np.unique(np.concatenate([[0.0], space.dist[np.triu_indices(space.n, 1)]]))


def gh_lower_bound(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """Cheap lower bound on the optimal correspondence accuracy.

    Any correspondence of accuracy ``r`` matches every distance value of one
    space with a value of the other within ``r``, so the Hausdorff distance
    between the two value sets (0 included) is a lower bound, as is the
    difference of diameters.
    """
    _check_spaces(X, Y)
    a, b = _distance_values(X), _distance_values(Y)
    gap = np.abs(a[:, None] - b[None, :])
    haus = max(float(gap.min(axis=1).max()), float(gap.min(axis=0).max()))
    return max(abs(X.diameter - Y.diameter), haus)


def _pair_distortion(X, Y, xs, ys):
    return np.abs(Y.dist[np.ix_(ys, ys)] - X.dist[np.ix_(xs, xs)])


def gh_upper_bound(X: FiniteMetricSpace, Y: FiniteMetricSpace, max_rounds=50) -> GhResult:
    """Greedy profile matching followed by strictly improving local search.

    The correspondence is the union of the graph of ``f: X -> Y`` and the
    transposed graph of ``g: Y -> X``. Moves reassign one ``f(x)``, one
    ``g(y)``, or swap two values of ``f``. ``history`` records the accuracy
    after the greedy phase and after every accepted move.
    """
    _check_spaces(X, Y)
    dx, dy = X.dist, Y.dist
    n, m = X.n, Y.n
    ecc_x, ecc_y = dx.max(axis=1), dy.max(axis=1)

    f = np.full(n, -1)
    used = np.zeros(m, dtype=bool)
    for x in np.argsort(-ecc_x, kind="stable"):
        done = np.flatnonzero(f >= 0)
        if done.size:
            cost = np.abs(dy[:, f[done]] - dx[x, done][None, :]).max(axis=1)
        else:
            cost = np.zeros(m)
        key = np.lexsort((np.arange(m), used, np.abs(ecc_y - ecc_x[x]), cost))
        f[x] = key[0]
        used[key[0]] = True
    g = np.empty(m, dtype=int)
    for y in range(m):
        cost = np.abs(dy[y, f][None, :] - dx[:, np.arange(n)]).max(axis=1)
        g[y] = np.lexsort((np.arange(n), np.abs(ecc_x - ecc_y[y]), cost))[0]

    xs = np.concatenate([np.arange(n), g])
    ys = np.concatenate([f, np.arange(m)])
    M = _pair_distortion(X, Y, xs, ys)
    best = float(M.max())
    history = [best]

    def try_rows(rows, nx, ny):
        nonlocal M, best
        xs2, ys2 = xs.copy(), ys.copy()
        xs2[rows], ys2[rows] = nx, ny
        M2 = M.copy()
        r = np.abs(dy[np.ix_(ys2[rows], ys2)] - dx[np.ix_(xs2[rows], xs2)])
        M2[rows, :] = r
        M2[:, rows] = r.T
        val = float(M2.max())
        if val < best:
            xs[:], ys[:] = xs2, ys2
            M, best = M2, val
            history.append(val)
            return True
        return False

    for _ in range(max_rounds):
        if best == 0.0:
            break
        improved = False
        for x in range(n):
            for y in range(m):
                if y != ys[x] and try_rows([x], [x], [y]):
                    improved = True
        for y in range(m):
            for x in range(n):
                if x != xs[n + y] and try_rows([n + y], [x], [y]):
                    improved = True
        for x1 in range(n):
            for x2 in range(x1 + 1, n):
                if ys[x1] != ys[x2] and try_rows([x1, x2], [x1, x2], [ys[x2], ys[x1]]):
                    improved = True
        if not improved:
            break

    witness = Correspondence(np.stack([xs, ys], axis=1), X, Y)
    lower = min(gh_lower_bound(X, Y), best)
    return GhResult(best, witness, best == lower, lower, best, 0, tuple(history))


def _eccentricity_order(space):
    return np.argsort(-space.dist.max(axis=1), kind="stable")


def gh_exact(X: FiniteMetricSpace, Y: FiniteMetricSpace, node_budget: int = 2_000_000) -> GhResult:
    """Exact distance by branch and bound over correspondences.

    Each point of the larger space is assigned a nonempty set of points of
    the smaller one (the pixel side), in order of decreasing eccentricity,
    candidates tried by increasing partial accuracy. Branches whose lower
    bound reaches the incumbent are cut. If the budget runs out the result
    has ``exact=False`` and brackets the value.
    """
    _check_spaces(X, Y)
    if node_budget <= 0:
        raise ArgumentError(f"node budget must be positive, got {node_budget}")
    swapped = Y.n > X.n
    A, B = (Y, X) if swapped else (X, Y)

    upper = gh_upper_bound(A, B)
    lower = gh_lower_bound(A, B)
    best, witness, nodes, complete = upper.value, upper.witness, 0, True
    if best > lower:
        if B.n > MAX_EXACT_PIXELS:
            complete = False
        else:
            val, masks, nodes, complete = kernels.bnb_search(
                A.dist, B.dist, _eccentricity_order(A), best, node_budget
            )
            if masks is not None:
                pairs = [(x, y) for x, mk in enumerate(masks) for y in range(B.n) if mk >> y & 1]
                best, witness = float(val), Correspondence(pairs, A, B)
    if swapped:
        witness = Correspondence(witness.pairs[:, ::-1], X, Y)
    if complete:
        return GhResult(best, witness, True, best, best, nodes)
    return GhResult(best, witness, False, min(lower, best), best, nodes)


def gh_oracle(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """Minimum accuracy over every subset of ``X x Y`` with full projections.

    Exhaustive over ``2**(|X||Y|)`` subsets; meant as an independent check.
    """
    _check_spaces(X, Y)
    n, m = X.n, Y.n
    k = n * m
    if k > ORACLE_MAX_PAIRS:
        raise ArgumentError(f"oracle limited to |X||Y| <= {ORACLE_MAX_PAIRS}, got {k}")
    px = np.repeat(np.arange(n), m)
    py = np.tile(np.arange(m), n)
    cost = np.abs(Y.dist[np.ix_(py, py)] - X.dist[np.ix_(px, px)])

    # grow tables over subsets of the first j pairs, doubling each step
    acc = np.zeros(1)
    dom = np.zeros(1, dtype=np.int64)
    img = np.zeros(1, dtype=np.int64)
    for j in range(k):
        row = np.zeros(1)
        for i in range(j):
            row = np.concatenate([row, np.maximum(row, cost[j, i])])
        acc = np.concatenate([acc, np.maximum(acc, row)])
        dom = np.concatenate([dom, dom | (1 << int(px[j]))])
        img = np.concatenate([img, img | (1 << int(py[j]))])
    ok = (dom == (1 << n) - 1) & (img == (1 << m) - 1)
    return float(acc[ok].min())
