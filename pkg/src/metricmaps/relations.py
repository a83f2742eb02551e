"""Relations between finite metric spaces used as maps.

A relation pairs territory points (``src``) with map pixels (``dst``).
Its accuracy is the worst distance distortion between related pairs,
its resolution the largest territory spread collapsed onto one pixel and
its precision the largest pixel spread representing one territory point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ArgumentError, PreconditionError, StructuralError
from .metric_core import FiniteMetricSpace, read_space
from .parallel import max_reduce


class Relation:
    """A finite subset of ``src x dst`` stored as sorted unique index pairs."""

    __slots__ = ("pairs", "src", "dst", "_domain", "_image")

    def __init__(self, pairs, src: FiniteMetricSpace, dst: FiniteMetricSpace):
        p = np.asarray(pairs, dtype=np.intp)
        if p.size == 0:
            p = np.zeros((0, 2), dtype=np.intp)
        if p.ndim != 2 or p.shape[1] != 2:
            raise StructuralError(f"pairs must have shape (k, 2), got {p.shape}", field="pairs")
        if p.size and (
            p[:, 0].min() < 0 or p[:, 0].max() >= src.n or p[:, 1].min() < 0 or p[:, 1].max() >= dst.n
        ):
            raise StructuralError("pair index out of range", field="pairs")
        p = np.unique(p, axis=0) if p.size else p
        p = np.ascontiguousarray(p)
        p.setflags(write=False)
        self.pairs = p
        self.src = src
        self.dst = dst
        self._domain = None
        self._image = None

    def __len__(self):
        return self.pairs.shape[0]

    def __repr__(self):
        return f"Relation({len(self)} pairs, |src|={self.src.n}, |dst|={self.dst.n})"

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return (
            np.array_equal(self.pairs, other.pairs) and self.src == other.src and self.dst == other.dst
        )

    __hash__ = None

    @property
    def is_empty(self) -> bool:
        return self.pairs.shape[0] == 0

    @property
    def domain(self) -> np.ndarray:
        if self._domain is None:
            self._domain = np.unique(self.pairs[:, 0])
        return self._domain

    @property
    def image(self) -> np.ndarray:
        if self._image is None:
            self._image = np.unique(self.pairs[:, 1])
        return self._image

    @property
    def is_total(self) -> bool:
        return len(self.domain) == self.src.n

    @property
    def is_surjective(self) -> bool:
        return len(self.image) == self.dst.n

    def pair_set(self):
        return {(int(a), int(b)) for a, b in self.pairs}

    def to_dict(self):
        return {"pairs": self.pairs.tolist()}

    @classmethod
    def identity(cls, space: FiniteMetricSpace):
        i = np.arange(space.n)
        return cls(np.stack([i, i], axis=1), space, space)

    @classmethod
    def from_function(cls, mapping, src, dst):
        """Graph of ``mapping`` (a sequence or dict from src index to dst index)."""
        items = mapping.items() if isinstance(mapping, dict) else enumerate(mapping)
        return cls([(a, b) for a, b in items], src, dst)


def inverse(rho: Relation) -> Relation:
    return Relation(rho.pairs[:, ::-1], rho.dst, rho.src)


def compose(rho1: Relation, rho2: Relation) -> Relation:
    """All ``(u, w)`` with a witness ``v`` such that ``(u, v) in rho1`` and ``(v, w) in rho2``.

    The result may be empty; check ``is_empty``.
    """
    if not (rho1.dst is rho2.src or rho1.dst == rho2.src):
        raise ArgumentError("compose: target space of the first relation differs from the source of the second")
    if rho1.is_empty or rho2.is_empty:
        return Relation([], rho1.src, rho2.dst)
    a = np.zeros((rho1.src.n, rho1.dst.n), dtype=bool)
    a[rho1.pairs[:, 0], rho1.pairs[:, 1]] = True
    b = np.zeros((rho2.src.n, rho2.dst.n), dtype=bool)
    b[rho2.pairs[:, 0], rho2.pairs[:, 1]] = True
    c = (a.astype(np.int64) @ b.astype(np.int64)) > 0
    return Relation(np.argwhere(c), rho1.src, rho2.dst)


@dataclass(frozen=True)
class MapQuality:
    accuracy: float
    resolution: float
    precision: float
    resolution_at: dict
    precision_at: dict

    def __post_init__(self):
        if self.resolution > self.accuracy or self.precision > self.accuracy:
            raise AssertionError(
                f"resolution/precision exceed accuracy: {self.resolution}, {self.precision} > {self.accuracy}"
            )

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "resolution": self.resolution,
            "precision": self.precision,
            "resolution_at": {str(k): v for k, v in sorted(self.resolution_at.items())},
            "precision_at": {str(k): v for k, v in sorted(self.precision_at.items())},
        }


def accuracy(rho: Relation, jobs=None) -> float:
    """Worst distortion ``|D(y1, y2) - d(x1, x2)|`` over related pairs."""
    if rho.is_empty:
        return 0.0
    src = np.ascontiguousarray(rho.pairs[:, 0])
    dst = np.ascontiguousarray(rho.pairs[:, 1])
    dsrc = np.ascontiguousarray(rho.src.dist)
    ddst = np.ascontiguousarray(rho.dst.dist)
    return max_reduce(lambda a, b: kernels.relation_accuracy(dsrc, ddst, src, dst, a, b), len(src), jobs)


def _fiber_spread(keys, others, dist):
    out = {}
    order = np.argsort(keys, kind="stable")
    keys, others = keys[order], others[order]
    splits = np.flatnonzero(np.diff(keys)) + 1
    for grp_keys, grp in zip(np.split(keys, splits), np.split(others, splits)):
        out[int(grp_keys[0])] = float(dist[np.ix_(grp, grp)].max()) if len(grp) > 1 else 0.0
    return out


def map_quality(rho: Relation, jobs=None) -> MapQuality:
    if rho.is_empty:
        raise ArgumentError("map_quality needs a nonempty relation")
    acc = accuracy(rho, jobs)
    res_at = _fiber_spread(rho.pairs[:, 1], rho.pairs[:, 0], rho.src.dist)
    prec_at = _fiber_spread(rho.pairs[:, 0], rho.pairs[:, 1], rho.dst.dist)
    return MapQuality(
        accuracy=acc,
        resolution=max(res_at.values()),
        precision=max(prec_at.values()),
        resolution_at=res_at,
        precision_at=prec_at,
    )


def uncovered_points(subset, space: FiniteMetricSpace, eps: float):
    subset = np.asarray(list(subset), dtype=np.intp)
    if subset.size == 0:
        return np.arange(space.n)
    reach = space.dist[:, subset].min(axis=1)
    return np.flatnonzero(reach > eps)


def is_dense(subset, space: FiniteMetricSpace, eps: float) -> bool:
    """True iff every point lies within ``eps`` (closed) of some subset point."""
    if eps < 0:
        raise ArgumentError(f"eps must be nonnegative, got {eps}")
    return uncovered_points(subset, space, eps).size == 0


def generalize(rho: Relation, eps: float, mu: float) -> Relation:
    """Thicken ``rho`` by ``eps`` on the territory side and ``mu`` on the map side."""
    if eps < 0 or mu < 0:
        raise ArgumentError("eps and mu must be nonnegative")
    if rho.is_empty:
        raise PreconditionError("cannot generalize an empty relation")
    bad = uncovered_points(rho.domain, rho.src, eps)
    if bad.size:
        p = int(bad[0])
        raise PreconditionError(
            f"domain is not {eps}-dense: territory point {p} ({rho.src.labels[p]!r}) is uncovered", point=p
        )
    bad = uncovered_points(rho.image, rho.dst, mu)
    if bad.size:
        p = int(bad[0])
        raise PreconditionError(
            f"image is not {mu}-dense: map point {p} ({rho.dst.labels[p]!r}) is uncovered", point=p
        )
    near_x = (rho.src.dist[:, rho.pairs[:, 0]] <= eps).astype(np.int64)
    near_y = (rho.dst.dist[:, rho.pairs[:, 1]] <= mu).astype(np.int64)
    hit = (near_x @ near_y.T) > 0
    return Relation(np.argwhere(hit), rho.src, rho.dst)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    witness_dependent: bool = False

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol=1e-9) -> bool:
        return self.slack >= -tol

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.holds(),
            "witness_dependent": self.witness_dependent,
        }


def check_generalization_bounds(rho: Relation, rho_bar: Relation, eps: float, mu: float, jobs=None):
    """Evaluate the accuracy/precision/resolution bounds between ``rho`` and its generalization.

    The lower bounds of (c) and (d) need points at exact distance ``eps``
    (resp. ``mu``) from the relation's points; they are returned with
    ``witness_dependent=True`` and are only guaranteed on samples that
    contain such points.
    """
    if rho_bar.src != rho.src or rho_bar.dst != rho.dst:
        raise ArgumentError("rho and rho_bar live on different spaces")
    if rho_bar != generalize(rho, eps, mu):
        raise ArgumentError("rho_bar is not the generalization of rho at (eps, mu)")
    q = map_quality(rho, jobs)
    qb = map_quality(rho_bar, jobs)
    spread = 2 * (eps + mu)
    return [
        BoundCheck("a", q.resolution, q.accuracy),
        BoundCheck("b", q.precision, q.accuracy),
        BoundCheck("c_upper", qb.resolution, q.accuracy + spread),
        BoundCheck("d_upper", qb.precision, q.accuracy + spread),
        BoundCheck("e", abs(qb.accuracy - q.accuracy), spread),
        BoundCheck("c_lower", q.resolution + 2 * eps, qb.resolution, witness_dependent=True),
        BoundCheck("d_lower", q.precision + 2 * mu, qb.precision, witness_dependent=True),
    ]


# ---------------------------------------------------------------- file formats


def relation_from_dict(obj, base_dir=".", where="relation"):
    if not isinstance(obj, dict):
        raise StructuralError(f"{where}: expected a JSON object", field="<root>")
    for key in ("src", "dst", "pairs"):
        if key not in obj:
            raise StructuralError(f"{where}: missing field '{key}'", field=key)
    spaces = []
    for key in ("src", "dst"):
        ref = obj[key]
        if isinstance(ref, str):
            spaces.append(read_space(Path(base_dir) / ref))
        else:
            from .metric_core import space_from_dict

            spaces.append(space_from_dict(ref, where=f"{where}.{key}"))
    pairs = obj["pairs"]
    if not isinstance(pairs, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(i, int) for i in p) for p in pairs
    ):
        raise StructuralError(f"{where}: 'pairs' must be a list of [i, j] integer pairs", field="pairs")
    return Relation(pairs, spaces[0], spaces[1])


def read_relation(path) -> Relation:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}", field="<json>") from None
    return relation_from_dict(obj, base_dir=path.parent, where=str(path))
