"""Finite metric spaces: construction, validation, rescaling, nets and I/O."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArgumentError, StructuralError

READ_SYMMETRY_TOL = 1e-9


class FiniteMetricSpace:
    """Labelled points with a pairwise distance matrix.

    The matrix is copied and made read-only; instances are immutable.
    Only structural properties (shape, finiteness, sign) are enforced here,
    the metric axioms are checked by :func:`validate_metric`.
    """

    __slots__ = ("labels", "dist")

    def __init__(self, labels: Sequence[str] | None, dist):
        d = np.array(dist, dtype=float, copy=True)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise StructuralError(f"distance matrix must be square, got shape {d.shape}", field="dist")
        if d.shape[0] == 0:
            raise StructuralError("a metric space needs at least one point", field="dist")
        if labels is None:
            labels = [str(i) for i in range(d.shape[0])]
        labels = tuple(str(s) for s in labels)
        if len(labels) != d.shape[0]:
            raise StructuralError(
                f"{len(labels)} labels for a {d.shape[0]}x{d.shape[0]} matrix", field="labels"
            )
        if not np.all(np.isfinite(d)):
            raise StructuralError("distance matrix contains NaN or infinite entries", field="dist")
        if np.any(d < 0):
            raise StructuralError("distance matrix contains negative entries", field="dist")
        d.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", d)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteMetricSpace is immutable")

    def __len__(self):
        return self.dist.shape[0]

    def __repr__(self):
        return f"FiniteMetricSpace(n={len(self)}, diameter={self.diameter:.6g})"

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self is other or (
            self.labels == other.labels and np.array_equal(self.dist, other.dist)
        )

    def __hash__(self):
        return hash((self.labels, self.dist.tobytes()))

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    @classmethod
    def from_points(cls, points, metric=None, labels=None):
        """Build a space from coordinates.

        ``metric(p, q)`` must broadcast over leading axes; the default is the
        Euclidean norm of the difference.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if metric is None:
            diff = pts[:, None, :] - pts[None, :, :]
            d = np.sqrt(np.sum(diff * diff, axis=-1))
        else:
            d = metric(pts[:, None, :], pts[None, :, :])
        d = np.array(d, dtype=float)
        np.fill_diagonal(d, 0.0)
        return cls(labels, d)

    def to_dict(self):
        return {"labels": list(self.labels), "dist": self.dist.tolist()}


@dataclass(frozen=True)
class Violation:
    kind: str  # "triangle", "symmetry", "diagonal" or "separation"
    points: tuple
    slack: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "points": list(v.points), "slack": v.slack} for v in self.violations
            ],
        }


def validate_metric(space: FiniteMetricSpace) -> ValidationReport:
    """List every metric-axiom violation of ``space``.

    Tolerance is relative: ``1e-12`` times the largest entry.
    """
    d = space.dist
    n = d.shape[0]
    tol = 1e-12 * float(d.max()) if n else 0.0
    out = []

    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        out.append(Violation("diagonal", (int(i), int(i), int(i)), float(d[i, i])))

    asym = np.abs(d - d.T)
    for i, j in zip(*np.nonzero(np.triu(asym > tol, 1))):
        out.append(Violation("symmetry", (int(i), int(j), int(i)), float(asym[i, j])))

    off = ~np.eye(n, dtype=bool)
    for i, j in zip(*np.nonzero(off & (d <= 0))):
        if i < j:
            out.append(Violation("separation", (int(i), int(j), int(j)), float(-d[i, j])))

    # slack[i, j, k] = d[i, k] - d[i, j] - d[j, k]; one middle index at a time
    for j in range(n):
        slack = d - d[:, j][:, None] - d[j, :][None, :]
        for i, k in zip(*np.nonzero(slack > tol)):
            out.append(Violation("triangle", (int(i), j, int(k)), float(slack[i, k])))

    out.sort(key=lambda v: (v.kind, v.points))
    return ValidationReport(tuple(out))


def rescale(space: FiniteMetricSpace, factor: float) -> FiniteMetricSpace:
    factor = float(factor)
    if not math.isfinite(factor) or factor <= 0:
        raise ArgumentError(f"rescale factor must be positive and finite, got {factor}")
    return FiniteMetricSpace(space.labels, space.dist * factor)


def eps_net(space: FiniteMetricSpace, eps: float) -> list[int]:
    """Greedy farthest-point net starting at point 0; the result is eps-dense."""
    if not eps > 0:
        raise ArgumentError(f"eps must be positive, got {eps}")
    d = space.dist
    centers = [0]
    reach = d[0].copy()
    while True:
        far = int(np.argmax(reach))
        if reach[far] <= eps:
            return centers
        centers.append(far)
        np.minimum(reach, d[far], out=reach)


def restrict(space: FiniteMetricSpace, subset: Sequence[int]) -> FiniteMetricSpace:
    idx = [int(i) for i in subset]
    if not idx:
        raise ArgumentError("cannot restrict to an empty subset")
    if len(set(idx)) != len(idx):
        raise ArgumentError("subset contains duplicate point ids")
    bad = [i for i in idx if i < 0 or i >= space.n]
    if bad:
        raise ArgumentError(f"point ids out of range: {bad}")
    ix = np.asarray(idx)
    return FiniteMetricSpace([space.labels[i] for i in idx], space.dist[np.ix_(ix, ix)])


# ---------------------------------------------------------------- file formats


def _check_read_symmetry(d, where):
    d = np.asarray(d, dtype=float)
    if d.ndim == 2 and d.shape[0] == d.shape[1] and d.size:
        gap = np.max(np.abs(d - d.T))
        if gap > READ_SYMMETRY_TOL:
            raise StructuralError(f"{where}: matrix is asymmetric by {gap:.3g}", field="dist")


def space_from_dict(obj, where="space") -> FiniteMetricSpace:
    if not isinstance(obj, dict):
        raise StructuralError(f"{where}: expected a JSON object", field="<root>")
    for key in ("labels", "dist"):
        if key not in obj:
            raise StructuralError(f"{where}: missing field '{key}'", field=key)
    labels, dist = obj["labels"], obj["dist"]
    if not isinstance(labels, list):
        raise StructuralError(f"{where}: 'labels' must be a list", field="labels")
    if not isinstance(dist, list) or not all(isinstance(r, list) for r in dist):
        raise StructuralError(f"{where}: 'dist' must be a list of rows", field="dist")
    if any(len(r) != len(dist) for r in dist):
        raise StructuralError(f"{where}: 'dist' is not square", field="dist")
    try:
        d = np.array(dist, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"{where}: non-numeric entry in 'dist' ({exc})", field="dist") from None
    _check_read_symmetry(d, where)
    return FiniteMetricSpace(labels, d)


def read_space(path) -> FiniteMetricSpace:
    """Read a space from ``.json`` or ``.csv`` (header row of labels)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return read_space_csv(io.StringIO(text), where=str(path))
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}", field="<json>") from None
    return space_from_dict(obj, where=str(path))


def read_space_csv(stream, where="csv") -> FiniteMetricSpace:
    rows = [r for r in csv.reader(stream) if r]
    if not rows:
        raise StructuralError(f"{where}: empty file", field="<header>")
    labels = [s.strip() for s in rows[0]]
    try:
        d = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise StructuralError(f"{where}: {exc}", field="dist") from None
    if d.shape != (len(labels), len(labels)):
        raise StructuralError(f"{where}: expected {len(labels)}x{len(labels)} matrix", field="dist")
    _check_read_symmetry(d, where)
    return FiniteMetricSpace(labels, d)


def write_space(space: FiniteMetricSpace, path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(space.labels)
            for row in space.dist:
                w.writerow([repr(float(v)) for v in row])
    else:
        path.write_text(json.dumps(space.to_dict()))
