"""Dilation structures on model spaces.

Points are numpy arrays whose last axis holds coordinates; every method
broadcasts over leading axes. ``dilate(x, eps, u)`` moves ``u`` towards the
base point ``x`` by the factor ``eps``.

Each structure lives on a U(x) neighbourhood of radius ``u_radius`` around
every base point, with inclusion constants ``A < u_radius < B``. Samples
used by exactness checks come from a dyadic lattice, on which the group
and dilation arithmetic is exact in float64 for dyadic factors.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError

A_CONST = 2.0
B_CONST = 3.0
U_RADIUS = 0.5 * (A_CONST + B_CONST)
DOMAIN_RADIUS = 1.0
LATTICE_STEP = 2.0 ** -6


def _factor(eps):
    return np.expand_dims(np.asarray(eps, dtype=float), -1)


def _check_eps(eps):
    e = np.asarray(eps, dtype=float)
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise ArgumentError("dilation factors must be positive and finite")


class DilationStructure:
    """Interface shared by the concrete structures."""

    name = "abstract"
    dim = 0
    A = A_CONST
    B = B_CONST
    u_radius = U_RADIUS
    domain_radius = DOMAIN_RADIUS

    def distance(self, u, v):
        raise NotImplementedError

    def dilate(self, x, eps, u):
        raise NotImplementedError

    def offset(self, x, w):
        """Point reached from ``x`` by the coordinate displacement ``w``."""
        return np.asarray(x, dtype=float) + np.asarray(w, dtype=float)

    def box(self, r):
        """Per-axis half widths of a displacement box covering the ball of radius ``r``."""
        raise NotImplementedError

    def lattice_steps(self):
        return np.full(self.dim, LATTICE_STEP)

    def tangent_structure(self):
        """Model structure of the tangent space (the structure itself when it is conical)."""
        return self

    def tangent_distance(self, x):
        """Model distance expected in the tangent space at ``x``."""
        return self.tangent_structure().distance

    def params(self):
        return {}

    def to_dict(self):
        return {"structure": self.name, **self.params()}

    def __repr__(self):
        p = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({p})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.params().items()))))

    def sample(self, rng, x, k, radius, lattice=True):
        """``k`` points ``u`` with ``distance(x, u) <= radius``.

        ``x`` is one point or an array of ``k`` base points. Lattice samples
        are displacements on the structure's dyadic lattice.
        """
        x = np.asarray(x, dtype=float)
        base = np.broadcast_to(x, (k, self.dim)) if x.ndim == 1 else x
        if base.shape != (k, self.dim):
            raise ArgumentError(f"expected {k} base points of dimension {self.dim}")
        half = self.box(radius)
        steps = self.lattice_steps()
        out = np.empty((k, self.dim))
        todo = np.arange(k)
        while todo.size:
            if lattice:
                n = np.floor(half / steps).astype(np.int64)
                w = rng.integers(-n, n + 1, size=(todo.size, self.dim)) * steps
            else:
                w = rng.uniform(-half, half, size=(todo.size, self.dim))
            p = self.offset(base[todo], w)
            ok = self.distance(base[todo], p) <= radius
            out[todo[ok]] = p[ok]
            todo = todo[~ok]
        return out


class Euclidean(DilationStructure):
    name = "euclid"

    def __init__(self, dim=2):
        self.dim = int(dim)

    def params(self):
        return {"dim": self.dim}

    def distance(self, u, v):
        d = np.asarray(v, dtype=float) - np.asarray(u, dtype=float)
        return np.sqrt(np.sum(d * d, axis=-1))

    def dilate(self, x, eps, u):
        x = np.asarray(x, dtype=float)
        return x + _factor(eps) * (np.asarray(u, dtype=float) - x)

    def box(self, r):
        return np.full(self.dim, float(r))


class Snowflake(Euclidean):
    """Euclidean coordinates with distance ``|u - v| ** alpha``."""

    name = "snowflake"

    def __init__(self, dim=2, alpha=0.5):
        super().__init__(dim)
        alpha = float(alpha)
        if not 0 < alpha <= 1:
            raise ArgumentError(f"snowflake exponent must lie in (0, 1], got {alpha}")
        self.alpha = alpha

    def params(self):
        return {"dim": self.dim, "alpha": self.alpha}

    def distance(self, u, v):
        return np.power(super().distance(u, v), self.alpha)

    def dilate(self, x, eps, u):
        return super().dilate(x, np.power(np.asarray(eps, dtype=float), 1.0 / self.alpha), u)

    def box(self, r):
        return np.full(self.dim, float(r) ** (1.0 / self.alpha))


class LogPerturbedEuclidean(Euclidean):
    """Distance ``log(1 + |u - v|)`` with Euclidean dilations; not linear."""

    name = "logpe"

    def distance(self, u, v):
        return np.log1p(super().distance(u, v))

    def tangent_structure(self):
        return Euclidean(self.dim)

    def box(self, r):
        return np.full(self.dim, float(np.expm1(r)))


class Heisenberg(DilationStructure):
    """First Heisenberg group in exponential coordinates ``(a, b, c)``.

    Product ``(a, b, c)(a', b', c') = (a + a', b + b', c + c' + (ab' - a'b)/2)``,
    dilations ``(ea, eb, e^2 c)`` and the gauge ``((a^2 + b^2)^2 + 16 c^2)^(1/4)``.
    """

    name = "heis"
    dim = 3

    @staticmethod
    def mul(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        a, b, c = p[..., 0], p[..., 1], p[..., 2]
        a2, b2, c2 = q[..., 0], q[..., 1], q[..., 2]
        return np.stack([a + a2, b + b2, c + c2 + (a * b2 - a2 * b) / 2], axis=-1)

    @staticmethod
    def inv(p):
        return -np.asarray(p, dtype=float)

    @staticmethod
    def scale(eps, p):
        e = np.asarray(eps, dtype=float)
        p = np.asarray(p, dtype=float)
        return np.stack([e * p[..., 0], e * p[..., 1], (e * e) * p[..., 2]], axis=-1)

    @staticmethod
    def gauge(p):
        p = np.asarray(p, dtype=float)
        s = p[..., 0] * p[..., 0] + p[..., 1] * p[..., 1]
        return np.sqrt(np.sqrt(s * s + 16.0 * p[..., 2] * p[..., 2]))

    def distance(self, u, v):
        return self.gauge(self.mul(self.inv(u), v))

    def dilate(self, x, eps, u):
        return self.mul(x, self.scale(eps, self.mul(self.inv(x), u)))

    def offset(self, x, w):
        return self.mul(x, w)

    def box(self, r):
        r = float(r)
        return np.array([r, r, r * r / 4])

    def lattice_steps(self):
        return np.array([LATTICE_STEP, LATTICE_STEP, LATTICE_STEP * LATTICE_STEP / 2])


class Transported(DilationStructure):
    """Image of a structure under an invertible point map ``f``."""

    def __init__(self, base: DilationStructure, f, f_inv):
        self.base = base
        self.f = f
        self.f_inv = f_inv
        self.dim = base.dim
        self.name = f"transported({base.name})"

    def params(self):
        return {"base": self.base.to_dict(), "f": getattr(self.f, "__name__", repr(self.f))}

    def __eq__(self, other):
        return self is other

    __hash__ = object.__hash__

    def distance(self, u, v):
        return self.base.distance(self.f_inv(u), self.f_inv(v))

    def dilate(self, x, eps, u):
        return self.f(self.base.dilate(self.f_inv(x), eps, self.f_inv(u)))

    def tangent_distance(self, x):
        td = self.base.tangent_distance(self.f_inv(x))
        return lambda u, v: td(self.f_inv(u), self.f_inv(v))

    def sample(self, rng, x, k, radius, lattice=True):
        return self.f(self.base.sample(rng, self.f_inv(x), k, radius, lattice))


def transport(s: DilationStructure, f, f_inv, check_points=None, tol=1e-9):
    """Push ``s`` forward along ``f``: distances and dilations are conjugated.

    ``check_points`` (points of the new space) are used to confirm that
    ``f`` and ``f_inv`` are mutually inverse.
    """
    if check_points is not None:
        p = np.asarray(check_points, dtype=float)
        gap = max(
            float(np.max(np.abs(f(f_inv(p)) - p), initial=0.0)),
            float(np.max(np.abs(f_inv(f(p)) - p), initial=0.0)),
        )
        if gap > tol:
            raise ArgumentError(f"f and f_inv are not mutually inverse on the sample (gap {gap:.3g})")
    return Transported(s, f, f_inv)


class Magnified(DilationStructure):
    """The structure seen through the dilation of factor ``eps`` at ``x``.

    Distance ``(1/eps) d(dilate(x, eps, u), dilate(x, eps, v))`` and dilations
    conjugated by ``dilate(x, eps, .)``.
    """

    def __init__(self, base: DilationStructure, x, eps):
        _check_eps(eps)
        if not 0 < eps < 1:
            raise ArgumentError(f"magnification factor must lie in (0, 1), got {eps}")
        self.base = base
        self.x = np.asarray(x, dtype=float)
        self.eps = float(eps)
        self.dim = base.dim
        self.name = f"magnified({base.name})"

    def params(self):
        return {"base": self.base.to_dict(), "x": self.x.tolist(), "eps": self.eps}

    def _in(self, u):
        return self.base.dilate(self.x, self.eps, u)

    def _out(self, p):
        return self.base.dilate(self.x, 1.0 / self.eps, p)

    def distance(self, u, v):
        return self.base.distance(self._in(u), self._in(v)) / self.eps

    def dilate(self, y, mu, v):
        return self._out(self.base.dilate(self._in(y), mu, self._in(v)))

    def offset(self, x, w):
        return self.base.offset(x, w)

    def box(self, r):
        return self.base.box(r)

    def lattice_steps(self):
        return self.base.lattice_steps()

    def tangent_structure(self):
        return self.base.tangent_structure()


def magnify(s: DilationStructure, x, eps) -> Magnified:
    return Magnified(s, x, eps)


STRUCTURES = {
    "euclid": Euclidean,
    "snowflake": Snowflake,
    "logpe": LogPerturbedEuclidean,
    "heis": Heisenberg,
}


def make_structure(name, alpha=0.5, dim=None):
    if name not in STRUCTURES:
        raise ArgumentError(f"unknown structure {name!r}; choose from {sorted(STRUCTURES)}")
    if name == "heis":
        return Heisenberg()
    dim = 2 if dim is None else dim
    if name == "snowflake":
        return Snowflake(dim, alpha)
    return STRUCTURES[name](dim)
