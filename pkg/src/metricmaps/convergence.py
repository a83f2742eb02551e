"""Finite-schedule proxies for limits as eps -> 0."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SCHEDULE = tuple(2.0 ** -k for k in range(3, 11))
# residuals at or below this are treated as exact zeros
RESIDUAL_FLOOR = 1e-12
_TAIL = 4


@dataclass(frozen=True)
class ConvergenceEstimate:
    schedule: tuple
    residuals: tuple
    fitted_order: float | None
    verdict: str  # "converges", "diverges" or "inconclusive"

    def __post_init__(self):
        s = self.schedule
        if any(b >= a for a, b in zip(s, s[1:])):
            raise ValueError("schedule must be strictly decreasing")
        if len(self.residuals) != len(s):
            raise ValueError("one residual per schedule entry")
        if any(not r >= 0 for r in self.residuals):
            raise ValueError("residuals must be nonnegative")

    @property
    def finest(self) -> float:
        return self.residuals[-1]

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    def to_dict(self):
        return {
            "schedule": list(self.schedule),
            "residuals": list(self.residuals),
            "fittedOrder": self.fitted_order,
            "verdict": self.verdict,
        }


def fit_order(schedule, residuals, floor=RESIDUAL_FLOOR):
    """Least-squares slope of log(residual) against log(eps), over entries above ``floor``."""
    e = np.asarray(schedule, dtype=float)
    r = np.asarray(residuals, dtype=float)
    keep = r > floor
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(e[keep]), np.log(r[keep]), 1)[0])


def estimate(schedule, residuals, floor=RESIDUAL_FLOOR) -> ConvergenceEstimate:
    """Assemble an estimate and its verdict.

    All residuals at or below ``floor`` count as exact convergence with no
    order. Otherwise "converges" needs a positive fitted order and strictly
    decreasing residuals over the last four entries, "diverges" a negative
    order and strictly increasing tail.
    """
    schedule = tuple(float(e) for e in schedule)
    residuals = tuple(float(r) for r in residuals)
    if all(r <= floor for r in residuals):
        return ConvergenceEstimate(schedule, residuals, None, "converges")
    order = fit_order(schedule, residuals, floor)
    tail = np.asarray(residuals[-_TAIL:])
    steps = np.diff(tail)
    if order is not None and order > 0 and (np.all(steps < 0) or np.all(tail <= floor)):
        verdict = "converges"
    elif order is not None and order < 0 and np.all(steps > 0):
        verdict = "diverges"
    else:
        verdict = "inconclusive"
    return ConvergenceEstimate(schedule, residuals, order, verdict)


def check_schedule(schedule):
    from .errors import ArgumentError

    s = [float(e) for e in schedule]
    if len(s) < 2:
        raise ArgumentError("schedule needs at least two entries")
    if any(not (0 < e < 1) for e in s):
        raise ArgumentError("schedule entries must lie in (0, 1)")
    if any(b >= a for a, b in zip(s, s[1:])):
        raise ArgumentError("schedule must be strictly decreasing")
    return tuple(s)


def richardson_limit(schedule, values, degree=2):
    """Extrapolate ``values(eps)`` to eps = 0 by a polynomial fit over the finest entries.

    ``values`` has shape ``(len(schedule), ...)``; the fit uses the last
    ``degree + 1`` entries and is exact for polynomials of that degree.
    """
    e = np.asarray(schedule, dtype=float)[-(degree + 1):]
    v = np.asarray(values, dtype=float)[-(degree + 1):]
    # Lagrange weights at 0
    w = np.ones(len(e))
    for i in range(len(e)):
        for j in range(len(e)):
            if i != j:
                w[i] *= e[j] / (e[j] - e[i])
    return np.tensordot(w, v, axes=1)
