"""Distances between a step CDF and the standard normal.

The Kolmogorov distance is evaluated exactly at the jump points (both
one-sided gaps).  The L1 distance is integrated piece by piece in closed
form: on each constant piece the unique crossing of Phi with the level is
bracketed by bisection, and the antiderivative ``int Phi = t Phi(t) + phi(t)``
handles every segment including the unbounded tails, so no quadrature or
truncation enters.  Intermediate L^p values are reported through the
interpolation bound ``||f||_p^p <= ||f||_inf^{p-1} ||f||_1``; an optional
Simpson quadrature exists for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import EmptySample, InputError, InvalidP
from .involutions import ExactDistribution

BISECT_TOL = 1e-12
_SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    return ndtr(x)


def normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT2PI


@dataclass(eq=False)
class StepCDF:
    """Right-continuous step function: F(t) = cum[i] for xs[i] <= t < xs[i+1]."""

    xs: np.ndarray
    cum: np.ndarray

    def __post_init__(self) -> None:
        if self.xs.size == 0:
            raise EmptySample("step CDF needs at least one jump")
        if np.any(np.diff(self.xs) <= 0):
            raise InputError("jump points must be strictly increasing")
        if np.any(np.diff(self.cum) < 0) or self.cum[-1] != 1.0:
            raise InputError("cumulative values must be nondecreasing and end at 1")

    def __call__(self, t: float) -> float:
        idx = np.searchsorted(self.xs, t, side="right")
        return 0.0 if idx == 0 else float(self.cum[idx - 1])


def ecdf(samples) -> StepCDF:
    """Empirical CDF; jump heights are integer multiples of 1/m."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise EmptySample("empty sample")
    vals, counts = np.unique(arr, return_counts=True)
    cum = np.cumsum(counts) / arr.size
    cum[-1] = 1.0
    return StepCDF(xs=vals, cum=cum)


def step_cdf_from_distribution(dist: ExactDistribution) -> StepCDF:
    cum = np.cumsum(dist.counts) / dist.total
    cum[-1] = 1.0
    return StepCDF(xs=dist.values.copy(), cum=cum)


def kolmogorov_distance(F: StepCDF) -> float:
    """sup_t |F(t) - Phi(t)|, exact: both gaps at every jump point."""
    phis = normal_cdf(F.xs)
    upper = np.abs(F.cum - phis)
    lower = np.abs(phis - np.concatenate(([0.0], F.cum[:-1])))
    return float(max(upper.max(), lower.max()))


def _int_phi(a: float, b: float) -> float:
    """int_a^b Phi(t) dt via the antiderivative t Phi(t) + phi(t)."""

    def anti(t: float) -> float:
        return t * float(ndtr(t)) + math.exp(-0.5 * t * t) / _SQRT2PI

    return anti(b) - anti(a)


def _crossing(c: float, a: float, b: float) -> float:
    """Bisect for Phi(t) = c on [a, b]; |Phi(t*) - c| < 1e-12 at return."""
    lo, hi = a, b
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = float(ndtr(mid))
        if abs(val - c) < BISECT_TOL:
            return mid
        if val < c:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(a), abs(b)):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def _piece_abs_integral(c: float, a: float, b: float) -> float:
    """int_a^b |c - Phi(t)| dt for constant level c; Phi is increasing."""
    phi_a = float(ndtr(a))
    phi_b = float(ndtr(b))
    if phi_b <= c:
        return c * (b - a) - _int_phi(a, b)
    if phi_a >= c:
        return _int_phi(a, b) - c * (b - a)
    t = _crossing(c, a, b)
    return (c * (t - a) - _int_phi(a, t)) + (_int_phi(t, b) - c * (b - t))


def _upper_tail(a: float) -> float:
    """int_a^inf (1 - Phi(t)) dt = phi(a) - a (1 - Phi(a))."""
    return math.exp(-0.5 * a * a) / _SQRT2PI - a * (1.0 - float(ndtr(a)))


def l1_distance(F: StepCDF) -> float:
    """int |F(t) - Phi(t)| dt, exact per piece including both tails."""
    xs = F.xs
    cum = F.cum
    # below the first jump F = 0; the antiderivative of Phi vanishes at -inf
    lower_tail = float(xs[0]) * float(ndtr(xs[0])) + math.exp(-0.5 * xs[0] ** 2) / _SQRT2PI
    pieces = [lower_tail]
    for idx in range(xs.size - 1):
        pieces.append(
            _piece_abs_integral(float(cum[idx]), float(xs[idx]), float(xs[idx + 1]))
        )
    pieces.append(_upper_tail(float(xs[-1])))
    return math.fsum(pieces)


def lp_upper(linf: float, l1: float, p) -> float:
    """Interpolation bound (linf^{p-1} l1)^{1/p}; exact at p = 1 and p = inf."""
    if not (0.0 <= linf <= 1.0) or l1 < 0.0:
        raise InputError("need linf in [0,1] and l1 >= 0")
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise InvalidP(f"p={p} outside [1, inf]")
    if p == 1.0:
        return l1
    if math.isinf(p):
        return linf
    return (linf ** (p - 1.0) * l1) ** (1.0 / p)


@dataclass
class DistanceReport:
    linf: float
    l1: float
    lp: dict[float, float]
    exact: bool
    m_samples: int | None = None

    def to_json(self) -> dict:
        return {
            "linf": self.linf,
            "l1": self.l1,
            "lp_upper": {("inf" if math.isinf(p) else repr(p)): v for p, v in self.lp.items()},
            "mode": "exact" if self.exact else "mc",
            "m_samples": self.m_samples,
        }


def distance_report(
    F: StepCDF, p_list, exact: bool, m_samples: int | None = None
) -> DistanceReport:
    linf = kolmogorov_distance(F)
    l1 = l1_distance(F)
    lp = {float(p): lp_upper(linf, l1, p) for p in p_list}
    return DistanceReport(linf=linf, l1=l1, lp=lp, exact=exact, m_samples=m_samples)


def lp_norm_quadrature(F: StepCDF, p: float, points_per_piece: int = 200) -> float:
    """Direct composite-Simpson evaluation of ||F - Phi||_p for cross-checks.

    F is constant on each open piece, so the integrand on a piece is
    |level - Phi(t)|^p with the level taken from the piece, not sampled at
    the discontinuities.
    """
    if p < 1.0:
        raise InvalidP(f"p={p}")
    lo = min(float(F.xs[0]), -8.3)
    hi = max(float(F.xs[-1]), 8.3)
    knots = [lo, *map(float, F.xs), hi]
    levels = [0.0, *map(float, F.cum)]
    total = 0.0
    for a, b, c in zip(knots[:-1], knots[1:], levels):
        if b <= a:
            continue
        m = points_per_piece + (points_per_piece % 2)  # Simpson needs even
        t = np.linspace(a, b, m + 1)
        g = np.abs(c - ndtr(t)) ** p
        h = (b - a) / m
        total += h / 3.0 * float(g[0] + g[-1] + 4.0 * g[1:-1:2].sum() + 2.0 * g[2:-2:2].sum())
    return total ** (1.0 / p)


def cdf_rows(F: StepCDF) -> list[tuple[float, float, float]]:
    """(t, F(t), Phi(t)) at every jump, for external plotting."""
    return [
        (float(x), float(c), float(ndtr(x))) for x, c in zip(F.xs, F.cum)
    ]
