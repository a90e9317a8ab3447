"""Feasibility windows, series constants and explicit moment bounds for the
number of level crossings, and their extensions to balls and spheres.

For a process with C^k paths, E|X^(k)|_inf^m <= D_m and a joint density of
(X, X', ..., X^(h)) bounded by C, the p-th moment of the crossing count on
an interval I is bounded by

    (k-1)^p + D_m * E(alpha, k, m, p) + C * |I|^((h+1)(k-h/2)) * D(alpha, k, h, p)

whenever p/m < alpha < k - h/2 - (1+p)/(1+h). The two constants are
convergent series; they are evaluated here with a certified enclosure of
the omitted tail.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .errors import DivergentSeriesError, InfeasibleError, SeriesBudgetError

MAX_TERMS = 10_000_000


class _Unbounded(enum.Enum):
    UNBOUNDED_M = "inf"

    def __repr__(self):
        return "UNBOUNDED_M"


#: Flag for "(H2) holds for every moment order m" (Gaussian-like processes).
UNBOUNDED_M = _Unbounded.UNBOUNDED_M

MomentOrder = Union[int, _Unbounded]


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the crossing-moment bound.

    ``domain_size`` is the interval length for intervals and the radius for
    balls; the sphere variant ignores it.
    """

    k: int
    h: int
    m: int
    p: int
    C: float
    D_m: float
    domain_size: float = 1.0
    alpha: Optional[float] = None

    def __post_init__(self):
        _check_khm(self.k, self.h, self.m)
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.C < 0 or self.D_m < 0:
            raise ValueError("C and D_m must be nonnegative")
        if not self.domain_size > 0:
            raise ValueError(f"domain_size must be positive, got {self.domain_size}")
        if self.alpha is not None:
            lo, hi = alpha_interval(self.k, self.h, self.m, self.p)
            if not lo < self.alpha < hi:
                raise InfeasibleError(
                    f"alpha={self.alpha} outside the open window ({lo}, {hi})"
                )


@dataclass(frozen=True)
class SeriesValue:
    """Enclosure of a convergent series: the sum lies in [value, value + tail_bound]."""

    value: float
    tail_bound: float
    terms_used: int


@dataclass(frozen=True)
class BoundBreakdown:
    alpha: float
    E: SeriesValue
    D: SeriesValue
    bound: float


def _check_khm(k, h, m):
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")
    if int(h) != h or not 0 <= h <= k:
        raise ValueError(f"h must be an integer with 0 <= h <= k, got {h}")
    if m is UNBOUNDED_M:
        return
    if int(m) != m or m < 1:
        raise ValueError(f"m must be an integer >= 1 or UNBOUNDED_M, got {m!r}")


def _p_threshold(k: int, h: int, m: MomentOrder) -> Fraction:
    """Exact right-hand side of the strict inequality p < threshold."""
    k, h = Fraction(k), Fraction(h)
    if m is UNBOUNDED_M:
        return (k - h / 2) * (h + 1) - 1
    return (k - h / 2 - 1 / (1 + h)) / (Fraction(1, m) + 1 / (1 + h))


def is_feasible(k: int, h: int, m: MomentOrder, p: int) -> bool:
    _check_khm(k, h, m)
    return Fraction(p) < _p_threshold(k, h, m)


def feasible_p_max(k: int, h: int, m: MomentOrder) -> Optional[int]:
    """Largest integer moment order p whose crossing moment is guaranteed finite.

    Returns ``None`` when no p >= 1 qualifies.

    >>> feasible_p_max(4, 4, UNBOUNDED_M)
    8
    """
    _check_khm(k, h, m)
    thr = _p_threshold(k, h, m)
    p = math.ceil(thr) - 1
    return p if p >= 1 else None


def alpha_interval(k: int, h: int, m: int, p: int) -> tuple[float, float]:
    """Open window (p/m, k - h/2 - (1+p)/(1+h)) for the truncation exponent."""
    _check_khm(k, h, m)
    if m is UNBOUNDED_M:
        raise ValueError("the alpha window needs a finite moment order m")
    lo = Fraction(p, m)
    hi = Fraction(k) - Fraction(h, 2) - Fraction(1 + p, 1 + h)
    if lo >= hi:
        raise InfeasibleError(
            f"empty alpha window: need p/m < k - h/2 - (1+p)/(1+h), "
            f"got {p}/{m} = {float(lo):g} >= {float(hi):g} "
            f"(k={k}, h={h}, m={m}, p={p})"
        )
    return float(lo), float(hi)


def _power_tail_integral(p: int, s: float, x: float) -> float:
    """Closed form of the integral of (t+1)^(p-1) t^(-s) over [x, inf).

    Expands (t+1)^(p-1) binomially; every piece converges because s > p.
    """
    total = 0.0
    for j in range(p):
        total += math.comb(p - 1, j) * x ** (j + 1 - s) / (s - 1 - j)
    return total


def _summand(p: int, s: float, x):
    return np.exp((p - 1) * np.log1p(x) - s * np.log(x))


def _tail_enclosure(p: int, s: float, n: int) -> tuple[float, float]:
    """Bounds on sum_{a > n} (a+1)^(p-1) a^(-s).

    The summand is positive, decreasing and convex on (0, inf) when s > p - 1,
    so the midpoint rule gives the upper bound (integral from n + 1/2) and the
    trapezoid rule the lower bound (integral from n + 1 plus half the first term).
    """
    upper = _power_tail_integral(p, s, n + 0.5)
    lower = _power_tail_integral(p, s, n + 1) + 0.5 * float(_summand(p, s, n + 1.0))
    return lower, max(upper, lower)


def _power_series(p: int, s: float, tol: float) -> SeriesValue:
    """Sum over a >= 1 of (a+1)^(p-1) a^(-s), enclosed to width tol."""
    if not s - (p - 1) > 1:
        raise DivergentSeriesError(
            f"series diverges: exponent s={s:g} must exceed p={p}"
        )
    if not tol > 0:
        raise ValueError("tol must be positive")

    def width(n):
        lower, upper = _tail_enclosure(p, s, n)
        return upper - lower

    n_terms = 16
    while width(n_terms) > tol:
        n_terms *= 2
        if n_terms > MAX_TERMS:
            if width(MAX_TERMS) > tol:
                raise SeriesBudgetError(
                    f"tolerance {tol:g} unreachable within {MAX_TERMS} terms "
                    f"(exponent {s:g}, p={p})"
                )
            n_terms = MAX_TERMS
            break
    # shrink back onto the smallest sufficient count
    lo, hi = n_terms // 2, n_terms
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if width(mid) <= tol:
            hi = mid
        else:
            lo = mid
    n_terms = max(hi, 1)

    a = np.arange(1, n_terms + 1, dtype=float)
    partial = math.fsum(_summand(p, s, a).tolist())
    lower, upper = _tail_enclosure(p, s, n_terms)
    # slack covers rounding in the partial sum and the closed-form tails
    slack = 8 * (n_terms + p) * np.finfo(float).eps * (partial + upper)
    return SeriesValue(float(partial + lower - slack), float(upper - lower + 2 * slack), n_terms)


def series_E(alpha: float, k: int, m: int, p: int, tol: float = 1e-10) -> SeriesValue:
    """E = p (k-1)^(p-1) * sum_{a>=1} (a+1)^(p-1) a^(-m alpha)."""
    pref = p * (k - 1) ** (p - 1)
    raw = _power_series(p, m * alpha, tol / pref)
    return SeriesValue(pref * raw.value, pref * raw.tail_bound, raw.terms_used)


def series_D(alpha: float, k: int, h: int, p: int, tol: float = 1e-10) -> SeriesValue:
    """D = 2^((h+1)(1+h/2-k)) / (k! (k-h)!) * sum (a+1)^(p-1) a^(1-(h+1)(k-h/2-alpha))."""
    pref = 2.0 ** ((h + 1) * (1 + h / 2 - k)) / (math.factorial(k) * math.factorial(k - h))
    s = (h + 1) * (k - h / 2 - alpha) - 1
    raw = _power_series(p, s, tol / pref)
    return SeriesValue(pref * raw.value, pref * raw.tail_bound, raw.terms_used)


def _choose_alpha(params: BoundParams) -> float:
    lo, hi = alpha_interval(params.k, params.h, params.m, params.p)
    if params.alpha is not None:
        return params.alpha
    return 0.5 * (lo + hi)


def _breakdown(params: BoundParams, length: float, tol: float) -> BoundBreakdown:
    if not is_feasible(params.k, params.h, params.m, params.p):
        # alpha_interval raises with the violated inequality spelled out
        alpha_interval(params.k, params.h, params.m, params.p)
    alpha = _choose_alpha(params)
    k, h, p = params.k, params.h, params.p
    E = series_E(alpha, k, params.m, p, tol)
    D = series_D(alpha, k, h, p, tol)
    # upper ends of the enclosures keep the result a valid upper bound
    bound = (k - 1) ** p
    if params.D_m:
        bound += params.D_m * (E.value + E.tail_bound)
    if params.C:
        bound += params.C * length ** ((h + 1) * (k - h / 2)) * (D.value + D.tail_bound)
    return BoundBreakdown(alpha, E, D, float(bound))


def bound_breakdown(params: BoundParams, tol: float = 1e-10) -> BoundBreakdown:
    """Interval bound together with the chosen alpha and both series."""
    return _breakdown(params, params.domain_size, tol)


def moment_bound_interval(params: BoundParams, tol: float = 1e-10) -> float:
    """Upper bound on E(N_u^p) over an interval of length ``params.domain_size``."""
    return bound_breakdown(params, tol).bound


@dataclass(frozen=True)
class Ball:
    d: int
    a: float = 1.0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"ball dimension must be >= 2, got {self.d}")
        if not self.a > 0:
            raise ValueError(f"ball radius must be positive, got {self.a}")


@dataclass(frozen=True)
class Sphere:
    """The unit sphere S^d inside R^(d+1)."""

    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"sphere dimension must be >= 2, got {self.d}")


def crofton_constant(domain: Union[Ball, Sphere]) -> float:
    """Normalising constant of the Crofton formula with probability probe measures.

    Ball(d, a): half the area of the bounding sphere, pi^(d/2)/Gamma(d/2) a^(d-1).
    Sphere(d): pi^(d/2)/Gamma(d/2).
    """
    base = math.pi ** (domain.d / 2) / math.gamma(domain.d / 2)
    if isinstance(domain, Ball):
        return base * domain.a ** (domain.d - 1)
    if isinstance(domain, Sphere):
        return base
    raise TypeError(f"unsupported domain {domain!r}")


def moment_bound_ball(params: BoundParams, d: int, a: float, tol: float = 1e-10) -> float:
    """Bound on the p-th moment of the level-set measure inside the ball D_a."""
    c = crofton_constant(Ball(d, a))
    return c ** params.p * _breakdown(params, 2.0 * a, tol).bound


def moment_bound_sphere(params: BoundParams, d: int, tol: float = 1e-10) -> float:
    """Bound on the p-th moment of the level-set measure on the unit sphere S^d."""
    beta = crofton_constant(Sphere(d))
    return beta ** params.p * _breakdown(params, 2.0 * math.pi, tol).bound
