"""Moment estimates of crossing counts and numerical checks of shot-noise hypotheses.

The improper integrals behind the density conditions are evaluated in log
space: the integrand is handled as ``log f`` so that kernels decaying like
``exp(-t^2)`` can be inverted far into the tail without overflow.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import seeding
from .crossings import BatchCounts, count_batch
from .simulate.distributions import Distribution
from .simulate.kernels import Kernel
from .simulate.sampling import PathBatch, draw_paths
from .stats import MomentEstimate, moment_estimate

log = logging.getLogger(__name__)

MIN_REPLICATES = 100
MIN_TAIL_SAMPLES = 1000
#: finite_moment_guess above this is reported as "all"
MAX_MOMENT_GUESS = 20
HILL_EPSILON = 0.1

CONDITION_NAMES = ("H2_shotnoise", "density_A", "density_B1", "density_B2", "density_radial_G")

# quadrature knobs
_GL_NODES, _GL_WEIGHTS = leggauss(16)
_PANEL = 0.125
_MAX_HORIZON = 4096.0
_TAIL_RTOL = 1e-13
_STEP_RTOL = 1e-10
_MAX_HALVINGS = 6
_GSTAR_STEP = 1e-3
_MC_DRAWS = 10**6


# ---------------------------------------------------------------------------
# crossing-count moments


def crossing_counts(spec, u: float, n_replicates: int, seed: int, base_step: float = 0.01,
                    refine_tol: float = 1e-10, interval=None, executor=None):
    """Simulate ``n_replicates`` paths and count their crossings of ``u``.

    Replicate ``i`` uses the stream seed ``mix64(seed, i)``.
    Returns ``(BatchCounts, PathBatch)``.
    """
    seeds = seeding.derive_seeds(seed, 0, n_replicates)
    batch: PathBatch = draw_paths(spec, seeds, interval, order=1)
    lo, hi = batch.interval
    res: BatchCounts = count_batch(batch.path, lo, hi, u, base_step, refine_tol, executor=executor)
    n_flag = int(np.sum(res.undercount))
    if n_flag:
        log.info("%d of %d replicates carry the undercount flag", n_flag, n_replicates)
    return res, batch


def estimate_crossing_moments(spec, u: float, p_list: Sequence[float], n_replicates: int, seed: int,
                              base_step: float = 0.01, refine_tol: float = 1e-10, interval=None,
                              executor=None) -> list:
    """Empirical E(N_u^p) with bootstrap intervals, one estimate per p."""
    if n_replicates < MIN_REPLICATES:
        raise ValueError(f"n_replicates must be >= {MIN_REPLICATES}")
    res, _ = crossing_counts(spec, u, n_replicates, seed, base_step, refine_tol, interval, executor)
    counts = res.counts.astype(float)
    return [moment_estimate(counts, p, seed=seed) for p in p_list]


@dataclass(frozen=True)
class BoundComparison:
    satisfied: bool
    margin: float

    def to_dict(self) -> dict:
        return asdict(self)


def compare_bound(estimate: MomentEstimate, bound: float) -> BoundComparison:
    """The bound holds when it lies above the whole confidence interval."""
    if bound < 0 or math.isnan(bound):
        raise ValueError("bound must be a nonnegative real or inf")
    if math.isinf(bound):
        return BoundComparison(True, math.inf)
    return BoundComparison(bool(estimate.ci_high <= bound), bound - estimate.point_estimate)


# ---------------------------------------------------------------------------
# heavy tails


@dataclass(frozen=True)
class TailIndex:
    index_estimate: float
    finite_moment_guess: Union[int, str]
    n_top: int
    jittered: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def tail_index(samples, top_fraction: float = 0.05, seed: int = 0) -> TailIndex:
    """Hill estimator of the tail index from the upper order statistics.

    Integer-valued samples (crossing counts) are spread by an independent
    U(-1/2, 1/2) jitter drawn from ``seed`` so that ties do not collapse the
    log-spacings. ``finite_moment_guess`` is ``floor(index - 0.1)``, or
    ``"all"`` when the estimate is infinite or exceeds ``MAX_MOMENT_GUESS``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = len(x)
    if n < MIN_TAIL_SAMPLES:
        raise ValueError(f"tail_index needs at least {MIN_TAIL_SAMPLES} samples, got {n}")
    if not 0 < top_fraction <= 0.5:
        raise ValueError("top_fraction must lie in (0, 0.5]")
    jittered = bool(np.all(x == np.round(x)))
    if jittered:
        x = x + seeding.uniforms([seed], np.arange(n))[0] - 0.5
    k = max(2, int(top_fraction * n))
    top = np.sort(x)[::-1][: k + 1]
    if top[k] <= 0:
        raise ValueError("the upper order statistics must be positive")
    H = float(np.mean(np.log(top[:k])) - math.log(top[k]))
    index = math.inf if H <= 0 else 1.0 / H
    guess = index - HILL_EPSILON
    if not math.isfinite(guess) or guess >= MAX_MOMENT_GUESS:
        return TailIndex(index, "all", k, jittered)
    return TailIndex(index, max(0, math.floor(guess)), k, jittered)


# ---------------------------------------------------------------------------
# condition reports


def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "+inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, np.generic):
        return _json_value(x.item())
    return x


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a numerical hypothesis check; ``value`` is ``inf`` when divergent."""

    condition_name: str
    value: float
    converged: bool
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.condition_name not in CONDITION_NAMES:
            raise ValueError(f"unknown condition {self.condition_name!r}")
        if math.isfinite(self.value) != self.converged:
            raise ValueError("value must be finite exactly when converged")
        if self.value < 0:
            raise ValueError("value must be nonnegative")

    def to_dict(self) -> dict:
        return _json_value(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _divergent(name, **detail) -> ConditionReport:
    return ConditionReport(name, math.inf, False, detail)


# ---------------------------------------------------------------------------
# H2 for shot noise


def _box(n):
    """Range of t - s for t in I_1 = [-1, 1] and s in I_n, as a list of intervals."""
    if n == 1:
        return [(-2.0, 2.0)]
    return [(-n - 1.0, -n + 2.0), (n - 2.0, n + 1.0)]


def _box_sup(kernel, k, intervals, certify):
    best = 0.0
    for a, b in intervals:
        # grid step 1e-3 of the box
        x = np.linspace(a, b, 1001)
        v = float(np.max(np.abs(kernel.derivative(x, k))))
        if certify:
            v += 0.5 * (x[1] - x[0]) * float(np.max(np.abs(kernel.derivative(x, k + 1))))
        best = max(best, v)
    return best


def check_shotnoise_H2(kernel: Kernel, k: int, n_max: int = 50) -> ConditionReport:
    """Sum D_k of d_(k,n) = sup |g^(k)(t - s)| over t in I_1, s in I_n.

    I_1 = [-1, 1] and I_n = [-n, -n+1) u (n-1, n]. The first ``n_max`` terms
    come from a dense grid, certified by a Lipschitz correction when
    g^(k+1) exists; the rest are bounded by the integral of the monotone
    hull of |g^(k)| over [n_max - 2, inf).
    """
    if k < 0 or kernel.smoothness < k:
        raise ValueError(f"kernel smoothness {kernel.smoothness} is below k={k}")
    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    certify = kernel.smoothness >= k + 1
    d = [_box_sup(kernel, k, _box(n), certify) for n in range(1, n_max + 1)]
    # d_(k,n) <= G(n - 2) <= integral of G over [n - 3, n - 2] for n > n_max
    tail = kernel.envelope_tail(k, n_max - 2.0)
    detail = {"k": k, "n_max": n_max, "d": d, "partial_sum": float(sum(d)), "tail_bound": tail,
              "certified": certify}
    if not math.isfinite(tail):
        return _divergent("H2_shotnoise", **detail)
    return ConditionReport("H2_shotnoise", float(sum(d)) + tail, True, detail)


# ---------------------------------------------------------------------------
# improper integrals in log space


def _gl(logf, a, b, width):
    """Composite 16-point Gauss-Legendre of exp(logf) on [a, b]."""
    n = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    lf = logf(t)
    if np.any(np.isnan(lf)):
        return math.nan
    top = float(np.max(lf))
    if top == math.inf:
        return math.inf
    if top == -math.inf:
        return 0.0
    return math.exp(top) * float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * np.exp(lf - top)))


def _integrate_log(logf, start=1.0, check_far=False):
    """Integral of exp(logf) over (0, inf) or ``inf`` when the integrand does not decay.

    The horizon doubles while the log-integrand grows across [T, 2T]; once
    it falls, the remaining tail is compared with exp(logf(2T)) / slope.
    ``check_far`` also requires decay across the last doubling below the
    horizon cap, which catches growth that sets in late; it needs a logf
    that stays finite there (closed forms, not underflowing kernels).
    """
    if check_far:
        a, b = float(logf(np.array(_MAX_HORIZON / 2))), float(logf(np.array(_MAX_HORIZON)))
        if not b < a:
            return math.inf, {"horizon": _MAX_HORIZON, "reason": "integrand grows near the horizon cap"}
    T = start
    while True:
        a, b = float(logf(np.array(T))), float(logf(np.array(2 * T)))
        slope = (b - a) / T if math.isfinite(a) and math.isfinite(b) else (math.inf if b == math.inf else -math.inf)
        if math.isnan(a) or math.isnan(b):
            return math.inf, {"horizon": 2 * T, "reason": "integrand undefined"}
        if slope >= 0:
            if 2 * T >= _MAX_HORIZON:
                return math.inf, {"horizon": 2 * T, "growth_rate": slope}
            T *= 2
            continue
        value, info = _refine(logf, 2 * T)
        if not math.isfinite(value):
            return math.inf, dict(info, horizon=2 * T)
        tail = math.exp(b) / -slope if b > -math.inf else 0.0
        if tail <= _TAIL_RTOL * value or 2 * T >= _MAX_HORIZON:
            return value + tail, dict(info, horizon=2 * T, tail_estimate=tail, decay_rate=-slope)
        T *= 2


def _refine(logf, horizon):
    width = _PANEL
    prev = _gl(logf, 0.0, horizon, width)
    change = math.inf
    for _ in range(_MAX_HALVINGS):
        if not math.isfinite(prev):
            return prev, {"step": width}
        width /= 2
        cur = _gl(logf, 0.0, horizon, width)
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if change < _STEP_RTOL:
            break
    return prev, {"step": width, "refinement_change": change}


def _log_abs(x):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x))


# ---------------------------------------------------------------------------
# density conditions


def _inv_abs_impulse(impulse: Distribution, seed: int = 0) -> float:
    if type(impulse).__module__ == Distribution.__module__:
        # shipped families carry E(1/|beta|) in closed form
        return impulse.inv_abs_mean
    warnings.warn(f"E(1/|beta|) for {type(impulse).__name__} estimated by Monte Carlo", RuntimeWarning)
    draws = impulse.ppf(seeding.uniforms([seed], np.arange(_MC_DRAWS))[0])
    return float(np.mean(1.0 / np.abs(draws)))


#: window scanned for kernels vanishing (or rising) on a set of positive measure;
#: beyond it, underflow of fast-decaying kernels would look the same
_SCAN = np.linspace(0.0, 20.0, 20001)[1:]


def _side_A(kernel, lam, sign):
    zero = kernel.derivative(sign * _SCAN, 0) == 0
    if np.any(zero[:-1] & zero[1:]):
        first = float(_SCAN[np.argmax(zero)])
        return math.inf, {"undefined": f"g vanishes on a set of positive measure (from |t| = {first:g})"}

    def logf(t):
        return math.log(lam) - lam * t - _log_abs(kernel.derivative(sign * t, 0))

    return _integrate_log(logf)


def _gstar(kernel, sign):
    """Running infimum of |g'(sign * s)| over [0, t], on a cached dense grid."""
    cache = {}

    def runmin(upto):
        if "grid" not in cache or cache["grid"][-1] < upto:
            m = int(math.ceil(upto / _GSTAR_STEP)) + 1
            grid = np.arange(m + 1) * _GSTAR_STEP
            vals = np.abs(kernel.derivative(sign * grid, 1))
            cache["grid"] = grid
            cache["min"] = np.minimum.accumulate(vals)
        return cache["grid"], cache["min"]

    def gstar(t):
        t = np.asarray(t, dtype=float)
        grid, mins = runmin(float(np.max(t)))
        idx = np.minimum((t / _GSTAR_STEP).astype(int), len(grid) - 1)
        return np.minimum(mins[idx], np.abs(kernel.derivative(sign * t, 1)))

    return gstar


def _side_B(kernel, lam, sign):
    slope = sign * kernel.derivative(sign * _SCAN, 1)
    detail = {}
    if np.any(slope >= 0):
        first = float(_SCAN[np.argmax(slope >= 0)])
        return math.inf, {"undefined": f"derivative not strictly negative (at |t| = {first:g})"}
    if kernel.derivative(np.array(0.0), 1) == 0:
        detail["derivative_vanishes_at_origin"] = True
    gstar = _gstar(kernel, sign)

    def logf(t):
        return math.log(lam) - lam * t - _log_abs(gstar(t))

    value, info = _integrate_log(logf)
    return value, dict(detail, **info)


def check_density_condition(kind: str, kernel: Kernel, lam: float,
                            impulse: Optional[Distribution] = None) -> ConditionReport:
    """Check a sufficient condition for X(0) to have a bounded density.

    kind ``"A"``: E(1/|g(-T)|) or E(1/|g(T)|) with T ~ Exp(lam); the smaller
    side is reported. kinds ``"B1"`` / ``"B2"``: E(1/g_*(T)) with g_* the
    running infimum of |g'| on the positive / negative half-line, which
    requires g (resp. g(-x)) to be strictly decreasing on (0, inf).
    ``detail["density_bound"]`` carries the resulting bound on the density
    of X(0) when ``impulse`` is given.
    """
    if not lam > 0:
        raise ValueError("intensity must be positive")
    kind = kind.upper()
    if kind == "A":
        sides = {s: _side_A(kernel, lam, s) for s in (-1.0, 1.0)}
        sign = min(sides, key=lambda s: sides[s][0])
        value, info = sides[sign]
        detail = dict(info, side="g(-T)" if sign < 0 else "g(T)",
                      other_side=sides[-sign][0])
        name = "density_A"
        if impulse is not None and math.isfinite(value):
            detail["density_bound"] = impulse.density_bound * value
    elif kind in ("B1", "B2"):
        sign = 1.0 if kind == "B1" else -1.0
        value, detail = _side_B(kernel, lam, sign)
        name = "density_" + kind
        if impulse is not None and math.isfinite(value):
            detail["density_bound"] = lam * _inv_abs_impulse(impulse) * value
    else:
        raise ValueError(f"kind must be A, B1 or B2, got {kind!r}")
    if not math.isfinite(value):
        return _divergent(name, **detail)
    return ConditionReport(name, value, True, detail)


def unit_ball_volume(d: int) -> float:
    """k_d = pi^(d/2) / Gamma(1 + d/2)."""
    return math.pi ** (d / 2) / math.gamma(1 + d / 2)


def check_density_condition_radial(d: int, q: int, lam: float) -> ConditionReport:
    """E G_*(|T_1|) for the radial kernel exp(-|t|^(2q)) in R^d.

    G_*(r) = exp(r^(2q)) r^(d - 2q) and |T_1| has density
    d lam k_d exp(-lam k_d r^d) r^(d-1). The integral converges exactly when
    2q < d, or 2q = d and lam k_d > 1.
    """
    if d < 2 or q < 1:
        raise ValueError("need d >= 2 and q >= 1")
    if not lam > 0:
        raise ValueError("intensity must be positive")
    kd = unit_ball_volume(d)
    c = math.log(d * lam * kd)

    def logf(r):
        with np.errstate(divide="ignore"):
            lr = np.log(r)
        return r ** (2 * q) + (2 * d - 2 * q - 1) * lr + c - lam * kd * r**d

    rule = 2 * q < d or (2 * q == d and lam * kd > 1)
    value, info = _integrate_log(logf, start=0.25, check_far=True)
    detail = dict(info, d=d, q=q, lam=lam, k_d=kd, analytic_rule=rule)
    if math.isfinite(value) != rule:
        log.warning("radial density check disagrees with the closed-form rule at d=%d q=%d lam=%g", d, q, lam)
    if not math.isfinite(value):
        return _divergent("density_radial_G", **detail)
    return ConditionReport("density_radial_G", value, True, detail)
