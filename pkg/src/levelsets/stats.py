"""Empirical moments with standard errors and bootstrap confidence intervals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import seeding

BOOTSTRAP_RESAMPLES = 1000
#: below this many distinct values the bootstrap resamples value counts
_FEW_VALUES = 64


@dataclass(frozen=True)
class MomentEstimate:
    """An empirical moment E(Z^p) with a 95% percentile-bootstrap interval."""

    point_estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    n: int
    p: float = 1

    def __post_init__(self):
        if not self.ci_low <= self.point_estimate <= self.ci_high:
            raise ValueError("confidence interval must contain the point estimate")
        if self.std_error < 0:
            raise ValueError("standard error must be nonnegative")

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low

    def to_dict(self) -> dict:
        return asdict(self)


def _bootstrap_means(z, rng, B):
    n = len(z)
    values, counts = np.unique(z, return_counts=True)
    if len(values) <= _FEW_VALUES:
        # multinomial on the value histogram is equivalent and much cheaper
        draws = rng.multinomial(n, counts / n, size=B)
        return draws @ values / n
    idx = rng.integers(0, n, size=(B, n))
    return z[idx].mean(axis=1)


def moment_estimate(samples, p: float = 1, seed: int = 0, resamples: int = BOOTSTRAP_RESAMPLES,
                    level: float = 0.95) -> MomentEstimate:
    """Estimate E(Z^p) from i.i.d. draws of Z.

    The interval is the percentile bootstrap of the mean of Z^p, widened if
    necessary so that it contains the point estimate. Zero-variance samples
    give a degenerate interval at the point estimate.
    """
    z = np.asarray(samples, dtype=float).ravel()
    if len(z) == 0:
        raise ValueError("no samples")
    zp = z**p if p != 1 else z
    n = len(zp)
    mean = float(np.mean(zp))
    if not math.isfinite(mean):
        return MomentEstimate(mean, math.inf, -math.inf, math.inf, n, p)
    sd = float(np.std(zp, ddof=1)) if n > 1 else 0.0
    se = sd / math.sqrt(n)
    if sd == 0.0:
        return MomentEstimate(mean, 0.0, mean, mean, n, p)
    rng = seeding.numpy_generator(seeding.derive_seed(seed, n))
    boot = _bootstrap_means(zp, rng, resamples)
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(boot, [alpha, 1.0 - alpha])
    return MomentEstimate(mean, se, min(float(lo), mean), max(float(hi), mean), n, p)


def moment_estimates(samples, p_list, seed: int = 0, **kw) -> list:
    return [moment_estimate(samples, p, seed=seed, **kw) for p in p_list]
