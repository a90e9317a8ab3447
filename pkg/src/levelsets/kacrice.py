"""Kac counters against crossing counts and the Gaussian Rice formula."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from . import seeding
from .crossings import count_batch, kac_integrals
from .simulate.sampling import draw_paths
from .simulate.specs import SpectralGaussian
from .stats import MomentEstimate, moment_estimate

DEFAULT_DELTAS = (0.5, 0.2, 0.1, 0.05, 0.02)


def rice_closed_form_gaussian(lambda0: float, lambda2: float, u: float, interval_length: float) -> float:
    """E N_u for a stationary Gaussian process with spectral moments lambda0, lambda2."""
    if not lambda0 > 0 or not lambda2 > 0:
        raise ValueError("spectral moments must be positive")
    return interval_length / math.pi * math.sqrt(lambda2 / lambda0) * math.exp(-u * u / (2 * lambda0))


def rice_window_average_gaussian(lambda0: float, lambda2: float, u: float, delta: float,
                                 interval_length: float) -> float:
    """(1/2 delta) times the integral of the Rice closed form over [u - delta, u + delta].

    This is the exact mean of the Kac counter of a stationary Gaussian path.
    """
    s = math.sqrt(lambda0)
    mass = ndtr((u + delta) / s) - ndtr((u - delta) / s)
    peak = rice_closed_form_gaussian(lambda0, lambda2, 0.0, interval_length)
    return peak * math.sqrt(2 * math.pi) * s * mass / (2 * delta)


@dataclass(frozen=True)
class KacRiceReport:
    deltas: List[float]
    kac_estimates: List[MomentEstimate]
    crossing_estimate: MomentEstimate
    closed_form: Optional[float] = None
    R_profile: Optional[List[Tuple[float, float]]] = None
    u: float = 0.0

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("deltas must be strictly decreasing")
        if len(self.kac_estimates) != len(self.deltas):
            raise ValueError("one Kac estimate per delta is required")

    def to_dict(self) -> dict:
        return {
            "u": self.u,
            "deltas": list(self.deltas),
            "kac_estimates": [e.to_dict() for e in self.kac_estimates],
            "crossing_estimate": self.crossing_estimate.to_dict(),
            "closed_form": self.closed_form,
            "R_profile": None if self.R_profile is None else [list(x) for x in self.R_profile],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "mean", "stderr"])
        for d, e in zip(self.deltas, self.kac_estimates):
            w.writerow([f"{d:.17g}", f"{e.point_estimate:.17g}", f"{e.std_error:.17g}"])
        return buf.getvalue()


def _check_deltas(deltas):
    deltas = [float(d) for d in deltas]
    if not deltas or any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    return deltas


def _replicates(spec, n_replicates, seed, interval):
    seeds = seeding.derive_seeds(seed, 0, n_replicates)
    return draw_paths(spec, seeds, interval, order=1)


def verify_kac_rice(spec, u: float, deltas: Sequence[float] = DEFAULT_DELTAS, n_replicates: int = 1000,
                    seed: int = 0, base_step: float = 0.01, refine_tol: float = 1e-10,
                    quad_step: Optional[float] = None, rule: str = "exact", interval=None,
                    executor=None) -> KacRiceReport:
    """Per replicate, count N_u and evaluate N_u^delta for every delta on the same path.

    ``quad_step`` defaults to ``min(deltas) / 8``, shared by every delta.
    The Gaussian closed form is attached for ``SpectralGaussian`` specs.
    """
    deltas = _check_deltas(deltas)
    if quad_step is None:
        quad_step = min(deltas) / 8
    batch = _replicates(spec, n_replicates, seed, interval)
    lo, hi = batch.interval
    counts = count_batch(batch.path, lo, hi, u, base_step, refine_tol, executor=executor).counts
    kac = kac_integrals(batch.path, lo, hi, u, deltas, quad_step, rule=rule)
    crossing = moment_estimate(counts.astype(float), 1, seed=seed)
    kac_est = [moment_estimate(kac[:, j], 1, seed=seed) for j in range(len(deltas))]
    closed = None
    if isinstance(spec, SpectralGaussian):
        closed = rice_closed_form_gaussian(spec.lambda0, spec.lambda2, u, hi - lo)
    return KacRiceReport(deltas, kac_est, crossing, closed, None, u)


@dataclass(frozen=True)
class RProfile:
    """Window estimates of R(v) at equispaced levels around u.

    ``window_average`` averages the profile over the levels replicate by
    replicate, so its interval is directly comparable with
    ``crossing_estimate``.
    """

    levels: np.ndarray
    estimates: List[MomentEstimate]
    window_average: MomentEstimate
    crossing_estimate: MomentEstimate
    closed_form: Optional[np.ndarray] = field(default=None)

    def pairs(self) -> List[Tuple[float, float]]:
        return [(float(v), e.point_estimate) for v, e in zip(self.levels, self.estimates)]


def estimate_R_profile(spec, u: float, epsilon: float, n_levels: int, delta: float, n_replicates: int,
                       seed: int = 0, base_step: float = 0.01, refine_tol: float = 1e-10,
                       quad_step: Optional[float] = None, interval=None) -> RProfile:
    """R(v) at the midpoints of n_levels equal cells of (u - epsilon, u + epsilon).

    Each R(v) is the replicate mean of N_v^delta; windows of width 2 delta
    around distinct levels do not overlap because delta <= epsilon / (2 n_levels).
    """
    if not epsilon > 0 or n_levels < 1:
        raise ValueError("need epsilon > 0 and n_levels >= 1")
    if not 0 < delta <= epsilon / (2 * n_levels) * (1 + 1e-12):
        raise ValueError("delta must lie in (0, epsilon / (2 n_levels)]")
    if quad_step is None:
        quad_step = delta / 8
    batch = _replicates(spec, n_replicates, seed, interval)
    lo, hi = batch.interval
    levels = u - epsilon + (np.arange(n_levels) + 0.5) * (2 * epsilon / n_levels)
    per_level = np.stack([kac_integrals(batch.path, lo, hi, v, [delta], quad_step)[:, 0] for v in levels], axis=1)
    estimates = [moment_estimate(per_level[:, i], 1, seed=seed) for i in range(n_levels)]
    window = moment_estimate(per_level.mean(axis=1), 1, seed=seed)
    counts = count_batch(batch.path, lo, hi, u, base_step, refine_tol).counts
    crossing = moment_estimate(counts.astype(float), 1, seed=seed)
    closed = None
    if isinstance(spec, SpectralGaussian):
        closed = np.array([rice_window_average_gaussian(spec.lambda0, spec.lambda2, v, delta, hi - lo)
                           for v in levels])
    return RProfile(levels, estimates, window, crossing, closed)
