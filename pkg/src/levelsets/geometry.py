"""Crofton estimators of level-set measures on balls and spheres.

Ball D_a in R^d: a probe is a direction v uniform on S^(d-1) and an offset
y uniform on the (d-1)-ball v-perp of radius a; the measure is
c_(d-1)(a) times the mean number of crossings on the chord y + t v.

Sphere S^d: a probe is a uniformly random great circle, spanned by two
independent standard Gaussian vectors; the measure is beta_(2,d+1) times
the mean number of crossings on the circle.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtri

from . import seeding
from .bounds import Ball, Sphere, crofton_constant
from .crossings import count_on_chords, count_on_great_circles
from .simulate.sampling import sample_field
from .stats import MomentEstimate, moment_estimate

log = logging.getLogger(__name__)

PROBE_BLOCK = 4096
MAX_CONDITION = 1e8


@dataclass(frozen=True)
class CroftonPlan:
    n_probes: int
    seed: int
    domain: Union[Ball, Sphere]
    base_step: float = 0.01
    refine_tol: float = 1e-10

    def __post_init__(self):
        if self.n_probes < 1:
            raise ValueError("n_probes must be >= 1")
        if not isinstance(self.domain, (Ball, Sphere)):
            raise TypeError("domain must be a Ball or a Sphere")


@dataclass(frozen=True)
class CroftonEstimate(MomentEstimate):
    """A measure estimate plus probe bookkeeping."""

    degenerate_probes: int = 0
    flagged_probes: int = 0


def _blocks(n):
    for b, start in enumerate(range(0, n, PROBE_BLOCK)):
        yield b, start, min(PROBE_BLOCK, n - start)


def ball_probes(plan: CroftonPlan):
    """Directions (n, d) and offsets (n, d) of the chord probes."""
    d, a = plan.domain.d, plan.domain.a
    dirs, offs = [], []
    width = 2 * d + 1
    for b, _, m in _blocks(plan.n_probes):
        seed = seeding.derive_seed(plan.seed, b)
        u = seeding.uniforms([seed], np.arange(m * width))[0].reshape(m, width)
        g = ndtri(u[:, : 2 * d])
        v = g[:, :d]
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        w = g[:, d:]
        w -= np.sum(w * v, axis=1, keepdims=True) * v
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        r = a * u[:, 2 * d] ** (1.0 / (d - 1))
        dirs.append(v)
        offs.append(w * r[:, None])
    return np.concatenate(dirs), np.concatenate(offs)


def sphere_probes(plan: CroftonPlan):
    """Orthonormal frames (e1, e2), each (n, d+1), of the great-circle probes."""
    D = plan.domain.d + 1
    E1, E2 = [], []
    for b, _, m in _blocks(plan.n_probes):
        seed = seeding.derive_seed(plan.seed, b)
        e1 = np.empty((m, D))
        e2 = np.empty((m, D))
        todo = np.arange(m)
        attempt = 0
        while len(todo):
            slots = (attempt * m + todo)[:, None] * (2 * D) + np.arange(2 * D)[None, :]
            g = seeding.normals([seed], slots.ravel())[0].reshape(len(todo), 2 * D)
            g1, g2 = g[:, :D], g[:, D:]
            sv = np.linalg.svd(np.stack([g1, g2], axis=2), compute_uv=False)
            ok = sv[:, 0] <= MAX_CONDITION * sv[:, 1]
            n1 = g1 / np.linalg.norm(g1, axis=1, keepdims=True)
            q2 = g2 - np.sum(g2 * n1, axis=1, keepdims=True) * n1
            q2 /= np.linalg.norm(q2, axis=1, keepdims=True)
            e1[todo[ok]] = n1[ok]
            e2[todo[ok]] = q2[ok]
            todo = todo[~ok]
            attempt += 1
        E1.append(e1)
        E2.append(e2)
    return np.concatenate(E1), np.concatenate(E2)


def _probe_counts(field, u, plan: CroftonPlan, executor=None):
    if isinstance(plan.domain, Ball):
        dirs, offs = ball_probes(plan)
        res = count_on_chords(field, dirs, offs, plan.domain.a, u, plan.base_step, plan.refine_tol, executor=executor)
    else:
        e1, e2 = sphere_probes(plan)
        res = count_on_great_circles(field, e1, e2, u, plan.base_step, plan.refine_tol, executor=executor)
    return res


def _summarise(res, const, plan, u) -> CroftonEstimate:
    good = ~res.degenerate
    n_degenerate = int(np.sum(res.degenerate))
    if n_degenerate:
        log.info("excluded %d degenerate probes at level %g", n_degenerate, u)
    counts = res.counts[good].astype(float)
    if len(counts) == 0:
        raise ValueError("every probe was degenerate; the level set has positive measure")
    est = moment_estimate(const * counts, 1, seed=plan.seed)
    return CroftonEstimate(est.point_estimate, est.std_error, est.ci_low, est.ci_high, est.n, 1,
                           n_degenerate, int(np.sum(res.undercount[good])))


def estimate_level_measure_ball(field, u: float, plan: CroftonPlan, executor=None) -> CroftonEstimate:
    """Crofton estimate of H_(d-1) of {X = u} inside the ball D_a."""
    if not isinstance(plan.domain, Ball):
        raise TypeError("plan domain must be a Ball")
    res = _probe_counts(field, u, plan, executor)
    return _summarise(res, crofton_constant(plan.domain), plan, u)


def estimate_level_measure_sphere(field, u: float, plan: CroftonPlan, executor=None) -> CroftonEstimate:
    """Crofton estimate of H_(d-1) of {X = u} on the unit sphere S^d."""
    if not isinstance(plan.domain, Sphere):
        raise TypeError("plan domain must be a Sphere")
    res = _probe_counts(field, u, plan, executor)
    return _summarise(res, crofton_constant(plan.domain), plan, u)


@dataclass(frozen=True)
class MeasureMoment:
    """p-th moment of the level-set measure over field realizations.

    ``jensen_proxy`` is c^p times the pooled mean of count^p over all probes,
    which dominates ``estimate`` in expectation.
    """

    estimate: MomentEstimate
    jensen_proxy: MomentEstimate
    inner_relative_error: float
    per_field: np.ndarray


def estimate_measure_pth_moment(spec, u: float, p: float, n_fields: int, plan: CroftonPlan,
                                executor=None) -> MeasureMoment:
    """Outer Monte Carlo over field realizations, inner Crofton estimate per field."""
    if n_fields < 1:
        raise ValueError("n_fields must be >= 1")
    const = crofton_constant(plan.domain)
    per_field = np.empty(n_fields)
    pooled = []
    rel = 0.0
    for i in range(n_fields):
        base = seeding.derive_seed(plan.seed, i)
        field = sample_field(spec, seeding.derive_seed(base, 0))
        inner = CroftonPlan(plan.n_probes, seeding.derive_seed(base, 1), plan.domain, plan.base_step, plan.refine_tol)
        res = _probe_counts(field, u, inner, executor)
        counts = res.counts[~res.degenerate].astype(float)
        if len(counts) == 0:
            raise ValueError("every probe was degenerate for a field realization")
        m = const * counts.mean()
        per_field[i] = m
        pooled.append(counts)
        if m > 0:
            se = const * counts.std(ddof=1) / math.sqrt(len(counts)) if len(counts) > 1 else 0.0
            rel = max(rel, se / m)
    if rel > 0.1:
        warnings.warn(f"inner Crofton relative error {rel:.3f} exceeds 10%; increase n_probes", RuntimeWarning)
    est = moment_estimate(per_field, p, seed=plan.seed)
    proxy = moment_estimate(np.concatenate(pooled) * const, p, seed=plan.seed)
    return MeasureMoment(est, proxy, rel, per_field)
