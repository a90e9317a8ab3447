"""Sampling every process family from counter-based streams.

Stream slot layout (per replicate seed):

* sine-cosine: 0 -> omega, 1 -> xi_1, 2 -> xi_2
* spectral Gaussian with J atoms: 2j -> xi_j, 2j + 1 -> eta_j; chi-square
  component i shifts these by 2 J i
* shot noise (line, ball, sphere): 0 -> Poisson count; point i uses slots
  starting at 1 + i * w (w = 1, d + 1 or d + 1 respectively); impulse i
  uses IMPULSE_SLOT + i
* regularized diffusion: k -> k-th Brownian increment
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .. import seeding
from ..errors import ConfigError
from .fields import BallShotNoiseField, SphereShotNoiseField
from .kernels import radial_tail_integral
from .paths import (
    BatchPath,
    ChiSquareBatch,
    PathSample,
    ShotNoiseBatch,
    SinusoidBatch,
    SmoothedPathBatch,
)
from .specs import (
    ChiSquare,
    DeterministicField,
    DeterministicPath,
    RegularizedDiffusion,
    ShotNoise1D,
    ShotNoiseBall,
    SineCosine,
    SpectralGaussian,
    SphereShotNoise,
)

IMPULSE_SLOT = 1 << 40
#: default truncation target, relative to lam * E|beta|
PAD_TOLERANCE = 1e-8


@dataclass
class PathBatch:
    """A batch of realizations plus the per-family realized parameters."""

    path: BatchPath
    interval: tuple
    seeds: np.ndarray
    info: dict = field(default_factory=dict)
    truncation_error: float = 0.0


def _seeds(seeds):
    return np.atleast_1d(np.asarray(seeds, dtype=np.uint64))


def _sine_cosine_params(spec: SineCosine, seeds):
    u = seeding.uniforms(seeds, [0, 1, 2])
    omega = spec.omega_dist.ppf(u[:, 0])
    xi1 = special.ndtri(u[:, 1])
    xi2 = special.ndtri(u[:, 2])
    theta = np.arctan2(xi1, xi2)
    amp = np.hypot(xi1, xi2)
    return omega, theta, amp


def exact_zero_count_sine_cosine(omega, theta):
    """Number of t in [0, 2 pi] with cos(omega t - theta) = 0.

    Counts integers j with (theta + pi/2 + j pi) / omega in [0, 2 pi].
    """
    omega = np.asarray(omega, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    lo = np.ceil((-theta - math.pi / 2) / math.pi)
    hi = np.floor((2 * math.pi * omega - theta - math.pi / 2) / math.pi)
    out = np.maximum(hi - lo + 1, 0).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def _spectral_batch(spec: SpectralGaussian, seeds, offset=0):
    J = len(spec.atoms)
    z = seeding.normals(seeds, np.arange(offset, offset + 2 * J))
    xi, eta = z[:, 0::2], z[:, 1::2]
    sigma = np.sqrt([w for w, _ in spec.atoms])
    lam = np.array([l for _, l in spec.atoms], dtype=float)
    amp = sigma * np.hypot(xi, eta)
    phase = np.arctan2(eta, xi)
    return SinusoidBatch(amp, np.broadcast_to(lam, amp.shape), phase)


def default_pad(kernel, orders, scale: float = 1.0) -> float:
    """Smallest pad in scale * {1, 1.5, 2, ...} whose two-sided envelope tail is below tolerance."""
    for j in orders:
        if not math.isfinite(kernel.envelope_tail(j, 1e6)):
            raise ConfigError(f"kernel envelope of order {j} is not integrable", key="process.kernel")
    L = scale
    while max(2.0 * kernel.envelope_tail(j, L) for j in orders) >= PAD_TOLERANCE:
        L += 0.5 * scale
        if L > 1e4 * scale:
            raise ConfigError("no finite window pad reaches the truncation target", key="process.window_pad")
    return L


def shot_noise_truncation_error(spec: ShotNoise1D, pad: float, orders) -> float:
    """Bound on E sup |X^(j) - X_trunc^(j)| from points farther than ``pad``.

    lam * E|beta| * (two one-sided envelope tails), maximised over ``orders``.
    """
    tails = [2.0 * spec.kernel.envelope_tail(j, pad) for j in orders]
    if not all(math.isfinite(t) for t in tails):
        raise ConfigError("kernel envelope is not integrable at a requested order", key="process.kernel")
    return spec.lam * spec.impulse.abs_mean * max(tails)


def _shot_noise_batch(spec: ShotNoise1D, seeds, interval, order):
    a, b = interval
    if order > spec.kernel.smoothness:
        raise ConfigError(
            f"kernel smoothness {spec.kernel.smoothness} is below the requested order {order}",
            key="process.kernel",
        )
    orders = range(order + 1)
    pad = spec.window_pad if spec.window_pad is not None else default_pad(spec.kernel, orders)
    trunc = shot_noise_truncation_error(spec, pad, orders)
    width = (b - a) + 2 * pad
    counts = seeding.poisson(seeds, 0, spec.lam * width)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    row = np.repeat(np.arange(len(seeds)), counts)
    idx = np.arange(offsets[-1]) - offsets[row]
    flat_seeds = seeds[row]
    tau = (a - pad) + width * seeding.uniforms_at(flat_seeds, 1 + idx)
    beta = spec.impulse.ppf(seeding.uniforms_at(flat_seeds, IMPULSE_SLOT + idx))
    return ShotNoiseBatch(spec.kernel, tau, beta, offsets), trunc, pad


def _diffusion_batch(spec: RegularizedDiffusion, seeds):
    dt = spec.euler_step
    K = int(round(spec.horizon / dt))
    z = seeding.normals(seeds, np.arange(K))
    X = np.empty((len(seeds), K + 1))
    X[:, 0] = spec.x0
    sq = math.sqrt(dt)
    for k in range(K):
        s = k * dt
        x = X[:, k]
        X[:, k + 1] = x + spec.drift(s, x) * dt + spec.volatility(s, x) * sq * z[:, k]
    return SmoothedPathBatch(X, 0.0, dt)


def draw_paths(spec, seeds, interval=None, order: int = 1) -> PathBatch:
    """Realizations of a 1-D process family for each seed."""
    seeds = _seeds(seeds)
    if interval is None:
        interval = spec.interval
    interval = (float(interval[0]), float(interval[1]))
    if isinstance(spec, SineCosine):
        omega, theta, amp = _sine_cosine_params(spec, seeds)
        path = SinusoidBatch(amp[:, None], omega[:, None], theta[:, None])
        return PathBatch(path, interval, seeds, {"omega": omega, "theta": theta, "amplitude": amp})
    if isinstance(spec, SpectralGaussian):
        return PathBatch(_spectral_batch(spec, seeds), interval, seeds)
    if isinstance(spec, ChiSquare):
        if order > 2:
            raise ConfigError("chi-square paths expose derivatives up to order 2", key="order")
        J = len(spec.base.atoms)
        bases = [_spectral_batch(spec.base, seeds, offset=2 * J * i) for i in range(spec.n)]
        return PathBatch(ChiSquareBatch(bases), interval, seeds)
    if isinstance(spec, ShotNoise1D):
        path, trunc, pad = _shot_noise_batch(spec, seeds, interval, order)
        return PathBatch(path, interval, seeds, {"pad": pad}, trunc)
    if isinstance(spec, RegularizedDiffusion):
        lo, hi = spec.interval
        if interval[0] < lo - 1e-12 or interval[1] > hi + 1e-12:
            raise ValueError(f"grid must lie inside [{lo}, {hi}] (burn-in and bump clearance)")
        return PathBatch(_diffusion_batch(spec, seeds), interval, seeds)
    if isinstance(spec, DeterministicPath):
        return PathBatch(_Repeated(spec.path, len(seeds)), interval, seeds)
    raise TypeError(f"{type(spec).__name__} is not a 1-D process family")


class _Repeated(BatchPath):
    def __init__(self, path, n_rows):
        self.path = path
        self.n_rows = n_rows
        self.max_order = path.max_order

    def evaluate(self, rows, t, order=0):
        return self.path.evaluate(np.zeros_like(np.asarray(rows)), t, order)


def _sample(spec, seed, grid, order, interval=None):
    grid = np.asarray(grid, dtype=float)
    if interval is None:
        interval = (float(grid.min()), float(grid.max()))
    batch = draw_paths(spec, [seed], interval, order)
    return batch, batch.path.sample(0, grid, order, int(seed), batch.truncation_error)


def sample_sine_cosine(spec: SineCosine, seed: int, grid, order: int = 1):
    """Sample path plus realized (omega, theta, amplitude).

    The path is amplitude * cos(omega t - theta) with exact derivatives.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.min() < 0 or grid.max() > 2 * math.pi + 1e-12:
        raise ValueError("sine-cosine grids must lie inside [0, 2 pi]")
    batch, sample = _sample(spec, seed, grid, order, spec.interval)
    info = batch.info
    return sample, (float(info["omega"][0]), float(info["theta"][0]), float(info["amplitude"][0]))


def sample_spectral_gaussian(spec: SpectralGaussian, seed: int, grid, order: int = 1) -> PathSample:
    return _sample(spec, seed, grid, order)[1]


def sample_chi_square(spec: ChiSquare, seed: int, grid, order: int = 1) -> PathSample:
    if order > 2:
        raise ValueError("chi-square samples expose derivatives up to order 2")
    return _sample(spec, seed, grid, order)[1]


def sample_shot_noise_1d(spec: ShotNoise1D, seed: int, interval, grid, order: int = 1) -> PathSample:
    return _sample(spec, seed, grid, order, interval)[1]


def sample_regularized_diffusion(spec: RegularizedDiffusion, seed: int, grid, order: int = 1) -> PathSample:
    grid = np.asarray(grid, dtype=float)
    lo, hi = spec.interval
    if grid.min() < lo - 1e-12 or grid.max() > hi + 1e-12:
        raise ValueError(f"grid must lie inside [{lo}, {hi}] (burn-in and bump clearance)")
    return _sample(spec, seed, grid, order, (float(grid.min()), float(grid.max())))[1]


def _ball_pad(spec: ShotNoiseBall) -> float:
    k = spec.kernel
    L = k.width
    while radial_tail_integral(k.q, k.width, spec.d, L) >= PAD_TOLERANCE:
        L += 0.5 * k.width
    return L


def sample_field(spec, seed: int):
    """Field handle for one realization of a ball/sphere family (or a fixed field)."""
    if isinstance(spec, DeterministicField):
        return spec.field
    seeds = _seeds([seed])
    if isinstance(spec, ShotNoiseBall):
        d = spec.d
        pad = spec.pad if spec.pad is not None else _ball_pad(spec)
        R = spec.radius + pad
        vol = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * R**d
        n = int(seeding.poisson(seeds, 0, spec.lam * vol)[0])
        slots = 1 + np.arange(n)[:, None] * (d + 1) + np.arange(d + 1)[None, :]
        u = seeding.uniforms(seeds, slots.ravel()).reshape(n, d + 1)
        g = special.ndtri(u[:, :d])
        direction = g / np.linalg.norm(g, axis=1, keepdims=True)
        centres = direction * (R * u[:, d] ** (1.0 / d))[:, None]
        beta = spec.impulse.ppf(seeding.uniforms(seeds, IMPULSE_SLOT + np.arange(n))[0]) if n else np.zeros(0)
        trunc = spec.lam * spec.impulse.abs_mean * radial_tail_integral(spec.kernel.q, spec.kernel.width, d, pad)
        return BallShotNoiseField(centres.reshape(n, d), np.asarray(beta).reshape(n), spec.kernel.q, spec.kernel.width, trunc)
    if isinstance(spec, SphereShotNoise):
        D = spec.d + 1
        n = int(seeding.poisson(seeds, 0, spec.lam * spec.area)[0])
        slots = 1 + np.arange(n)[:, None] * D + np.arange(D)[None, :]
        g = seeding.normals(seeds, slots.ravel()).reshape(n, D)
        centres = g / np.linalg.norm(g, axis=1, keepdims=True) if n else np.zeros((0, D))
        beta = spec.impulse.ppf(seeding.uniforms(seeds, IMPULSE_SLOT + np.arange(n))[0]) if n else np.zeros(0)
        return SphereShotNoiseField(centres, np.asarray(beta).reshape(n), spec.profile)
    raise TypeError(f"{type(spec).__name__} is not a field family")
