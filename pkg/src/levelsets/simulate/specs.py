"""Declarative process and field specifications."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .distributions import Constant, Distribution, heavy_frequency_law
from .fields import Field
from .kernels import ExpPowerKernel, ExponentialProfile, Kernel
from .paths import FunctionPath


@dataclass(frozen=True)
class SineCosine:
    """xi_1 sin(w t) + xi_2 cos(w t) on [0, 2 pi] with w drawn from ``omega_dist``."""

    omega_dist: Distribution = field(default_factory=lambda: heavy_frequency_law(3))
    kind = "sine_cosine"
    interval = (0.0, 2 * math.pi)


@dataclass(frozen=True)
class SpectralGaussian:
    """Finite spectral mixture sum_j sigma_j (xi_j cos(l_j t) + eta_j sin(l_j t)).

    ``atoms`` holds pairs (sigma_j^2, l_j).
    """

    atoms: Tuple[Tuple[float, float], ...] = ((1.0, 1.0),)
    kind = "spectral_gaussian"
    interval = (0.0, 2 * math.pi)

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("at least one spectral atom is required")
        for w, lam in self.atoms:
            if not w > 0 or lam < 0:
                raise ValueError(f"invalid atom (weight={w}, frequency={lam})")

    @property
    def lambda0(self) -> float:
        return sum(w for w, _ in self.atoms)

    @property
    def lambda2(self) -> float:
        return sum(w * lam * lam for w, lam in self.atoms)


@dataclass(frozen=True)
class ChiSquare:
    """Y = sum_{i<=n} X_i^2 for independent copies X_i of ``base``."""

    n: int = 2
    base: SpectralGaussian = field(default_factory=SpectralGaussian)
    kind = "chi_square"
    interval = (0.0, 2 * math.pi)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chi-square needs n >= 1")


@dataclass(frozen=True)
class ShotNoise1D:
    """sum_i beta_i g(t - tau_i) with Poisson(lam) points on a padded window."""

    lam: float
    kernel: Kernel = field(default_factory=lambda: ExpPowerKernel(1))
    impulse: Distribution = field(default_factory=Constant)
    window_pad: Optional[float] = None
    interval: Tuple[float, float] = (0.0, 2 * math.pi)
    kind = "shot_noise_1d"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("intensity must be positive")


@dataclass(frozen=True)
class ShotNoiseBall:
    """Shot noise on R^d with radial kernel exp(-|t/width|^(2q)), observed on D_radius."""

    d: int = 2
    lam: float = 1.0
    kernel: ExpPowerKernel = field(default_factory=lambda: ExpPowerKernel(1))
    impulse: Distribution = field(default_factory=Constant)
    pad: Optional[float] = None
    radius: float = 1.0
    kind = "shot_noise_ball"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("ball fields need d >= 2")
        if not self.lam > 0:
            raise ValueError("intensity must be positive")


@dataclass(frozen=True)
class SphereShotNoise:
    """sum_i beta_i g(dist^2(t, T_i)) with Poisson(lam * area(S^d)) uniform centres."""

    d: int = 2
    lam: float = 1.0
    profile: ExponentialProfile = field(default_factory=ExponentialProfile)
    impulse: Distribution = field(default_factory=Constant)
    kind = "sphere_shot_noise"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("sphere fields need d >= 2")
        if not self.lam > 0:
            raise ValueError("intensity must be positive")

    @property
    def area(self) -> float:
        return 2 * math.pi ** ((self.d + 1) / 2) / math.gamma((self.d + 1) / 2)


def _zero(s, x):
    return 0.0 * x


def _one(s, x):
    return 1.0 + 0.0 * x


@dataclass(frozen=True)
class RegularizedDiffusion:
    """Euler-Maruyama path of dX = b(s,X) ds + sigma(s,X) dW smoothed by the bump Psi.

    The smoothed path is defined on [burn_in, horizon - 1].
    """

    drift: Callable = _zero
    volatility: Callable = _one
    horizon: float = 10.0
    euler_step: float = 1e-3
    burn_in: float = 1.0
    x0: float = 0.0
    kind = "regularized_diffusion"

    def __post_init__(self):
        if self.burn_in < 1:
            raise ValueError("burn_in must be >= 1 (bump support clearance)")
        if not self.horizon - 1 > self.burn_in:
            raise ValueError("horizon must exceed burn_in + 1")
        if not 0 < self.euler_step <= 0.1:
            raise ValueError("euler_step must lie in (0, 0.1]")

    @property
    def interval(self):
        return (self.burn_in, self.horizon - 1.0)


@dataclass(frozen=True)
class DeterministicPath:
    """A closed-form 1-D path (test corpus)."""

    path: FunctionPath
    interval: Tuple[float, float] = (0.0, 2 * math.pi)
    kind = "deterministic_path"


@dataclass(frozen=True)
class DeterministicField:
    """A closed-form field on a ball or sphere (test corpus)."""

    field: Field
    kind = "deterministic_field"


def cosine_path() -> DeterministicPath:
    """cos on [0, 2 pi] with all derivatives."""
    derivs = [lambda t, j=j: np.cos(t + j * math.pi / 2) for j in range(8)]
    return DeterministicPath(FunctionPath(derivs))
