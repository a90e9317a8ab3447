"""Impulse and frequency laws sampled by inverse CDF from stream uniforms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats


class Distribution:
    """Law of a real random variable.

    Subclasses provide ``ppf`` plus the closed-form functionals used by the
    density checks: ``mean``, ``abs_mean``, ``inv_abs_mean`` (E 1/|X|) and
    ``density_bound`` (sup of the density; ``inf`` for atoms).
    """

    def ppf(self, u):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def abs_mean(self) -> float:
        return abs(self.mean)

    @property
    def inv_abs_mean(self) -> float:
        return math.inf

    @property
    def density_bound(self) -> float:
        return math.inf

    def moment(self, q: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Distribution):
    value: float = 1.0

    def ppf(self, u):
        return np.full(np.shape(u), float(self.value))

    @property
    def mean(self):
        return float(self.value)

    @property
    def inv_abs_mean(self):
        return math.inf if self.value == 0 else 1.0 / abs(self.value)

    def moment(self, q):
        return float(self.value) ** q


@dataclass(frozen=True)
class Uniform(Distribution):
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("Uniform needs high > low")

    def ppf(self, u):
        return self.low + (self.high - self.low) * np.asarray(u)

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def abs_mean(self):
        a, b = self.low, self.high
        if a >= 0 or b <= 0:
            return abs(self.mean)
        return (a * a + b * b) / (2 * (b - a))

    @property
    def inv_abs_mean(self):
        a, b = self.low, self.high
        if a > 0:
            return math.log(b / a) / (b - a)
        if b < 0:
            return math.log(a / b) / (b - a)
        return math.inf

    @property
    def density_bound(self):
        return 1.0 / (self.high - self.low)

    def moment(self, q):
        a, b = self.low, self.high
        return (b ** (q + 1) - a ** (q + 1)) / ((q + 1) * (b - a))


@dataclass(frozen=True)
class Exponential(Distribution):
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("exponential scale must be positive")

    def ppf(self, u):
        return -self.scale * np.log1p(-np.asarray(u))

    @property
    def mean(self):
        return self.scale

    @property
    def density_bound(self):
        return 1.0 / self.scale

    def moment(self, q):
        return self.scale**q * math.gamma(q + 1)


@dataclass(frozen=True)
class Gamma(Distribution):
    shape: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.shape > 0 or not self.scale > 0:
            raise ValueError("gamma shape and scale must be positive")

    def ppf(self, u):
        return self.scale * special.gammaincinv(self.shape, np.asarray(u))

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def inv_abs_mean(self):
        if self.shape <= 1:
            return math.inf
        return 1.0 / (self.scale * (self.shape - 1))

    @property
    def density_bound(self):
        if self.shape < 1:
            return math.inf
        if self.shape == 1:
            return 1.0 / self.scale
        mode = (self.shape - 1) * self.scale
        return float(stats.gamma.pdf(mode, self.shape, scale=self.scale))

    def moment(self, q):
        return self.scale**q * math.gamma(self.shape + q) / math.gamma(self.shape)


@dataclass(frozen=True)
class Pareto(Distribution):
    """Density shape * scale^shape / x^(shape+1) on [scale, upper].

    ``upper=None`` gives the untruncated law, whose moments of order
    >= shape are infinite.
    """

    shape: float
    scale: float = 1.0
    upper: Optional[float] = None

    def __post_init__(self):
        if not self.shape > 0 or not self.scale > 0:
            raise ValueError("Pareto shape and scale must be positive")
        if self.upper is not None and not self.upper > self.scale:
            raise ValueError("Pareto upper cut-off must exceed the scale")

    def _mass(self):
        if self.upper is None:
            return 1.0
        return 1.0 - (self.scale / self.upper) ** self.shape

    def ppf(self, u):
        u = np.asarray(u)
        return self.scale * (1.0 - u * self._mass()) ** (-1.0 / self.shape)

    @property
    def mean(self):
        return self.moment(1.0)

    @property
    def inv_abs_mean(self):
        return self.moment(-1.0)

    @property
    def density_bound(self):
        return self.shape / self.scale / self._mass()

    def moment(self, q):
        s, x0 = self.shape, self.scale
        if self.upper is None:
            return math.inf if q >= s else s * x0**q / (s - q)
        b = self.upper
        if q == s:
            val = s * x0**s * math.log(b / x0)
        else:
            val = s * x0**s * (b ** (q - s) - x0 ** (q - s)) / (q - s)
        return val / self._mass()


def heavy_frequency_law(M: int, upper: Optional[float] = None) -> Pareto:
    """Frequency law with E w^M finite and E w^(M+1) infinite.

    Density (M+1) w^-(M+2) on [1, inf), optionally truncated at ``upper``.
    """
    return Pareto(shape=M + 1.0, scale=1.0, upper=upper)


def rayleigh_moment(m: float) -> float:
    """E R^m for R = sqrt(xi_1^2 + xi_2^2) with independent standard normals."""
    return 2.0 ** (m / 2) * math.gamma(1 + m / 2)
