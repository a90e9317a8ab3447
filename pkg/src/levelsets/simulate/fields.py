"""Random and deterministic fields on balls and spheres.

Every field handle exposes ``eval(points)`` and
``directional_derivatives(points, directions, order)``, the latter returning
an array with trailing axis of length ``order + 1`` holding the derivatives
of ``z -> X(gamma(z))`` at ``z = 0``. For ball fields ``gamma`` is the
straight line ``p + z v``; for sphere fields it is the unit-speed great
circle ``cos(z) p + sin(z) v`` (``v`` must be a unit tangent at ``p``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import jets
from .kernels import exp_power_radial_jet
from .paths import PolynomialBatch, SinusoidBatch

TANGENT_TOL = 1e-8


class Field:
    dim: int
    on_sphere: bool = False

    def eval(self, points) -> np.ndarray:
        return self.directional_derivatives(points, np.zeros_like(np.asarray(points, dtype=float)), 0)[..., 0]

    def directional_derivatives(self, points, directions, order: int) -> np.ndarray:
        raise NotImplementedError


def check_tangent(points, directions):
    """Raise ValueError unless every direction is a unit vector tangent at its point."""
    p = np.asarray(points, dtype=float)
    v = np.asarray(directions, dtype=float)
    dot = np.abs(np.sum(p * v, axis=-1))
    norm = np.sum(v * v, axis=-1)
    if np.any(dot > TANGENT_TOL) or np.any(np.abs(norm - 1) > TANGENT_TOL):
        raise ValueError("direction must be a unit vector tangent to the sphere at the point")


def _great_circle_linear(a, b, order):
    """Derivatives at 0 of z -> a cos z + b sin z."""
    out = np.empty(np.shape(a) + (order + 1,))
    for j in range(order + 1):
        out[..., j] = (a, b, -a, -b)[j % 4]
    return out


@dataclass(frozen=True)
class QuadraticField(Field):
    """f(t) = t^T A t + b^T t + c on R^d (circles, ellipses, linear, constant)."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    @classmethod
    def sphere_level(cls, d: int, r: float):
        """|t|^2 - r^2, whose zero set is the sphere of radius r."""
        return cls(np.eye(d), np.zeros(d), -r * r)

    @classmethod
    def linear(cls, w, c: float = 0.0):
        w = np.asarray(w, dtype=float)
        return cls(np.zeros((len(w), len(w))), w, c)

    @classmethod
    def constant(cls, d: int, c: float):
        return cls(np.zeros((d, d)), np.zeros(d), c)

    @property
    def dim(self):
        return len(self.b)

    def eval(self, points):
        p = np.asarray(points, dtype=float)
        return np.einsum("...i,ij,...j->...", p, self.A, p) + p @ self.b + self.c

    def gradient(self, points):
        p = np.asarray(points, dtype=float)
        return p @ (self.A + self.A.T) + self.b

    def directional_derivatives(self, points, directions, order):
        p = np.asarray(points, dtype=float)
        v = np.asarray(directions, dtype=float)
        out = np.zeros(np.broadcast_shapes(p.shape, v.shape)[:-1] + (order + 1,))
        out[..., 0] = self.eval(p)
        if order >= 1:
            out[..., 1] = np.sum(self.gradient(p) * v, axis=-1)
        if order >= 2:
            out[..., 2] = 2.0 * np.einsum("...i,ij,...j->...", v, self.A, v)
        return out

    def restrict_to_lines(self, base, dirs):
        """Exact quadratic polynomials t -> f(base + t dirs), one row per chord."""
        base = np.atleast_2d(base)
        dirs = np.atleast_2d(dirs)
        coef = np.stack([
            self.eval(base),
            np.sum(self.gradient(base) * dirs, axis=-1),
            np.einsum("...i,ij,...j->...", dirs, self.A, dirs),
        ], axis=-1)
        return PolynomialBatch(coef)

    def restrict_to_sphere(self):
        return SphereQuadraticField(self.A, self.b, self.c)


@dataclass(frozen=True)
class SphereQuadraticField(Field):
    """A quadratic polynomial of R^(d+1) restricted to the unit sphere S^d.

    The height field t_(d+1) is ``SphereQuadraticField.height(d)``.
    """

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0
    on_sphere = True

    @classmethod
    def height(cls, d: int, axis: int = -1):
        w = np.zeros(d + 1)
        w[axis] = 1.0
        return cls(np.zeros((d + 1, d + 1)), w, 0.0)

    @classmethod
    def linear(cls, w, c: float = 0.0):
        w = np.asarray(w, dtype=float)
        return cls(np.zeros((len(w), len(w))), w, c)

    @property
    def dim(self):
        return len(self.b) - 1

    def restrict_to_great_circles(self, e1, e2):
        """Exact trigonometric polynomials theta -> f(cos(theta) e1 + sin(theta) e2)."""
        e1 = np.atleast_2d(e1)
        e2 = np.atleast_2d(e2)
        S = 0.5 * (self.A + self.A.T)
        E11 = np.einsum("...i,ij,...j->...", e1, S, e1)
        E22 = np.einsum("...i,ij,...j->...", e2, S, e2)
        E12 = np.einsum("...i,ij,...j->...", e1, S, e2)
        a1, b1 = e1 @ self.b, e2 @ self.b
        a2, b2 = 0.5 * (E11 - E22), E12
        const = self.c + 0.5 * (E11 + E22)
        amp = np.stack([const, np.hypot(a1, b1), np.hypot(a2, b2)], axis=1)
        phase = np.stack([np.zeros_like(a1), np.arctan2(b1, a1), np.arctan2(b2, a2)], axis=1)
        freq = np.broadcast_to([0.0, 1.0, 2.0], amp.shape)
        return SinusoidBatch(amp, freq, phase)

    def eval(self, points):
        p = np.asarray(points, dtype=float)
        return np.einsum("...i,ij,...j->...", p, self.A, p) + p @ self.b + self.c

    def directional_derivatives(self, points, directions, order, check=True):
        p = np.asarray(points, dtype=float)
        v = np.asarray(directions, dtype=float)
        if check and order > 0:
            check_tangent(p, v)
        out = _great_circle_linear(p @ self.b, v @ self.b, order)
        out[..., 0] += self.c
        if np.any(self.A):
            # along cos z p + sin z v the quadratic part is
            # (pAp+vAv)/2 + (pAp-vAv)/2 cos 2z + pAv sin 2z
            S = 0.5 * (self.A + self.A.T)
            pap = np.einsum("...i,ij,...j->...", p, S, p)
            vav = np.einsum("...i,ij,...j->...", v, S, v)
            pav = np.einsum("...i,ij,...j->...", p, S, v)
            j = np.arange(order + 1)
            out += (0.5 * (pap - vav))[..., None] * np.cos(j * math.pi / 2) * 2.0**j
            out += pav[..., None] * np.sin(j * math.pi / 2) * 2.0**j
            out[..., 0] += 0.5 * (pap + vav)
        return out


@dataclass
class BallShotNoiseField(Field):
    """X(t) = sum_i beta_i exp(-|(t - T_i)/width|^(2q)) from a finite point set."""

    centres: np.ndarray
    beta: np.ndarray
    q: int = 1
    width: float = 1.0
    truncation_error: float = 0.0

    @property
    def dim(self):
        return self.centres.shape[1]

    def directional_derivatives(self, points, directions, order):
        p = np.asarray(points, dtype=float)
        v = np.asarray(directions, dtype=float)
        shape = np.broadcast_shapes(p.shape, v.shape)
        p = np.broadcast_to(p, shape)
        v = np.broadcast_to(v, shape)
        out = np.zeros(shape[:-1] + (order + 1,))
        for c, b in zip(self.centres, self.beta):
            out += b * exp_power_radial_jet(p - c, v, self.q, self.width, order)
        return jets.derivatives(out)


def _theta_over_sin(theta):
    return 1.0 / np.sinc(theta / math.pi)


def _second_factor(theta):
    # (sin t - t cos t) / sin^3 t, with its series near 0
    small = np.abs(theta) < 1e-3
    th = np.where(small, 1.0, theta)
    s = np.sin(th)
    exact = (s - th * np.cos(th)) / s**3
    t2 = theta * theta
    series = 1.0 / 3.0 + t2 * (2.0 / 15.0 + t2 * 17.0 / 315.0)
    return np.where(small, series, exact)


@dataclass
class SphereShotNoiseField(Field):
    """X(t) = sum_i beta_i g(dist^2(t, T_i)) on S^d with geodesic distance."""

    centres: np.ndarray
    beta: np.ndarray
    profile: object
    on_sphere = True

    @property
    def dim(self):
        return self.centres.shape[1] - 1

    def eval(self, points):
        p = np.asarray(points, dtype=float)
        if len(self.beta) == 0:
            return np.zeros(p.shape[:-1])
        x = np.clip(p @ self.centres.T, -1.0, 1.0)
        return self.profile.derivative(np.arccos(x) ** 2, 0) @ self.beta

    def directional_derivatives(self, points, directions, order, check=True):
        if order > 2:
            raise ValueError("sphere shot-noise fields expose derivatives up to order 2")
        p = np.asarray(points, dtype=float)
        v = np.asarray(directions, dtype=float)
        if check and order > 0:
            check_tangent(p, v)
        shape = np.broadcast_shapes(p.shape, v.shape)[:-1]
        out = np.zeros(shape + (order + 1,))
        if len(self.beta) == 0:
            return out
        x = np.clip(p @ self.centres.T, -1.0, 1.0)
        theta = np.arccos(x)
        F = theta * theta
        out[..., 0] = self.profile.derivative(F, 0) @ self.beta
        if order == 0:
            return out
        xp = v @ self.centres.T
        dF = -2.0 * _theta_over_sin(theta)
        g1 = self.profile.derivative(F, 1)
        out[..., 1] = (g1 * dF * xp) @ self.beta
        if order == 2:
            d2F = 2.0 * _second_factor(theta)
            g2 = self.profile.derivative(F, 2)
            # x'' = -x along a unit-speed great circle
            val = g2 * (dF * xp) ** 2 + g1 * (d2F * xp * xp - dF * x)
            out[..., 2] = val @ self.beta
        return out
