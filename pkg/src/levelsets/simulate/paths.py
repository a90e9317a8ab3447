"""Realized trajectories that can be evaluated anywhere, one or many at a time.

A *batch path* holds ``n_rows`` independent realizations and implements
``evaluate(rows, t, order)``: ``rows`` and ``t`` broadcast to a common
shape, and entry ``[...]`` is the ``order``-th derivative of realization
``rows[...]`` at time ``t[...]``. Single realizations are batches of one.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .. import jets


@dataclass
class PathSample:
    """A realized trajectory on a uniform grid.

    ``derivatives[j]`` holds the j-th derivative on ``grid``;
    ``derivatives[0]`` is ``values``.
    """

    grid: np.ndarray
    values: np.ndarray
    derivatives: list
    seed: int
    truncation_error: float = 0.0

    def __post_init__(self):
        n = len(self.grid)
        if any(len(d) != n for d in self.derivatives) or len(self.values) != n:
            raise ValueError("grid, values and derivatives must have equal lengths")

    @property
    def order(self) -> int:
        return len(self.derivatives) - 1

    def to_csv(self, fh=None) -> str:
        """Columns t, x, dx1..dxr with 17 significant digits."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x"] + [f"dx{j}" for j in range(1, self.order + 1)])
        for i in range(len(self.grid)):
            w.writerow([f"{self.grid[i]:.17g}"] + [f"{d[i]:.17g}" for d in self.derivatives])
        return buf.getvalue() if fh is None else ""


class BatchPath:
    n_rows: int
    max_order: int = 64

    def evaluate(self, rows, t, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def sample(self, row: int, grid, order: int, seed: int = 0, truncation_error: float = 0.0) -> PathSample:
        grid = np.asarray(grid, dtype=float)
        rows = np.full(grid.shape, row)
        derivs = [self.evaluate(rows, grid, j) for j in range(order + 1)]
        return PathSample(grid, derivs[0], derivs, seed, truncation_error)


def _compact_rows(rows):
    """Drop broadcast (stride-0) trailing axes of a row index array before gathering."""
    if rows.ndim == 2 and rows.strides[1] == 0:
        return rows[:, :1]
    return rows


class SinusoidBatch(BatchPath):
    """X(t) = sum_j A_j cos(w_j t - theta_j); arrays of shape (n_rows, n_atoms)."""

    def __init__(self, amplitude, freq, phase):
        self.amplitude = np.atleast_2d(np.asarray(amplitude, dtype=float))
        self.freq = np.atleast_2d(np.asarray(freq, dtype=float))
        self.phase = np.atleast_2d(np.asarray(phase, dtype=float))
        self.n_rows = self.amplitude.shape[0]

    def evaluate_upto(self, rows, t, order):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        rows = _compact_rows(rows)
        out = np.zeros(t.shape + (order + 1,))
        shared = rows.ndim == 2 and rows.shape[1] == 1 and t.ndim == 2 and np.all(t == t[:1])
        for k in range(self.amplitude.shape[1]):
            A = self.amplitude[rows, k]
            w = self.freq[rows, k]
            if shared and np.all(w == w[0]):
                # common grid and frequency: expand cos(w t - theta) by angle addition
                th = self.phase[rows, k]
                ct, st = np.cos(w[0] * t[0]), np.sin(w[0] * t[0])
                cp, sp = np.cos(th), np.sin(th)
                c = ct * cp + st * sp
                s = st * cp - ct * sp
            else:
                arg = w * t - self.phase[rows, k]
                c, s = np.cos(arg), np.sin(arg)
            for j in range(order + 1):
                # d^j/dt^j cos(arg) = w^j cos(arg + j pi/2)
                out[..., j] += A * w**j * (c, -s, -c, s)[j % 4]
        return out

    def evaluate(self, rows, t, order=0):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        rows = _compact_rows(rows)
        out = np.zeros(t.shape)
        for k in range(self.amplitude.shape[1]):
            w = self.freq[rows, k]
            arg = w * t - self.phase[rows, k] + order * (math.pi / 2)
            out += self.amplitude[rows, k] * w**order * np.cos(arg)
        return out


class PolynomialBatch(BatchPath):
    """X(t) = sum_k c_k t^k with coefficients of shape (n_rows, degree + 1)."""

    def __init__(self, coef):
        self.coef = np.atleast_2d(np.asarray(coef, dtype=float))
        self.n_rows = self.coef.shape[0]

    def evaluate(self, rows, t, order=0):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        rows = _compact_rows(rows)
        deg = self.coef.shape[1] - 1
        out = np.zeros(t.shape)
        for k in range(deg, order - 1, -1):
            out = out * t + self.coef[rows, k] * math.perm(k, order)
        return out


class ChiSquareBatch(BatchPath):
    """Y = sum_i X_i^2 over independent base batches (orders up to 2)."""

    max_order = 2

    def __init__(self, bases: Sequence[BatchPath]):
        self.bases = list(bases)
        self.n_rows = self.bases[0].n_rows

    def evaluate(self, rows, t, order=0):
        if order > 2:
            raise ValueError("chi-square paths expose derivatives up to order 2")
        out = 0.0
        for b in self.bases:
            x = b.evaluate(rows, t, 0)
            if order == 0:
                out = out + x * x
            elif order == 1:
                out = out + 2 * x * b.evaluate(rows, t, 1)
            else:
                d1 = b.evaluate(rows, t, 1)
                out = out + 2 * (d1 * d1 + x * b.evaluate(rows, t, 2))
        return out


def _grouped(rows, t, fn):
    """Evaluate ``fn(row, t_subset)`` per distinct row, scattering back."""
    rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
    out = np.empty(t.shape)
    flat_r = rows.ravel()
    flat_t = t.ravel()
    flat_o = out.reshape(-1)
    order_idx = np.argsort(flat_r, kind="stable")
    sr = flat_r[order_idx]
    bounds = np.flatnonzero(np.diff(sr)) + 1
    for chunk in np.split(order_idx, bounds):
        if len(chunk):
            flat_o[chunk] = fn(int(flat_r[chunk[0]]), flat_t[chunk])
    return out


class ShotNoiseBatch(BatchPath):
    """X(t) = sum_i beta_i g(t - tau_i) with a ragged point set per row.

    ``offsets`` has length ``n_rows + 1``; row r owns points
    ``offsets[r]:offsets[r+1]``.
    """

    def __init__(self, kernel, tau, beta, offsets):
        self.kernel = kernel
        self.tau = np.asarray(tau, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.n_rows = len(self.offsets) - 1
        self.max_order = kernel.smoothness

    def points(self, row):
        sl = slice(self.offsets[row], self.offsets[row + 1])
        return self.tau[sl], self.beta[sl]

    def evaluate(self, rows, t, order=0):
        def one(row, ts):
            tau, beta = self.points(row)
            if len(tau) == 0:
                return np.zeros(len(ts))
            return self.kernel.derivative(ts[:, None] - tau[None, :], order) @ beta

        return _grouped(rows, t, one)


_BUMP_CACHE = {}


def bump_constant() -> float:
    """Normaliser c making c exp(-1/(1-x^2)) integrate to one over (-1, 1)."""
    if "c" not in _BUMP_CACHE:
        val, _ = integrate.quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
        _BUMP_CACHE["c"] = 1.0 / val
    return _BUMP_CACHE["c"]


def bump_derivatives(x, order: int) -> np.ndarray:
    """Psi^(j)(x) for j = 0..order, stacked on the last axis; zero outside (-1, 1)."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    xi = np.where(inside, x, 0.0)
    one_minus = jets.constant(1.0 - xi * xi, order)
    if order >= 1:
        one_minus[..., 1] = -2.0 * xi
    if order >= 2:
        one_minus[..., 2] = -1.0
    jet = jets.exp(-jets.reciprocal(one_minus))
    d = jets.derivatives(jet) * bump_constant()
    return np.where(inside[..., None], d, 0.0)


class SmoothedPathBatch(BatchPath):
    """Path-wise convolution of Euler-Maruyama paths with the bump Psi.

    ``values`` has shape (n_rows, n_nodes) on nodes ``s_k = t0 + k * step``;
    X_Psi^(j)(t) = step * sum_k Psi^(j)(t - s_k) X(s_k).
    """

    def __init__(self, values, t0: float, step: float):
        self.values = np.atleast_2d(np.asarray(values, dtype=float))
        self.t0 = float(t0)
        self.step = float(step)
        self.n_rows = self.values.shape[0]
        self._half = int(math.ceil(1.0 / self.step)) + 1

    def evaluate(self, rows, t, order=0):
        def one(row, ts):
            path = self.values[row]
            centre = np.rint((ts - self.t0) / self.step).astype(np.int64)
            k = centre[:, None] + np.arange(-self._half, self._half + 1)[None, :]
            k = np.clip(k, 0, len(path) - 1)
            # duplicated clipped nodes fall outside the bump support
            s = self.t0 + k * self.step
            valid = np.abs(ts[:, None] - s) < 1
            weights = bump_derivatives(ts[:, None] - s, order)[..., order]
            return self.step * np.sum(np.where(valid, weights, 0.0) * path[k], axis=1)

        return _grouped(rows, t, one)


@dataclass
class FunctionPath(BatchPath):
    """A deterministic path from callables: ``derivs[j](t)`` is the j-th derivative."""

    derivs: Sequence[Callable]
    n_rows: int = 1

    @property
    def max_order(self):
        return len(self.derivs) - 1

    def evaluate(self, rows, t, order=0):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        if order >= len(self.derivs):
            raise ValueError(f"no derivative of order {order} supplied")
        return np.asarray(self.derivs[order](t), dtype=float) * np.ones(t.shape)


class StackedPath(BatchPath):
    """Concatenate several batches into one (rows numbered consecutively)."""

    def __init__(self, parts: Sequence[BatchPath]):
        self.parts = list(parts)
        self.starts = np.cumsum([0] + [p.n_rows for p in self.parts])
        self.n_rows = int(self.starts[-1])

    def evaluate(self, rows, t, order=0):
        rows, t = np.broadcast_arrays(np.asarray(rows), np.asarray(t, dtype=float))
        out = np.empty(t.shape)
        part = np.searchsorted(self.starts, rows, side="right") - 1
        for i, p in enumerate(self.parts):
            m = part == i
            if np.any(m):
                out[m] = p.evaluate(rows[m] - self.starts[i], t[m], order)
        return out
