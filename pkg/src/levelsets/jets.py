"""Truncated Taylor series ("jets") with numpy broadcasting.

A jet is an array whose last axis holds Taylor coefficients c_0..c_n of a
function of a scalar offset z, i.e. f(x + z) = sum c_j z^j + O(z^(n+1)).
The j-th derivative at the expansion point is j! * c_j.
"""

from __future__ import annotations

import math

import numpy as np


def constant(value, order):
    value = np.asarray(value, dtype=float)
    out = np.zeros(value.shape + (order + 1,))
    out[..., 0] = value
    return out


def variable(value, order):
    """Jet of the identity map expanded at ``value``."""
    out = constant(value, order)
    if order >= 1:
        out[..., 1] = 1.0
    return out


def mul(a, b):
    n = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(n):
        out[..., k] = np.sum(a[..., : k + 1] * b[..., k::-1], axis=-1)
    return out


def reciprocal(a):
    n = a.shape[-1]
    out = np.zeros(a.shape)
    out[..., 0] = 1.0 / a[..., 0]
    for k in range(1, n):
        acc = np.sum(a[..., 1 : k + 1] * out[..., k - 1 :: -1][..., :k], axis=-1)
        out[..., k] = -acc / a[..., 0]
    return out


def exp(a):
    n = a.shape[-1]
    out = np.zeros(a.shape)
    out[..., 0] = np.exp(a[..., 0])
    for k in range(1, n):
        j = np.arange(1, k + 1)
        out[..., k] = np.sum(j * a[..., 1 : k + 1] * out[..., k - 1 :: -1][..., :k], axis=-1) / k
    return out


def log(a):
    n = a.shape[-1]
    out = np.zeros(a.shape)
    out[..., 0] = np.log(a[..., 0])
    for k in range(1, n):
        j = np.arange(1, k)
        acc = np.sum(j * out[..., 1:k] * a[..., k - 1 : 0 : -1], axis=-1) if k > 1 else 0.0
        out[..., k] = (a[..., k] - acc / k) / a[..., 0]
    return out


def power(a, exponent):
    """a ** exponent for a real exponent; requires a[..., 0] > 0 unless integer."""
    if float(exponent).is_integer() and exponent >= 0:
        out = constant(np.ones(a.shape[:-1]), a.shape[-1] - 1)
        for _ in range(int(exponent)):
            out = mul(out, a)
        return out
    return exp(exponent * log(a))


def compose_scalar(derivs, inner):
    """Jet of F(inner) given F^(j)(inner_0) for j = 0..n (Faa di Bruno via series).

    ``derivs`` has the same trailing length as ``inner``.
    """
    n = inner.shape[-1]
    shifted = inner.copy()
    shifted[..., 0] = 0.0
    out = np.zeros(np.broadcast_shapes(derivs.shape, inner.shape))
    term = constant(np.ones(inner.shape[:-1]), n - 1)
    for j in range(n):
        out = out + (derivs[..., j : j + 1] / math.factorial(j)) * term
        term = mul(term, shifted)
    return out


def derivatives(jet):
    """Derivatives f^(j) = j! c_j."""
    n = jet.shape[-1]
    fact = np.array([math.factorial(j) for j in range(n)], dtype=float)
    return jet * fact
