"""Counter-based random streams.

Every random quantity in the toolkit is a pure function of a 64-bit seed
and a slot index: ``mix64(seed, slot)`` is mapped to a uniform in (0, 1)
and then pushed through an inverse CDF. Replicate ``i`` of an experiment
uses ``derive_seed(master_seed, i)``. Nothing depends on evaluation order
or thread scheduling, and the construction is easy to reproduce in any
language.

Mixer (SplitMix64 finaliser applied to ``seed + GOLDEN * (slot + 1)``,
all arithmetic modulo 2**64)::

    z = seed + 0x9E3779B97F4A7C15 * (slot + 1)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Uniforms use the top 53 bits: ``((z >> 11) + 0.5) * 2**-53``.
"""

from __future__ import annotations

import numpy as np
from scipy import special, stats

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def _u64(x):
    if isinstance(x, (int, np.integer)):
        return np.uint64(int(x) & MASK64)
    return np.asarray(x).astype(np.uint64)


def mix64(seed, slot):
    """Avalanche mix of (seed, slot); broadcasts over arrays."""
    seed = np.atleast_1d(_u64(seed))
    slot = np.atleast_1d(_u64(slot))
    with np.errstate(over="ignore"):
        z = seed + GOLDEN * (slot + np.uint64(1))
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of replicate ``index`` under ``master_seed``."""
    return int(mix64(master_seed, index)[0])


def derive_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    return mix64(master_seed, np.arange(start, start + count, dtype=np.uint64))


def uniforms(seeds, slots) -> np.ndarray:
    """Uniform(0, 1) variates, shape ``(len(seeds), len(slots))``."""
    seeds = np.atleast_1d(_u64(seeds))
    slots = np.atleast_1d(_u64(slots))
    z = mix64(seeds[:, None], slots[None, :])
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniforms_at(seeds, slots) -> np.ndarray:
    """Elementwise variant of ``uniforms``: one variate per (seed, slot) pair."""
    z = mix64(seeds, slots)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seeds, slots) -> np.ndarray:
    return special.ndtri(uniforms(seeds, slots))


def poisson(seeds, slot: int, mean) -> np.ndarray:
    """One Poisson(mean) count per seed (inverse-CDF method)."""
    u = uniforms(seeds, [slot])[:, 0]
    return stats.poisson.ppf(u, mean).astype(np.int64)


def numpy_generator(seed: int) -> np.random.Generator:
    """Generator for auxiliary resampling (bootstrap); fully seed-determined."""
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
