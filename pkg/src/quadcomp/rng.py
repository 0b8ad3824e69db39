"""Counter-based SplitMix64 streams.

Every trial ``i`` of a run with seed ``s`` gets the sub-seed
``mix(s + (i + 1) * GAMMA)``; its ``k``-th raw draw is
``mix(sub + (k + 1) * GAMMA)``.  Draws therefore depend only on
``(seed, trial, k)``, never on evaluation order, and the whole scheme is
reproducible bit for bit by any other SplitMix64 implementation.

Constants (Steele, Lea, Flood 2014):

    GAMMA = 0x9E3779B97F4A7C15
    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27; z *= 0x94D049BB133111EB
            z ^= z >> 31

A uniform double in ``[0, 1)`` is ``(x >> 11) * 2**-53``.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MUL1 = np.uint64(0xBF58476D1CE4E5B9)
MUL2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def mix(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MUL1
        z = (z ^ (z >> np.uint64(27))) * MUL2
    return z ^ (z >> np.uint64(31))


def _counter(base, k) -> np.ndarray:
    base = np.asarray(base, dtype=np.uint64)
    k = np.asarray(k, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return base + (k + np.uint64(1)) * GAMMA


def trial_seeds(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Sub-seeds of trials ``start .. start + count - 1``."""
    seed = np.uint64(int(seed) & MASK64)
    idx = np.arange(start, start + count, dtype=np.uint64)
    return mix(_counter(seed, idx))


def raw(seeds, k: int, offset: int = 0) -> np.ndarray:
    """``(len(seeds), k)`` array of raw 64-bit draws ``offset .. offset + k - 1``."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    ks = np.arange(offset, offset + k, dtype=np.uint64)
    return mix(_counter(seeds[:, None], ks[None, :]))


def uniforms(seeds, k: int, offset: int = 0) -> np.ndarray:
    x = raw(seeds, k, offset)
    return (x >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def normals_from(u: np.ndarray) -> np.ndarray:
    """Box-Muller on consecutive column pairs; ``u.shape[-1]`` must be even."""
    u1 = 1.0 - u[..., 0::2]
    u2 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty_like(u)
    out[..., 0::2] = r * np.cos(2 * np.pi * u2)
    out[..., 1::2] = r * np.sin(2 * np.pi * u2)
    return out


class SplitMix64:
    """Sequential SplitMix64 generator (state advances by ``GAMMA`` per draw)."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + int(GAMMA)) & MASK64
        return int(mix(np.uint64(self.state)))

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53
