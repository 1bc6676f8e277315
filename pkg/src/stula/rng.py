"""Counter-based Gaussian streams.

Chain ``c`` under master seed ``s`` owns the SplitMix64 sequence keyed by
``chain_key(s, c)``.  Normal number ``e`` of that stream is a pure function of
``(key, e)`` (Box-Muller on counters ``2*(e//2)+1`` and ``2*(e//2)+2``), so
noise does not depend on how many chains run or on evaluation order.
Step ``n`` of a ``d``-dimensional chain consumes elements ``n*d .. n*d+d-1``.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import maybe_njit

_MASK = (1 << 64) - 1
_GAMMA_INT = 0x9E3779B97F4A7C15
_INIT_TAG = 0xD1B54A32D192ED03

GAMMA = np.uint64(_GAMMA_INT)
C1 = np.uint64(0xBF58476D1CE4E5B9)
C2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
ONE = np.uint64(1)
TWO = np.uint64(2)
TWO_PI = 2.0 * math.pi
INV_2_53 = 1.0 / 9007199254740992.0


def splitmix64(x: int) -> int:
    """SplitMix64 step on a Python int (state advanced once, then mixed)."""
    x = (x + _GAMMA_INT) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def chain_key(seed: int, chain: int) -> int:
    return splitmix64(splitmix64(seed & _MASK) ^ (chain & _MASK))


def chain_keys(seed: int, n_chains: int) -> np.ndarray:
    return np.array([chain_key(seed, c) for c in range(n_chains)], dtype=np.uint64)


def init_keys(keys: np.ndarray) -> np.ndarray:
    """Independent keys for drawing initial states."""
    return np.array([splitmix64(int(k) ^ _INIT_TAG) for k in keys], dtype=np.uint64)


@maybe_njit
def _mix(z):
    z = (z ^ (z >> S30)) * C1
    z = (z ^ (z >> S27)) * C2
    return z ^ (z >> S31)


@maybe_njit
def normal_at(key, e):
    """Element ``e`` (int) of the Gaussian stream with uint64 ``key``."""
    m = np.uint64(e >> 1)
    z1 = _mix(key + (TWO * m + ONE) * GAMMA)
    z2 = _mix(key + (TWO * m + TWO) * GAMMA)
    u1 = (float(z1 >> S11) + 0.5) * INV_2_53
    u2 = float(z2 >> S11) * INV_2_53
    r = math.sqrt(-2.0 * math.log(u1))
    if e & 1:
        return r * math.sin(TWO_PI * u2)
    return r * math.cos(TWO_PI * u2)


def normals(keys: np.ndarray, start: int, count: int) -> np.ndarray:
    """Vectorized stream elements ``start .. start+count-1`` for every key.

    Returns shape ``(len(keys), count)``; bitwise the same uint64 arithmetic
    as :func:`normal_at`.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    e = np.arange(start, start + count, dtype=np.uint64)
    m = e >> ONE
    with np.errstate(over="ignore"):
        z1 = keys[:, None] + (TWO * m + ONE) * GAMMA
        z2 = keys[:, None] + (TWO * m + TWO) * GAMMA
        z1 = _mix_np(z1)
        z2 = _mix_np(z2)
    u1 = ((z1 >> S11).astype(np.float64) + 0.5) * INV_2_53
    u2 = (z2 >> S11).astype(np.float64) * INV_2_53
    r = np.sqrt(-2.0 * np.log(u1))
    ang = TWO_PI * u2
    odd = (e & ONE).astype(bool)
    return np.where(odd[None, :], r * np.sin(ang), r * np.cos(ang))


def _mix_np(z):
    z = (z ^ (z >> S30)) * C1
    z = (z ^ (z >> S27)) * C2
    return z ^ (z >> S31)
