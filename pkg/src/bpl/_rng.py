"""Counter-based uniform streams shared by the scalar and batched samplers.

Every draw is a pure function of ``(seed, counter)`` (a SplitMix64 step), so
serial, parallel, numba and numpy code paths all see the same uniforms.
"""

import hashlib

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary printable parts (global seed, claim id, agent index)."""
    h = hashlib.blake2b("\x1f".join(str(p) for p in parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def uniforms(seed: int, counters) -> np.ndarray:
    """Uniforms in [0, 1) for the given counters of stream ``seed``."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + (c + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        z = z ^ (z >> _S31)
    return (z >> _S11).astype(np.float64) * _INV53


def uniform_matrix(seeds: np.ndarray, start: int, count: int) -> np.ndarray:
    """Row i holds counters ``start .. start+count-1`` of stream ``seeds[i]``."""
    s = np.asarray(seeds, dtype=np.uint64)[:, None]
    c = np.arange(start, start + count, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        z = s + (c + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        z = z ^ (z >> _S31)
    return (z >> _S11).astype(np.float64) * _INV53
