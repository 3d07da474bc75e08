"""Integer mixing primitives shared by both kernel backends.

Everything here is exact 64-bit modular arithmetic, so it behaves
identically no matter which backend generated the surrounding floats.
The stream construction is counter-based (SplitMix64): the j-th raw
word of the stream rooted at ``seed`` is ``mix64(seed + (j+1)*GOLDEN)``
mod 2**64, which makes vectorised generation trivial.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a python int, reduced mod 2**64."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def fold(parent: int, data: int) -> int:
    """Derive a child seed from a parent seed and an integer label.

    Fixed formula (documented so streams are reproducible everywhere):
    ``mix64(((parent ^ mix64(data + GOLDEN)) + GOLDEN) mod 2**64)``.
    """
    inner = mix64((data + GOLDEN) & MASK64)
    return mix64(((parent & MASK64) ^ inner) + GOLDEN & MASK64)


def np_mix64(z: np.ndarray) -> np.ndarray:
    """Vectorised SplitMix64 finaliser on a uint64 array.

    0-d inputs are lifted to 1-d internally: numpy warns on *scalar*
    integer wraparound even though the modular result is what we want.
    """
    z = np.asarray(z, dtype=np.uint64)
    scalar = z.ndim == 0
    if scalar:
        z = z.reshape(1)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    z = z ^ (z >> np.uint64(31))
    return z[0] if scalar else z


def np_fold(parent: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Vectorised :func:`fold`; broadcasts parent against data."""
    parent = np.asarray(parent, dtype=np.uint64)
    data = np.asarray(data, dtype=np.uint64)
    scalar = parent.ndim == 0 and data.ndim == 0
    if scalar:
        data = data.reshape(1)
    inner = np_mix64(data + np.uint64(GOLDEN))
    out = np_mix64((parent ^ inner) + np.uint64(GOLDEN))
    return out[0] if scalar else out


def stream_words(seed: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit words of the stream rooted at ``seed``."""
    counters = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN)
    return np_mix64(counters + np.uint64(seed & MASK64))
