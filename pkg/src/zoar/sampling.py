"""Seeded perturbation directions and small vector helpers.

Directions are never stored as vectors: a :class:`DirectionSpec` holds a
64-bit seed plus a distribution tag and can be re-materialised on demand,
bit-identically, on any machine (see :mod:`zoar._kernels` for the exact
generator contract).  Seeds for the k-th direction of iteration t are
derived from the master seed by the fixed chain
``fold(fold(fold(master, NS_DIRECTION), t), k)``.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from ._kernels import MASK64, fold, np_fold

# namespace labels for seed derivation; fixed, part of the stream contract
NS_DIRECTION = 0x01
NS_NOISE = 0x02
NS_THETA0 = 0x03
NS_REPEAT = 0x04
NS_TRIAL = 0x05
NS_POINT = 0x06


class DistTag(enum.IntEnum):
    """Perturbation distribution: standard normal, unit sphere, or basis vectors."""

    GAUSSIAN = kernels.GAUSSIAN
    SPHERE = kernels.SPHERE
    COORDINATE = kernels.COORDINATE

    @classmethod
    def parse(cls, name: str) -> "DistTag":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown distribution tag: {name!r}") from None


@dataclass(frozen=True)
class DirectionSpec:
    """Regenerable perturbation direction: (seed, tag, dim)."""

    seed: int
    tag: DistTag
    dim: int

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValueError(f"seed out of 64-bit range: {self.seed}")
        if self.dim < 1:
            raise ValueError(f"direction dimension must be >= 1, got {self.dim}")


def materialize(spec: DirectionSpec) -> np.ndarray:
    """Regenerate the direction vector for ``spec`` (deterministic)."""
    return kernels.materialize(spec.seed, int(spec.tag), spec.dim)


def direction_seed(master_seed: int, iteration: int, k: int) -> int:
    return fold(fold(fold(master_seed, NS_DIRECTION), iteration), k)


def noise_seed(master_seed: int, iteration: int) -> int:
    return fold(fold(master_seed, NS_NOISE), iteration)


def theta0_seed(master_seed: int) -> int:
    return fold(master_seed, NS_THETA0)


def repeat_seed(master_seed: int, repeat: int) -> int:
    return fold(fold(master_seed, NS_REPEAT), repeat)


def trial_seed(master_seed: int, trial: int) -> int:
    return fold(fold(master_seed, NS_TRIAL), trial)


def point_digest(theta: np.ndarray) -> np.ndarray:
    """Order-sensitive 64-bit digest of a parameter vector's bit pattern.

    Works on (..., d) arrays, digesting along the last axis.  Used to key
    the observation-noise draw on the evaluation point.
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    words = theta.view(np.uint64)
    pos = (np.arange(1, words.shape[-1] + 1, dtype=np.uint64)
           * np.uint64(kernels.GOLDEN))
    mixed = np_fold(words, pos)
    return np.bitwise_xor.reduce(mixed, axis=-1)


def as_params(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a finite float64 parameter vector."""
    theta = np.asarray(values, dtype=np.float64)
    if theta.ndim != 1:
        raise ValueError(f"parameter vector must be 1-D, got shape {theta.shape}")
    if dim is not None and theta.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector contains non-finite entries")
    return theta


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def dot(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_dim(a, b)
    return float(np.dot(a, b))


def axpy(alpha: float, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_dim(x, y)
    return alpha * x + y


def norm2(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.dot(a, a)))
