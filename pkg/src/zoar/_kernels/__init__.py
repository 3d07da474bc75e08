"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise
the pure NumPy implementation is used.  Both implement the identical
bit-level contract, so the choice affects speed only.  Set
``ZOAR_FORCE_PURE_KERNELS=1`` to skip the extension (used by the
backend benchmark and the parity tests).
"""

import os

from . import pure
from .bits import GOLDEN, MASK64, fold, mix64, np_fold, np_mix64, stream_words

GAUSSIAN = pure.GAUSSIAN
SPHERE = pure.SPHERE
COORDINATE = pure.COORDINATE

if os.environ.get("ZOAR_FORCE_PURE_KERNELS") == "1":
    _impl = pure
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND_NAME

standard_normals = _impl.standard_normals
uniform_doubles = _impl.uniform_doubles
materialize = _impl.materialize
materialize_block = _impl.materialize_block
weighted_direction_sum = _impl.weighted_direction_sum
normal_icdf = _impl.normal_icdf
log_unit = _impl.log_unit
