"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set the environment variable ``PATTERNLAB_PURE`` (to any nonempty value)
before import to force the pure-Python path; ``BACKEND`` records which
implementation is active.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py as _py

BACKEND = "python"
_fast = None
if not os.environ.get("PATTERNLAB_PURE"):
    try:
        from . import _fastkern as _fast  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built; fall back silently
        _fast = None


def pava_decreasing(z) -> np.ndarray:
    """Euclidean projection of a 1-d array onto {x1 >= x2 >= ... >= xp}."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    if _fast is not None:
        return np.asarray(_fast.pava_decreasing(z))
    return _py.pava_decreasing(z)


def pava_decreasing_batch(Z) -> np.ndarray:
    """Row-wise :func:`pava_decreasing` of an (N, p) array."""
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    if _fast is not None:
        return np.asarray(_fast.pava_decreasing_batch(Z))
    return _py.pava_decreasing_batch(Z)
