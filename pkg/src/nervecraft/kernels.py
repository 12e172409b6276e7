"""Backend selection for the hot greedy loops.

The compiled extension is used when it imports; set ``NERVECRAFT_PURE_PYTHON=1``
to force the reference implementation.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("NERVECRAFT_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def _as_i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def greedy_disjoint(indptr, indices, order, n_vertices):
    return _impl.greedy_disjoint(_as_i64(indptr), _as_i64(indices), _as_i64(order), int(n_vertices))


def greedy_layers(indptr, indices, order, n_vertices):
    return _impl.greedy_layers(_as_i64(indptr), _as_i64(indices), _as_i64(order), int(n_vertices))
