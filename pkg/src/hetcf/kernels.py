"""Neighbor-aggregation kernel with backend selection.

The hot loop of propagation is a sparse-times-dense product over the merged
CSR adjacency.  A compiled extension provides it when built; a vectorized
numpy implementation is the fallback.  Set ``HETCF_NO_EXT=1`` to force the
fallback (used by the benchmark for a fair comparison).
"""

from __future__ import annotations

import os

import numpy as np

HAVE_EXT = False
_ext_spmm = None
if not os.environ.get("HETCF_NO_EXT"):
    try:
        from . import _spmm as _ext  # type: ignore[attr-defined]

        _ext_spmm = _ext.csr_spmm
        HAVE_EXT = True
    except ImportError:
        HAVE_EXT = False

BACKEND = "ext" if HAVE_EXT else "numpy"


def csr_spmm_numpy(indptr, indices, data, dense):
    """out[i] = sum over row i's entries of data[k] * dense[indices[k]]."""
    nrows = indptr.size - 1
    out = np.zeros((nrows, dense.shape[1]), dtype=np.float64)
    if indices.size == 0:
        return out
    # reduceat treats an empty segment as a single element, so reduce only
    # over the rows that actually have entries.
    nonempty = np.flatnonzero(np.diff(indptr))
    weighted = dense[indices] * data[:, None]
    out[nonempty] = np.add.reduceat(weighted, indptr[nonempty], axis=0)
    return out


def csr_spmm(indptr, indices, data, dense):
    """Dispatch to the compiled kernel when available."""
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    data = np.ascontiguousarray(data, dtype=np.float64)
    dense = np.ascontiguousarray(dense, dtype=np.float64)
    if HAVE_EXT:
        return _ext_spmm(indptr, indices, data, dense)
    return csr_spmm_numpy(indptr, indices, data, dense)
