# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled CSR row-aggregation kernel: out[i] = sum_k data[k] * dense[indices[k]]."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_spmm(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
             double[::1] data, double[:, ::1] dense):
    """Weighted neighbor sum per CSR row over a dense float64 matrix.

    Rows accumulate strictly in index order, so the result is reproducible
    to the bit for a fixed edge ordering.
    """
    cdef Py_ssize_t nrows = indptr.shape[0] - 1
    cdef Py_ssize_t dim = dense.shape[1]
    out_arr = np.zeros((nrows, dim), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, c
    cdef cnp.int64_t j
    cdef double w
    for i in range(nrows):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            w = data[k]
            for c in range(dim):
                out[i, c] += w * dense[j, c]
    return out_arr
