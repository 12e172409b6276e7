# cython: language_level=3
"""Compiled greedy-selection kernels over CSR vertex sets.

Balls are given as CSR rows (``indptr``, ``indices``) of vertex ids.
Semantics match ``_kernels_py`` exactly; tests compare the two.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def greedy_disjoint(const cnp.int64_t[:] indptr, const cnp.int64_t[:] indices,
                    const cnp.int64_t[:] order, Py_ssize_t n_vertices):
    cdef Py_ssize_t n_sets = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] selected = np.zeros(n_sets, dtype=np.uint8)
    cdef cnp.uint8_t[:] claimed = np.zeros(n_vertices, dtype=np.uint8)
    cdef Py_ssize_t t, b, j
    cdef bint hit
    for t in range(order.shape[0]):
        b = order[t]
        hit = False
        for j in range(indptr[b], indptr[b + 1]):
            if claimed[indices[j]]:
                hit = True
                break
        if hit:
            continue
        selected[b] = 1
        for j in range(indptr[b], indptr[b + 1]):
            claimed[indices[j]] = 1
    return selected.astype(bool)


def greedy_layers(const cnp.int64_t[:] indptr, const cnp.int64_t[:] indices,
                  const cnp.int64_t[:] order, Py_ssize_t n_vertices):
    cdef Py_ssize_t n_sets = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] layer = np.zeros(n_sets, dtype=np.int64)
    cdef cnp.int64_t[:] stamp = np.zeros(n_vertices, dtype=np.int64)
    cdef cnp.int64_t[:] pending = np.array(order, dtype=np.int64)
    cdef Py_ssize_t n_pending = order.shape[0]
    cdef Py_ssize_t t, b, j, n_next
    cdef cnp.int64_t d = 0
    cdef bint hit
    while n_pending > 0:
        d += 1
        n_next = 0
        for t in range(n_pending):
            b = pending[t]
            hit = False
            for j in range(indptr[b], indptr[b + 1]):
                if stamp[indices[j]] == d:
                    hit = True
                    break
            if hit:
                pending[n_next] = b
                n_next += 1
                continue
            layer[b] = d
            for j in range(indptr[b], indptr[b + 1]):
                stamp[indices[j]] = d
        n_pending = n_next
    return layer
