# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise kernel sum over rank grids."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport abs as iabs

cnp.import_array()


cdef double _sum_sorted(const int[:, ::1] cols, const double[::1] excess) noexcept nogil:
    # cols[0] is assumed to be 0..n-1 in order, so its lag is j - i.
    # (1 + p)(1 + e) - 1 = p + e + p e keeps the excess accurate when the
    # kernel is close to 1.
    cdef Py_ssize_t d = cols.shape[0]
    cdef Py_ssize_t n = cols.shape[1]
    cdef Py_ssize_t i, j, k
    cdef const int* c1
    cdef int a1
    cdef double p, e, row, total = 0.0
    if d == 2:
        c1 = &cols[1, 0]
        for i in range(n - 1):
            row = 0.0
            a1 = c1[i]
            for j in range(i + 1, n):
                p = excess[j - i]
                e = excess[iabs(c1[j] - a1)]
                row += p + e + p * e
            total += row
        return total
    for i in range(n - 1):
        row = 0.0
        for j in range(i + 1, n):
            p = excess[j - i]
            for k in range(1, d):
                e = excess[iabs(cols[k, j] - cols[k, i])]
                p = p + e + p * e
            row += p
        total += row
    return total


def pair_excess_sum(ranks, excess):
    """Sum over ``i < j`` of ``prod_k (1 + excess[|r_ik - r_jk|]) - 1``.

    ``ranks`` holds 1-based grid indices, every column a permutation of
    ``1..n``; ``1 + excess[m]`` is the one-dimensional kernel at lag ``m``.
    Rows are reordered by the first column (the sum is invariant to row
    order) and visited in a fixed order, so the result is reproducible.
    """
    r = np.asarray(ranks, dtype=np.int32)
    cdef const double[::1] tab = np.ascontiguousarray(excess, dtype=np.float64)
    n = r.shape[0]
    if tab.shape[0] < n:
        raise ValueError("lag table shorter than the sample")
    order = np.argsort(r[:, 0], kind="stable")
    cdef const int[:, ::1] cols = np.ascontiguousarray((r[order] - 1).T, dtype=np.int32)
    cdef double out
    with nogil:
        out = _sum_sorted(cols, tab)
    return out
