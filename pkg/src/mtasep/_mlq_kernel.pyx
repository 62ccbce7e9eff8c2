# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled queue-assignment engine.

Mirror of the pure-Python fallback: same inputs, same uniform-consumption
pattern, same arithmetic, so outputs are bit-for-bit interchangeable.
"""

from libc.math cimport ceil, log, pow
from libc.stdlib cimport calloc, free as cfree

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void fen_add(long* tree, int n, int i, int delta) noexcept:
    i += 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


cdef inline long fen_prefix(long* tree, int i) noexcept:
    cdef long s = 0
    i += 1
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


cdef inline int fen_select(long* tree, int n, int log2n, long k) noexcept:
    cdef int pos = 0
    cdef int step, nxt
    cdef long rem = k
    for step in range(log2n, -1, -1):
        nxt = pos + (1 << step)
        if nxt <= n and tree[nxt] < rem:
            pos = nxt
            rem -= tree[nxt]
    return pos


cdef inline long choose_rank(double u, double q, long R) noexcept:
    cdef double t
    cdef long j
    if R <= 1 or q <= 0.0:
        return 1
    t = 1.0 - u * (1.0 - pow(q, R))
    j = <long>ceil(log(t) / log(q) - 1e-12)
    if j < 1:
        return 1
    if j > R:
        return R
    return j


def assign_line(arrival_sites, service_sites, int L, double q, uniforms):
    """Assign each arrival (in the given order) a distinct service site.

    A still-free service at the arrival's own site is taken outright;
    otherwise the j-th free service strictly after it in cyclic order is
    drawn with weight q^(j-1), consuming one uniform.
    """
    cdef cnp.int64_t[::1] arr = np.ascontiguousarray(arrival_sites,
                                                     dtype=np.int64)
    cdef cnp.int64_t[::1] srv = np.ascontiguousarray(service_sites,
                                                     dtype=np.int64)
    cdef cnp.float64_t[::1] uni = np.ascontiguousarray(uniforms,
                                                       dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(arr.shape[0],
                                                         dtype=np.int64)
    cdef long* tree = <long*>calloc(L + 1, sizeof(long))
    cdef char* freeflag = <char*>calloc(L, sizeof(char))
    if tree == NULL or freeflag == NULL:
        if tree != NULL:
            cfree(tree)
        if freeflag != NULL:
            cfree(freeflag)
        raise MemoryError()
    cdef long total = 0
    cdef int log2n = 0
    while (1 << log2n) < L + 1:
        log2n += 1
    cdef Py_ssize_t i
    cdef int a, chosen
    cdef long R, j, after, rank
    cdef Py_ssize_t ptr = 0
    try:
        for i in range(srv.shape[0]):
            freeflag[srv[i]] = 1
            fen_add(tree, L, <int>srv[i], 1)
            total += 1
        for i in range(arr.shape[0]):
            a = <int>arr[i]
            if freeflag[a]:
                chosen = a
            else:
                R = total
                j = choose_rank(uni[ptr], q, R)
                ptr += 1
                after = total - fen_prefix(tree, a)
                if j <= after:
                    rank = fen_prefix(tree, a) + j
                else:
                    rank = j - after
                chosen = fen_select(tree, L, log2n, rank)
            freeflag[chosen] = 0
            fen_add(tree, L, chosen, -1)
            total -= 1
            out[i] = chosen
    finally:
        cfree(tree)
        cfree(freeflag)
    return out
