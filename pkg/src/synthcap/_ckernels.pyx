# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def sequence_loglik(codewords, seqs, logw):
    """out[s, c] = sum_t logw[codewords[c, t], seqs[s, t]]."""
    cdef const long long[:, ::1] cw = np.ascontiguousarray(codewords, dtype=np.int64)
    cdef const long long[:, ::1] sq = np.ascontiguousarray(seqs, dtype=np.int64)
    cdef const double[:, ::1] lw = np.ascontiguousarray(logw, dtype=np.float64)
    cdef Py_ssize_t S = sq.shape[0], C = cw.shape[0], n = sq.shape[1]
    out = np.zeros((S, C))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t s, c, t
    cdef double acc
    with nogil:
        for s in range(S):
            for c in range(C):
                acc = 0.0
                for t in range(n):
                    acc = acc + lw[cw[c, t], sq[s, t]]
                o[s, c] = acc
    return out


def batch_tv(rows, target):
    """Half-L1 distance of every row of ``rows`` to ``target``."""
    cdef const double[:, ::1] r = np.ascontiguousarray(rows, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(target, dtype=np.float64)
    cdef Py_ssize_t K = r.shape[0], d = r.shape[1], i, k
    out = np.zeros(K)
    cdef double[::1] o = out
    cdef double acc
    with nogil:
        for k in range(K):
            acc = 0.0
            for i in range(d):
                acc = acc + fabs(r[k, i] - q[i])
            o[k] = 0.5 * acc
    return out
