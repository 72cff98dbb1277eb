# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: backward XOR traversal, signature gather, FNV-1 hashing."""

from cython.parallel cimport prange
from libc.stdint cimport int64_t, uint64_t

import numpy as np

cdef uint64_t SENTINEL = 0xFFFFFFFFULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL
cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL


cdef inline void _update(const uint64_t* succ, uint64_t* E, Py_ssize_t R,
                         Py_ssize_t W, Py_ssize_t u) noexcept nogil:
    cdef uint64_t word = succ[u]
    cdef uint64_t v = word & SENTINEL
    cdef uint64_t x = word >> 32
    cdef Py_ssize_t w
    if v != SENTINEL and x != SENTINEL:
        for w in range(W):
            E[w * R + u] = E[w * R + <Py_ssize_t>v] ^ E[w * R + <Py_ssize_t>x]
    elif v != SENTINEL:
        for w in range(W):
            E[w * R + u] = E[w * R + <Py_ssize_t>v]
    elif x != SENTINEL:
        for w in range(W):
            E[w * R + u] = E[w * R + <Py_ssize_t>x]
    else:
        for w in range(W):
            E[w * R + u] = 0


def backward(const uint64_t[::1] succ, uint64_t[:, ::1] eec, Py_ssize_t l, Py_ssize_t k,
             const int64_t[:, ::1] passes, int threads=1):
    """Fill every node row of ``eec`` (shape ``(W, rows)``) in place."""
    cdef Py_ssize_t W = eec.shape[0]
    cdef Py_ssize_t R = eec.shape[1]
    cdef Py_ssize_t P = passes.shape[0]
    cdef Py_ssize_t i, p, u, lo, hi
    if W == 0 or l == 0:
        return
    cdef uint64_t* E = &eec[0, 0]
    cdef const uint64_t* S = &succ[0]
    with nogil:
        for i in range(l - 1, -1, -1):
            for p in range(P):
                lo = i * k + passes[p, 0]
                hi = i * k + passes[p, 1]
                if threads > 1:
                    for u in prange(lo, hi, num_threads=threads, schedule="static"):
                        _update(S, E, R, W, u)
                else:
                    for u in range(lo, hi):
                        _update(S, E, R, W, u)


def gather(const uint64_t[:, ::1] eec, const int64_t[::1] comp0, const int64_t[::1] comp1):
    """XOR of the one or two component rows of every source; shape ``(W, S)``."""
    cdef Py_ssize_t W = eec.shape[0]
    cdef Py_ssize_t n = comp0.shape[0]
    out = np.zeros((W, n), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    cdef Py_ssize_t w, s
    cdef int64_t a, b
    with nogil:
        for w in range(W):
            for s in range(n):
                a = comp0[s]
                b = comp1[s]
                if b < 0:
                    o[w, s] = eec[w, a]
                else:
                    o[w, s] = eec[w, a] ^ eec[w, b]
    return out


def fnv1_64(const uint64_t[:, ::1] sig):
    """FNV-1 over each column's words, word 0 first, low byte first."""
    cdef Py_ssize_t W = sig.shape[0]
    cdef Py_ssize_t n = sig.shape[1]
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t w, s, b
    cdef uint64_t h, word
    with nogil:
        for s in range(n):
            h = FNV_OFFSET
            for w in range(W):
                word = sig[w, s]
                for b in range(8):
                    h = h * FNV_PRIME
                    h = h ^ ((word >> (8 * b)) & 0xFF)
            o[s] = h
    return out
