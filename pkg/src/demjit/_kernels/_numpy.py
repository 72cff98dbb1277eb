"""Pure numpy versions of the compiled kernels, same signatures."""

from __future__ import annotations

import numpy as np

SENTINEL = np.uint64(0xFFFFFFFF)
FNV_PRIME = np.uint64(0x100000001B3)
FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


def backward(succ, eec, l, k, passes, threads=1):
    if eec.shape[0] == 0 or l == 0:
        return
    v = succ & SENTINEL
    x = succ >> np.uint64(32)
    mv = np.where(v == SENTINEL, np.uint64(0), _ALL)
    mx = np.where(x == SENTINEL, np.uint64(0), _ALL)
    v = np.where(v == SENTINEL, 0, v).astype(np.intp)
    x = np.where(x == SENTINEL, 0, x).astype(np.intp)
    for i in range(l - 1, -1, -1):
        for lo, hi in passes:
            a, b = i * k + int(lo), i * k + int(hi)
            if a == b:
                continue
            eec[:, a:b] = (eec[:, v[a:b]] & mv[a:b]) ^ (eec[:, x[a:b]] & mx[a:b])


def gather(eec, comp0, comp1):
    out = eec[:, comp0].copy()
    two = comp1 >= 0
    out[:, two] ^= eec[:, comp1[two]]
    return out


def fnv1_64(sig):
    n = sig.shape[1]
    h = np.full(n, FNV_OFFSET, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for w in range(sig.shape[0]):
            word = sig[w]
            for b in range(8):
                h *= FNV_PRIME
                h ^= (word >> np.uint64(8 * b)) & np.uint64(0xFF)
    return h
