"""Error equivalence classes by backward traversal of the propagation graph."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .circuit import Detector, Observable
from .stepg import SENTINEL, Stepg


@dataclass
class EecMatrix:
    """Bit-packed class of every graph node and leaf.

    ``words`` has shape ``(W, rows)`` in C order, so word ``w`` of every row
    is contiguous: ``words.ravel()[w * rows + u]``. Bit ``b`` of a row is
    detector ``b`` for ``b < D`` and observable ``b - D`` beyond that.
    """

    words: np.ndarray
    num_detectors: int
    num_observables: int

    @classmethod
    def zeros(cls, rows: int, num_detectors: int, num_observables: int) -> "EecMatrix":
        width = num_detectors + num_observables
        W = (width + 63) // 64
        return cls(np.zeros((W, rows), dtype=np.uint64), num_detectors, num_observables)

    @classmethod
    def for_graph(cls, g: Stepg) -> "EecMatrix":
        return cls.zeros(g.num_rows, g.D, g.O)

    @property
    def W(self) -> int:
        return self.words.shape[0]

    @property
    def rows(self) -> int:
        return self.words.shape[1]

    @property
    def width(self) -> int:
        return self.num_detectors + self.num_observables

    def row(self, u: int) -> np.ndarray:
        return self.words[:, u].copy()

    def bits(self, u: int) -> set[int]:
        return words_to_bits(self.words[:, u])

    def flip(self, u: int, bit: int) -> None:
        self.words[bit // 64, u] ^= np.uint64(1) << np.uint64(bit % 64)


def words_to_bits(words: Iterable) -> set[int]:
    out = set()
    for w, word in enumerate(words):
        word = int(word)
        while word:
            low = word & -word
            out.add(64 * w + low.bit_length() - 1)
            word ^= low
    return out


def init_leaves(
    g: Stepg, detectors: Iterable[Detector], observables: Iterable[Observable], m: EecMatrix
) -> None:
    """XOR each detector's (and observable's) basis bit into its measurements' leaves."""
    D = m.num_detectors
    bits: list[int] = []
    meas: list[int] = []
    for det in detectors:
        bits += [det.id] * len(det.measurements)
        meas += det.measurements
    for obs in observables:
        bits += [D + obs.id] * len(obs.measurements)
        meas += obs.measurements
    if not meas:
        return
    j = np.asarray(meas, dtype=np.int64)
    bad = (j < 0) | (j >= g.num_measurements)
    if bad.any():
        raise ValueError(f"measurement {int(j[bad][0])} has no leaf")
    b = np.asarray(bits, dtype=np.int64)
    masks = np.left_shift(np.uint64(1), (b % 64).astype(np.uint64))
    # Unbuffered XOR so repeated (word, leaf) pairs accumulate.
    np.bitwise_xor.at(m.words, (b // 64, g.leaf(0) + j), masks)


def _passes(g: Stepg) -> np.ndarray:
    return np.asarray(g.subpasses(), dtype=np.int64).reshape(-1, 2)


def run_backward(
    g: Stepg,
    m: EecMatrix,
    *,
    backend: str | None = None,
    threads: int = 1,
    order_seed: int | None = None,
) -> None:
    """Compute every node's class as the XOR of its successors' classes.

    Boundaries are processed last to first; inside a boundary the base,
    level-1 and level-2 slot ranges run in that order because correlated
    nodes read base/level-1 nodes of their own boundary. Within one range
    the nodes are independent, so ``threads`` and ``order_seed`` (a shuffled
    node order, reference backend only) never change the result.
    """
    if backend == "reference":
        _backward_reference(g, m, order_seed)
        return
    kern = _kernels.get(backend)
    kern.backward(g.successors, m.words, g.l, g.k, _passes(g), threads)


def _backward_reference(g: Stepg, m: EecMatrix, order_seed: int | None) -> None:
    # Node-at-a-time transcription of the four-way successor case split.
    E = m.words
    rng = random.Random(order_seed) if order_seed is not None else None
    for i in range(g.l - 1, -1, -1):
        for lo, hi in g.subpasses():
            nodes = list(range(i * g.k + lo, i * g.k + hi))
            if rng is not None:
                rng.shuffle(nodes)
            for u in nodes:
                word = int(g.successors[u])
                v, w = word & SENTINEL, word >> 32
                if v != SENTINEL and w != SENTINEL:
                    E[:, u] = E[:, v] ^ E[:, w]
                elif v != SENTINEL:
                    E[:, u] = E[:, v]
                elif w != SENTINEL:
                    E[:, u] = E[:, w]
                else:
                    E[:, u] = 0


def source_signature(g: Stepg, m: EecMatrix, s: int) -> np.ndarray:
    """XOR of the component rows of source ``s`` (``W`` words)."""
    sig = m.words[:, g.comp0[s]].copy()
    if g.comp1[s] >= 0:
        sig ^= m.words[:, g.comp1[s]]
    return sig


def signatures(g: Stepg, m: EecMatrix, *, backend: str | None = None) -> np.ndarray:
    """Signatures of every source, shape ``(W, num_sources)``."""
    if m.W == 0 or g.num_sources == 0:
        return np.zeros((m.W, g.num_sources), dtype=np.uint64)
    return _kernels.get(backend).gather(m.words, g.comp0, g.comp1)


def compute_classes(g: Stepg, *, backend: str | None = None, threads: int = 1) -> EecMatrix:
    m = EecMatrix.for_graph(g)
    init_leaves(g, g.detectors, g.observables, m)
    run_backward(g, m, backend=backend, threads=threads)
    return m
