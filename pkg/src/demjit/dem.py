"""Deduplication of error signatures into a canonical detector error model."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels

FNV1_64_OFFSET = 0xCBF29CE484222325
FNV1_64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def merge_prob(a: float, b: float) -> float:
    """Probability that exactly one of two independent events fires."""
    return a * (1 - b) + b * (1 - a)


def fnv1_64(data: bytes) -> int:
    h = FNV1_64_OFFSET
    for byte in data:
        h = (h * FNV1_64_PRIME) & _MASK64
        h ^= byte
    return h


def hash_signature(sig: Sequence[int] | np.ndarray) -> int:
    """64-bit FNV-1 of the signature words, word 0 first, low byte first."""
    data = b"".join(int(w).to_bytes(8, "little") for w in sig)
    return fnv1_64(data)


class Hyperedge(NamedTuple):
    """One error class: the detectors and observables it flips, and its probability.

    Tuples order lexicographically on ``(detectors, observables)``; a canonical
    :class:`Dem` never holds two edges with the same key, so the probability
    never decides the order.
    """

    detectors: tuple[int, ...]
    observables: tuple[int, ...]
    probability: float

    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.detectors, self.observables)

    def __str__(self) -> str:
        targets = [f"D{d}" for d in self.detectors] + [f"L{o}" for o in self.observables]
        return f"error({float(self.probability)!r}) " + " ".join(targets)


@dataclass(frozen=True)
class Dem:
    num_detectors: int
    num_observables: int
    hyperedges: tuple[Hyperedge, ...] = ()

    def __len__(self) -> int:
        return len(self.hyperedges)

    def as_dict(self) -> dict[tuple, float]:
        return {h.key(): h.probability for h in self.hyperedges}

    def __str__(self) -> str:
        return serialize_dem(self)


def canonical(num_detectors: int, num_observables: int, edges: dict[tuple, float]) -> Dem:
    """Build a :class:`Dem` from ``{(dets, obs): probability}``, dropping empty keys."""
    hs = [Hyperedge(d, o, p) for (d, o), p in edges.items() if d or o]
    hs.sort()
    return Dem(num_detectors, num_observables, tuple(hs))


def reduce(
    sigs: np.ndarray,
    probs: np.ndarray,
    num_detectors: int,
    num_observables: int,
    *,
    hasher: Callable[[np.ndarray], np.ndarray] | None = None,
    backend: str | None = None,
) -> Dem:
    """Group identical signatures and merge their probabilities.

    ``sigs`` has shape ``(W, S)`` (one column per source). Sources are sorted
    by (hash, signature words, probability), so equal signatures form runs
    even when hashes collide, and each run folds in a canonical order: the
    result does not depend on the input order. ``hasher`` replaces the FNV-1
    hash (used to test collision handling).
    """
    W, S = sigs.shape
    probs = np.asarray(probs, dtype=np.float64)
    if S == 0 or W == 0:
        return Dem(num_detectors, num_observables)
    sigs = np.ascontiguousarray(sigs)
    keep = np.flatnonzero(np.bitwise_or.reduce(sigs, axis=0))
    sigs = np.ascontiguousarray(sigs[:, keep])
    probs = probs[keep]
    if sigs.shape[1] == 0:
        return Dem(num_detectors, num_observables)
    keys = hasher(sigs) if hasher is not None else _kernels.get(backend).fnv1_64(sigs)

    # Sorting by (hash, probability) suffices unless two signatures collide;
    # then the signature words join the sort key.
    order = np.lexsort([probs, keys])
    ks, ss = keys[order], sigs[:, order]
    new = np.ones(len(order), dtype=bool)
    new[1:] = ks[1:] != ks[:-1]
    run_start = np.maximum.accumulate(np.where(new, np.arange(len(order)), 0))
    if not np.array_equal(ss, ss[:, run_start]):
        order = np.lexsort([probs] + [sigs[w] for w in range(W - 1, -1, -1)] + [keys])
        ks, ss = keys[order], sigs[:, order]
        new[1:] = (ks[1:] != ks[:-1]) | np.any(ss[:, 1:] != ss[:, :-1], axis=0)
    ps = probs[order]
    starts = np.flatnonzero(new)
    sizes = np.diff(np.append(starts, len(order)))

    merged = ps[starts].copy()
    for t in range(1, int(sizes.max())):
        grp = np.flatnonzero(sizes > t)
        b = ps[starts[grp] + t]
        a = merged[grp]
        merged[grp] = a * (1 - b) + b * (1 - a)

    return Dem(num_detectors, num_observables, tuple(_unpack_edges(ss[:, starts], merged, num_detectors)))


def _unpack_edges(uniq: np.ndarray, probs: np.ndarray, D: int) -> list[Hyperedge]:
    """Hyperedges of the packed signatures ``uniq`` (shape ``(W, U)``), canonically ordered."""
    W, U = uniq.shape
    # Only nonzero words are expanded to bits; signatures are sparse.
    rows, word = np.nonzero(np.ascontiguousarray(uniq.T))
    vals = uniq[word, rows].astype("<u8").view(np.uint8).reshape(-1, 8)
    hit, bit = np.nonzero(np.unpackbits(vals, axis=1, bitorder="little").view(bool))
    rows, cols = rows[hit], 64 * word[hit] + bit
    is_det = cols < D
    dets, obs = _padded(rows[is_det], cols[is_det], U), _padded(rows[~is_det], cols[~is_det] - D, U)
    # Lexicographic order on (detector tuple, observable tuple); the -1 padding
    # sorts a tuple before its extensions.
    keys = np.concatenate([dets, obs], axis=1)
    order = np.lexsort(keys.T[::-1]) if keys.shape[1] else np.arange(U)
    det_ids = cols[is_det].tolist()
    obs_ids = (cols[~is_det] - D).tolist()
    db = np.searchsorted(rows[is_det], np.arange(U + 1)).tolist()
    ob = np.searchsorted(rows[~is_det], np.arange(U + 1)).tolist()
    p = probs.tolist()
    return [
        Hyperedge(tuple(det_ids[db[u] : db[u + 1]]), tuple(obs_ids[ob[u] : ob[u + 1]]), p[u])
        for u in order.tolist()
    ]


def _padded(rows: np.ndarray, cols: np.ndarray, U: int) -> np.ndarray:
    """Per-row column lists as a ``(U, max_len)`` matrix padded with -1."""
    counts = np.bincount(rows, minlength=U)
    width = int(counts.max()) if len(rows) else 0
    out = np.full((U, width), -1, dtype=np.int64)
    if len(rows):
        first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        out[rows, np.arange(len(rows)) - first[rows]] = cols
    return out


# ---------------------------------------------------------------------------
# Text format


def serialize_dem(d: Dem) -> str:
    """One ``error(P) D.. L..`` line per hyperedge in canonical order."""
    return "".join(f"{h}\n" for h in d.hyperedges)


class DemParseError(ValueError):
    pass


_ERROR_LINE = re.compile(r"^error\(([^)]*)\)((?:\s+[DL]\d+)+)\s*$")


def parse_dem(text: str, num_detectors: int | None = None, num_observables: int | None = None) -> Dem:
    """Read the ``error(...)`` subset written by :func:`serialize_dem`.

    Detector/observable counts default to one past the largest id seen.
    Repeated keys are merged with :func:`merge_prob`.
    """
    edges: dict[tuple, float] = {}
    max_d = max_o = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _ERROR_LINE.match(line)
        if m is None:
            raise DemParseError(f"line {lineno}: cannot parse {raw!r}")
        try:
            p = float(m.group(1))
        except ValueError:
            raise DemParseError(f"line {lineno}: bad probability {m.group(1)!r}") from None
        if not 0.0 <= p <= 1.0:
            raise DemParseError(f"line {lineno}: probability {p} outside [0, 1]")
        dets: set[int] = set()
        obs: set[int] = set()
        for tok in m.group(2).split():
            (dets if tok[0] == "D" else obs).symmetric_difference_update({int(tok[1:])})
        key = (tuple(sorted(dets)), tuple(sorted(obs)))
        if not dets and not obs:
            continue
        max_d = max([max_d, *dets])
        max_o = max([max_o, *obs])
        edges[key] = merge_prob(edges[key], p) if key in edges else p
    D = max_d + 1 if num_detectors is None else num_detectors
    O = max_o + 1 if num_observables is None else num_observables  # noqa: E741
    return canonical(D, O, edges)


@dataclass
class DemDiff:
    only_a: list[Hyperedge]
    only_b: list[Hyperedge]
    prob_mismatch: list[tuple[Hyperedge, Hyperedge]]

    @property
    def equal(self) -> bool:
        return not (self.only_a or self.only_b or self.prob_mismatch)

    def first(self) -> str:
        if self.only_a:
            return f"only in first: {self.only_a[0]}"
        if self.only_b:
            return f"only in second: {self.only_b[0]}"
        if self.prob_mismatch:
            a, b = self.prob_mismatch[0]
            return f"probability differs: {a} vs {b}"
        return "equal"

    def summary(self, a: Dem, b: Dem) -> str:
        return (
            f"{len(a)} vs {len(b)} hyperedges; {len(self.only_a)} only in first, "
            f"{len(self.only_b)} only in second, {len(self.prob_mismatch)} probability mismatches"
        )


def diff_dems(a: Dem, b: Dem, tolerance: float = 1e-12) -> DemDiff:
    da, db = a.as_dict(), b.as_dict()
    edges_a = {h.key(): h for h in a.hyperedges}
    edges_b = {h.key(): h for h in b.hyperedges}
    only_a = [edges_a[k] for k in sorted(da.keys() - db.keys())]
    only_b = [edges_b[k] for k in sorted(db.keys() - da.keys())]
    mismatch = [
        (edges_a[k], edges_b[k])
        for k in sorted(da.keys() & db.keys())
        if abs(da[k] - db[k]) > tolerance
    ]
    return DemDiff(only_a, only_b, mismatch)
