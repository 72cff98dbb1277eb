"""Lowering circuits to a space-time error propagation graph.

Every boundary ``i`` (the instant after the gates and noise of layer ``i``)
holds ``k = alpha * n`` slots. Base slots ``[0, 2n)`` are the X/Z error
locations of each qubit (X of qubit ``q`` at ``2q``, Z at ``2q + 1``). At
correlation level 1 the slots ``[2n, 3n)`` are Y locations and ``[3n, 4n)``
hold the XZ/ZX nodes of the CX gates of layer ``i``; level 2 adds the
XY/YX/YY/YZ/ZY nodes of each CX in ``[4n, 7n)``. Correlated nodes point at
base (or level-1) slots of the same boundary, so their error class is the XOR
of the components'.

Measurement ``j`` owns the leaf node ``l * k + j``. Leaves carry the detector
bits and are never traversed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Detector, Layer, NoiseOp, Observable

SENTINEL = 0xFFFFFFFF
MAX_NODES = SENTINEL  # node ids must stay below the sentinel

# Pauli codes: bit 0 = X component, bit 1 = Z component.
I, X, Z, Y = 0, 1, 2, 3
PAULI_NAME = {I: "I", X: "X", Z: "Z", Y: "Y"}
_PAULI_CODE = {v: k for k, v in PAULI_NAME.items()}


class CorrelationLevel(enum.IntEnum):
    L0 = 0
    L1 = 1
    L2 = 2

    @property
    def alpha(self) -> int:
        return (2, 4, 7)[self]


def _pair_table():
    rows = {
        0: ("IX", "IZ", "XI", "XX", "ZI", "ZZ"),
        1: ("IY", "XZ", "YI", "ZX"),
        2: ("XY", "YX", "YY", "YZ", "ZY"),
    }
    return [(_PAULI_CODE[s[0]], _PAULI_CODE[s[1]], lvl) for lvl, names in rows.items() for s in names]


# (pauli on first target, pauli on second target, lowest level that keeps it)
TWO_QUBIT_TERMS = _pair_table()
SINGLE_QUBIT_TERMS = [(X, 0), (Z, 0), (Y, 1)]

# Position of a correlated CX node relative to the CX's block, keyed by
# (control pauli, target pauli).
_L1_CX_SLOT = {(X, Z): 0, (Z, X): 1}
_L2_CX_SLOT = {(X, Y): 0, (Y, X): 1, (Y, Y): 2, (Y, Z): 3, (Z, Y): 4}


def alpha(level: CorrelationLevel | int) -> int:
    return CorrelationLevel(level).alpha


def slot_layout(level: CorrelationLevel | int, n: int) -> list[str]:
    """Names of the ``alpha * n`` slots of one boundary.

    Per-CX slots are named by CX position within the adjacent layer (``cx0``
    is the first CX); slots that can never be used are ``"unused"``.
    """
    level = CorrelationLevel(level)
    if n < 1:
        raise ValueError("slot_layout needs n >= 1")
    names: list[str] = []
    for q in range(n):
        names += [f"X({q})", f"Z({q})"]
    if level >= 1:
        names += [f"Y({q})" for q in range(n)]
        n_cx = n // 2
        for c in range(n_cx):
            names += [f"XZ(cx{c})", f"ZX(cx{c})"]
        names += ["unused"] * (n - 2 * n_cx)
    if level >= 2:
        for c in range(n // 2):
            names += [f"{s}(cx{c})" for s in ("XY", "YX", "YY", "YZ", "ZY")]
        names += ["unused"] * (3 * n - 5 * (n // 2))
    assert len(names) == level.alpha * n
    return names


def subpasses(level: CorrelationLevel | int, n: int) -> list[tuple[int, int]]:
    """Slot ranges processed in order within one boundary."""
    level = CorrelationLevel(level)
    out = [(0, 2 * n)]
    if level >= 1:
        out.append((2 * n, 4 * n))
    if level >= 2:
        out.append((4 * n, 7 * n))
    return out


# ---------------------------------------------------------------------------
# Noise decomposition


@dataclass(frozen=True)
class NoiseTerm:
    """One independent Pauli error (or measurement flip) with its probability.

    ``paulis`` lists ``(qubit, pauli_code)`` pairs placed at ``boundary``;
    ``measurement`` is set instead for classical measurement flips.
    """

    boundary: int
    paulis: tuple[tuple[int, int], ...]
    probability: float
    measurement: int | None = None

    def label(self) -> str:
        if self.measurement is not None:
            return f"flip(m{self.measurement})"
        return "".join(f"{PAULI_NAME[p]}{q}" for q, p in self.paulis) + f"@{self.boundary}"


@dataclass
class NoiseTerms:
    """Column-oriented table of :class:`NoiseTerm` rows.

    Single-qubit terms have ``qb == -1``; measurement flips have ``meas >= 0``
    and ``qa == -1``.
    """

    boundary: np.ndarray
    qa: np.ndarray
    pa: np.ndarray
    qb: np.ndarray
    pb: np.ndarray
    meas: np.ndarray
    prob: np.ndarray

    def __len__(self) -> int:
        return len(self.prob)

    def term(self, i: int) -> NoiseTerm:
        if self.meas[i] >= 0:
            return NoiseTerm(int(self.boundary[i]), (), float(self.prob[i]), int(self.meas[i]))
        paulis = [(int(self.qa[i]), int(self.pa[i]))]
        if self.qb[i] >= 0:
            paulis.append((int(self.qb[i]), int(self.pb[i])))
        return NoiseTerm(int(self.boundary[i]), tuple(paulis), float(self.prob[i]))

    def terms(self) -> list[NoiseTerm]:
        return [self.term(i) for i in range(len(self))]

    @classmethod
    def concat(cls, parts: list["NoiseTerms"]) -> "NoiseTerms":
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in _TERM_FIELDS))

    @classmethod
    def empty(cls) -> "NoiseTerms":
        ints = [np.zeros(0, np.int64) for _ in range(6)]
        return cls(*ints, np.zeros(0, np.float64))


_TERM_FIELDS = ("boundary", "qa", "pa", "qb", "pb", "meas", "prob")


def _block(boundary, qa, pa, qb, pb, meas, prob) -> NoiseTerms:
    size = np.size(qa) if np.ndim(qa) else np.size(meas)

    def full(v):
        return np.asarray(v, dtype=np.int64).ravel() if np.ndim(v) else np.full(size, v, dtype=np.int64)

    return NoiseTerms(
        full(boundary), full(qa), full(pa), full(qb), full(pb), full(meas),
        np.asarray(prob, dtype=np.float64).ravel() if np.ndim(prob) else np.full(size, prob, dtype=np.float64),
    )


def _op_terms(op: NoiseOp, level: CorrelationLevel, boundary: int) -> list[NoiseTerms]:
    # Terms are listed Pauli-major: all targets for the first retained Pauli, then the next.
    t = np.asarray(op.targets, dtype=np.int64)
    p = op.probability
    if op.name == "X_ERROR":
        return [_block(boundary, t, X, -1, I, -1, p)]
    if op.name == "Z_ERROR":
        return [_block(boundary, t, Z, -1, I, -1, p)]
    if op.name == "DEPOLARIZE1":
        kept = np.array([pauli for pauli, lvl in SINGLE_QUBIT_TERMS if lvl <= level], dtype=np.int64)
        qa = np.tile(t, len(kept))
        return [_block(boundary, qa, np.repeat(kept, len(t)), -1, I, -1, p / 3)]
    if op.name == "DEPOLARIZE2":
        a, b = t[0::2], t[1::2]
        kept = np.array([(pa, pb) for pa, pb, lvl in TWO_QUBIT_TERMS if lvl <= level], dtype=np.int64)
        pa, pb = kept[:, :1], kept[:, 1:]
        qa = np.where(pa == I, b, a)
        qb = np.where((pa == I) | (pb == I), -1, b)
        pa_out = np.where(pa == I, pb, pa) + 0 * a
        pb_out = np.where(pa == I, I, pb) * (qb >= 0)
        return [_block(boundary, qa, pa_out, qb, pb_out, -1, p / 15)]
    raise ValueError(f"unsupported noise channel {op.name!r}")


def decompose_noise(op: NoiseOp, level: CorrelationLevel | int, boundary: int = 0) -> list[NoiseTerm]:
    """Independent error terms retained from ``op`` at ``level``.

    ``DEPOLARIZE1(p)`` gives X and Z with ``p/3`` (plus Y from level 1);
    ``DEPOLARIZE2(p)`` gives each retained two-qubit Pauli with ``p/15``.
    """
    level = CorrelationLevel(level)
    return NoiseTerms.concat(_op_terms(op, level, boundary)).terms()


def circuit_noise_terms(c: Circuit, level: CorrelationLevel | int) -> NoiseTerms:
    """Every error term of ``c`` at ``level``; noise of layer ``i`` sits at boundary ``i``."""
    level = CorrelationLevel(level)
    parts: list[NoiseTerms] = []
    for i, layer in enumerate(c.layers):
        for op in layer.noise:
            parts.extend(_op_terms(op, level, i))
        flips = layer.meas_flips
        if flips:
            meas = np.array([j for j, _ in flips], dtype=np.int64)
            prob = np.array([p for _, p in flips], dtype=np.float64)
            blk = _block(i, np.full(len(meas), -1), I, -1, I, meas, 0.0)
            blk.prob = prob
            parts.append(blk)
    return NoiseTerms.concat(parts)


# ---------------------------------------------------------------------------
# The graph


@dataclass(frozen=True)
class ErrorSource:
    components: tuple[int, ...]
    probability: float


@dataclass
class Stepg:
    """Layered propagation graph plus the error sources placed on it.

    ``successors`` packs the two successor ids of node ``u`` into one 64-bit
    word: the first in the low 32 bits, the second in the high 32 bits, with
    ``0xFFFFFFFF`` marking an absent successor. Sources are stored as
    ``comp0``/``comp1`` node ids (``comp1 == -1`` for single-component
    sources) with their probabilities.
    """

    level: CorrelationLevel
    n: int
    l: int
    k: int
    num_measurements: int
    successors: np.ndarray
    comp0: np.ndarray
    comp1: np.ndarray
    prob: np.ndarray
    terms: NoiseTerms
    detectors: tuple[Detector, ...]
    observables: tuple[Observable, ...]

    @property
    def D(self) -> int:
        return len(self.detectors)

    @property
    def O(self) -> int:  # noqa: E743
        return len(self.observables)

    @property
    def num_nodes(self) -> int:
        return self.l * self.k

    @property
    def num_rows(self) -> int:
        return self.l * self.k + self.num_measurements

    @property
    def num_sources(self) -> int:
        return len(self.prob)

    def node(self, boundary: int, slot: int) -> int:
        return boundary * self.k + slot

    def leaf(self, measurement: int) -> int:
        return self.l * self.k + measurement

    def unpack(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.successors
        return (s & np.uint64(SENTINEL)).astype(np.uint32), (s >> np.uint64(32)).astype(np.uint32)

    def successors_of(self, u: int) -> tuple[int, ...]:
        word = int(self.successors[u])
        return tuple(v for v in (word & SENTINEL, word >> 32) if v != SENTINEL)

    def source(self, i: int) -> ErrorSource:
        comps = (int(self.comp0[i]),) if self.comp1[i] < 0 else (int(self.comp0[i]), int(self.comp1[i]))
        return ErrorSource(comps, float(self.prob[i]))

    def sources(self) -> list[ErrorSource]:
        return [self.source(i) for i in range(self.num_sources)]

    def subpasses(self) -> list[tuple[int, int]]:
        return subpasses(self.level, self.n)

    def dump_edges(self) -> str:
        """Text edge list ``node -> succ0 succ1`` (``-`` for absent)."""
        lo, hi = self.unpack()
        lines = []
        for u in range(self.num_nodes):
            a = "-" if lo[u] == SENTINEL else str(lo[u])
            b = "-" if hi[u] == SENTINEL else str(hi[u])
            lines.append(f"{u} -> {a} {b}")
        return "\n".join(lines) + ("\n" if lines else "")


class LoweringError(ValueError):
    pass


IDLE, GATE_H, CX_CTRL, CX_TARG, GATE_R, GATE_M, GATE_MR = range(7)
_KIND = {"H": GATE_H, "R": GATE_R, "M": GATE_M, "MR": GATE_MR}


def _roles(layer: Layer, n: int):
    kind = np.zeros(n, dtype=np.int8)
    partner = np.arange(n, dtype=np.int64)
    meas = np.full(n, -1, dtype=np.int64)
    cx: list[tuple[int, int]] = []
    m = layer.measure_start
    for g in layer.gates:
        if g.name == "CX":
            pairs = g.pairs
            ctl = [c for c, _ in pairs]
            tgt = [t for _, t in pairs]
            kind[ctl], kind[tgt] = CX_CTRL, CX_TARG
            partner[ctl], partner[tgt] = tgt, ctl
            cx.extend(pairs)
        elif g.name in _KIND:
            targets = list(g.targets)
            kind[targets] = _KIND[g.name]
            if g.name in ("M", "MR"):
                meas[targets] = np.arange(m, m + len(targets))
                m += len(targets)
        else:
            raise LoweringError(f"unsupported gate {g.name!r}")
    return kind, partner, meas, cx


@dataclass
class _LayerRoles:
    kind: np.ndarray  # (l, n) gate role of each qubit
    partner: np.ndarray  # (l, n) CX partner, or the qubit itself
    meas: np.ndarray  # (l, n) measurement index, or -1
    cx_layer: np.ndarray  # one entry per CX gate in the circuit
    cx_index: np.ndarray  # position of the CX within its layer
    cx_ctl: np.ndarray
    cx_tgt: np.ndarray

    @classmethod
    def of(cls, c: Circuit) -> "_LayerRoles":
        n = c.num_qubits
        per = [_roles(layer, n) for layer in c.layers]
        cx_layer, cx_index, cx_ctl, cx_tgt = [], [], [], []
        for i, r in enumerate(per):
            cx_layer += [i] * len(r[3])
            cx_index += range(len(r[3]))
            cx_ctl += [a for a, _ in r[3]]
            cx_tgt += [b for _, b in r[3]]
        stack = lambda j, dt: (np.stack([r[j] for r in per]) if per else np.zeros((0, n), dt))  # noqa: E731
        arr = lambda v: np.asarray(v, dtype=np.int64)  # noqa: E731
        return cls(
            stack(0, np.int8), stack(1, np.int64), stack(2, np.int64),
            arr(cx_layer), arr(cx_index), arr(cx_ctl), arr(cx_tgt),
        )


def _slot(boundary, qubit, pauli, n, k):
    """Node id of a single-qubit Pauli (X, Z or Y) at ``boundary``."""
    base = boundary * k
    return np.where(
        pauli == X, base + 2 * qubit,
        np.where(pauli == Z, base + 2 * qubit + 1, base + 2 * n + qubit),
    )


def _cx_slot_offsets(level: CorrelationLevel, n: int) -> np.ndarray:
    """Slot offset of correlated CX nodes indexed by ``4*pc + pt``; -1 if none."""
    offset = np.full(16, -1, dtype=np.int64)
    if level >= 1:
        for (pc, pt), off in _L1_CX_SLOT.items():
            offset[4 * pc + pt] = 3 * n + off
    if level >= 2:
        for (pc, pt), off in _L2_CX_SLOT.items():
            offset[4 * pc + pt] = 4 * n + off
    return offset


def _cx_node(boundary, j, offset, n, k):
    stride = np.where(offset >= 4 * n, 5, 2)
    return boundary * k + offset + stride * j


def lower(c: Circuit, level: CorrelationLevel | int) -> Stepg:
    """Build the propagation graph and error-source table of ``c``.

    Propagation from boundary ``i`` through the gates of layer ``i + 1``:
    idle keeps the Pauli; H swaps X and Z; CX sends X on the control to X on
    both qubits and Z on the target to Z on both; R absorbs both; M sends X
    to the measurement leaf and onward, absorbing Z; MR sends X only to the
    leaf. The last boundary has no successors.
    """
    level = CorrelationLevel(level)
    n = c.num_qubits
    l = c.num_layers
    k = level.alpha * n
    total = l * k + c.num_measurements
    if total >= MAX_NODES:
        raise LoweringError(f"circuit needs {total} nodes; the 32-bit index space holds {MAX_NODES - 1}")

    lo = np.full((l, k), SENTINEL, dtype=np.int64)
    hi = np.full((l, k), SENTINEL, dtype=np.int64)
    leaf0 = l * k
    q = np.arange(n, dtype=np.int64)
    roles = _LayerRoles.of(c)

    if l > 1:
        kind, partner, meas = roles.kind[1:], roles.partner[1:], roles.meas[1:]
        nxt = (np.arange(1, l, dtype=np.int64) * k)[:, None]
        x_same = nxt + 2 * q
        z_same = x_same + 1
        leaf = leaf0 + meas
        is_ = {v: kind == v for v in (IDLE, GATE_H, CX_CTRL, CX_TARG, GATE_M, GATE_MR)}
        lo[:-1, 0 : 2 * n : 2] = np.select(
            [is_[IDLE], is_[GATE_H], is_[CX_CTRL], is_[CX_TARG], is_[GATE_M], is_[GATE_MR]],
            [x_same, z_same, x_same, x_same, leaf, leaf],
            SENTINEL,
        )
        hi[:-1, 0 : 2 * n : 2] = np.select([is_[CX_CTRL], is_[GATE_M]], [nxt + 2 * partner, x_same], SENTINEL)
        lo[:-1, 1 : 2 * n : 2] = np.select(
            [is_[IDLE], is_[GATE_H], is_[CX_CTRL], is_[CX_TARG]],
            [z_same, x_same, z_same, z_same],
            SENTINEL,
        )
        hi[:-1, 1 : 2 * n : 2] = np.select([is_[CX_TARG]], [nxt + 2 * partner + 1], SENTINEL)
    if level >= 1 and l > 0:
        base = (np.arange(l, dtype=np.int64) * k)[:, None]
        lo[:, 2 * n : 3 * n] = base + 2 * q
        hi[:, 2 * n : 3 * n] = base + 2 * q + 1
        lo, hi = lo.reshape(-1), hi.reshape(-1)
        offsets = _cx_slot_offsets(level, n)
        b, j = roles.cx_layer, roles.cx_index
        for code in np.flatnonzero(offsets >= 0):
            pc, pt = divmod(int(code), 4)
            u = _cx_node(b, j, offsets[code], n, k)
            lo[u] = _slot(b, roles.cx_ctl, pc, n, k)
            hi[u] = _slot(b, roles.cx_tgt, pt, n, k)

    lo = lo.reshape(-1).astype(np.uint64)
    hi = hi.reshape(-1).astype(np.uint64)
    successors = lo | (hi << np.uint64(32))
    terms = circuit_noise_terms(c, level)
    comp0, comp1 = _source_components(terms, roles, n, l, k, level)
    return Stepg(
        level=level, n=n, l=l, k=k, num_measurements=c.num_measurements,
        successors=successors, comp0=comp0, comp1=comp1, prob=terms.prob.copy(),
        terms=terms, detectors=c.detectors, observables=c.observables,
    )


def _source_components(terms: NoiseTerms, roles: _LayerRoles, n, l, k, level):
    comp0 = np.full(len(terms), -1, dtype=np.int64)
    comp1 = np.full(len(terms), -1, dtype=np.int64)
    is_meas = terms.meas >= 0
    comp0[is_meas] = l * k + terms.meas[is_meas]
    pauli = ~is_meas
    comp0[pauli] = _slot(terms.boundary[pauli], terms.qa[pauli], terms.pa[pauli], n, k)
    pair = pauli & (terms.qb >= 0)
    comp1[pair] = _slot(terms.boundary[pair], terms.qb[pair], terms.pb[pair], n, k)
    if level == 0 or not pair.any():
        return comp0, comp1

    # Correlated two-qubit terms on a CX pair use that CX's dedicated node;
    # XX and ZZ (and terms on idle pairs) stay two-component.
    cx_index = np.full((l, n), -1, dtype=np.int64)
    cx_index[roles.cx_layer, roles.cx_ctl] = roles.cx_index
    cx_index[roles.cx_layer, roles.cx_tgt] = roles.cx_index
    offsets = _cx_slot_offsets(level, n)

    idx = np.flatnonzero(pair)
    b, qa, qb = terms.boundary[idx], terms.qa[idx], terms.qb[idx]
    pa, pb = terms.pa[idx], terms.pb[idx]
    role = roles.kind[b, qa]
    on_cx = (roles.partner[b, qa] == qb) & ((role == CX_CTRL) | (role == CX_TARG))
    swapped = role == CX_TARG
    pc = np.where(swapped, pb, pa)
    pt = np.where(swapped, pa, pb)
    off = offsets[4 * pc + pt]
    use = on_cx & (off >= 0)
    node = _cx_node(b, cx_index[b, qa], off, n, k)
    comp0[idx[use]] = node[use]
    comp1[idx[use]] = -1
    return comp0, comp1
