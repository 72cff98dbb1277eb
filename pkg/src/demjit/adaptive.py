"""Adaptive concatenated-code experiments with per-shot DEM compilation.

The outer code is a rotated surface code of even distance ``d``. Each pair of
outer data qubits is stored in one [[4,2,2]] Iceberg block, whose two logical
qubits are the pair. Every round measures the inner Iceberg checks of all
blocks; outer checks run only where the inner difference syndrome (current
XOR previous inner outcomes) shows activity, plus on refresh rounds. Each
shot's executed circuit is assembled as it is simulated and compiled to a DEM
at correlation level 0.

Physical layout: block ``b`` owns data qubits ``6b .. 6b+3``, a Z-check
ancilla ``6b+4`` (Z on all four) and an X-check ancilla ``6b+5``. Outer check
``i`` uses ancilla ``6B + i``. Logical 1 of a block has X = X0 X1 and
Z = Z0 Z2; logical 2 has X = X0 X2 and Z = Z0 Z1. Qubit 0 is shared by all
four logical operators.

Simulation keeps two Pauli frames: sampled errors, and the inner corrections
applied so far. Their XOR gives the raw outcomes that drive triggers and
corrections. Reported detector values come from the error frame alone, which
is what the compiled DEM describes. Reference outcomes are taken to be all
zero, i.e. blocks start in their code space.
"""

from __future__ import annotations

import csv
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .circuit import Circuit, CircuitBuilder, GateOp
from .dem import Dem
from .frames import FrameSimulator
from .generators import NoiseModel, SurfaceLayout
from .pipeline import compile_dem

BLOCK_SIZE = 6
# Physical data offsets of each logical operator, shared qubit first.
LOGICAL_X = {1: (0, 1), 2: (0, 2)}
LOGICAL_Z = {1: (0, 2), 2: (0, 1)}


class LayoutError(ValueError):
    pass


def partner(r: int, c: int, d: int) -> tuple[int, int]:
    """Outer data qubit stored in the same Iceberg block as ``(r, c)``."""
    if not (0 <= r < d and 0 <= c < d):
        raise ValueError(f"({r}, {c}) outside a {d}x{d} lattice")
    return d - 1 - r, (c + 2) % d


@dataclass
class IcebergLayout:
    d: int
    outer: SurfaceLayout
    blocks: list[tuple[int, int]]  # outer data qubits (logical 1, logical 2) per block
    block_of: dict[int, tuple[int, int]] = field(default_factory=dict)  # outer qubit -> (block, logical)

    def __post_init__(self):
        if not self.block_of:
            for b, (q1, q2) in enumerate(self.blocks):
                self.block_of[q1] = (b, 1)
                self.block_of[q2] = (b, 2)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def num_checks(self) -> int:
        return len(self.outer.checks)

    @property
    def num_qubits(self) -> int:
        return BLOCK_SIZE * self.num_blocks + self.num_checks

    def data(self, b: int) -> list[int]:
        return [BLOCK_SIZE * b + i for i in range(4)]

    def z_ancilla(self, b: int) -> int:
        return BLOCK_SIZE * b + 4

    def x_ancilla(self, b: int) -> int:
        return BLOCK_SIZE * b + 5

    def shared_qubit(self, b: int) -> int:
        return BLOCK_SIZE * b

    def check_ancilla(self, i: int) -> int:
        return BLOCK_SIZE * self.num_blocks + i

    def logical(self, q: int, basis: str) -> list[int]:
        """Physical support of the ``basis`` logical of outer data qubit ``q``."""
        b, which = self.block_of[q]
        offsets = (LOGICAL_X if basis == "X" else LOGICAL_Z)[which]
        return [BLOCK_SIZE * b + o for o in offsets]

    def checks_on_block(self, b: int) -> list[int]:
        qs = set(self.blocks[b])
        return [i for i in range(self.num_checks) if qs & self.outer.supports(i)]

    def validate(self) -> None:
        """Raise :class:`LayoutError` unless all three pairing constraints hold."""
        n = self.d * self.d
        seen = [q for pair in self.blocks for q in pair]
        if sorted(seen) != list(range(n)):
            raise LayoutError("pairing is not a perfect matching of the outer data qubits")
        for b, (q1, q2) in enumerate(self.blocks):
            for i in range(self.num_checks):
                if {q1, q2} <= self.outer.supports(i):
                    raise LayoutError(f"pair {(q1, q2)} of block {b} shares outer check {i}")
        for basis in ("Z", "X"):
            idx = self.outer.indices(basis)
            for t in range(4):
                touched = [self.block_of[q][0] for i in idx if (q := self.outer.checks[i].support[t]) is not None]
                dup = {b for b in touched if touched.count(b) > 1}
                if dup:
                    b = min(dup)
                    raise LayoutError(
                        f"pair {self.blocks[b]} of block {b} is used twice in {basis}-check step {t}"
                    )


def build_layout(d: int) -> IcebergLayout:
    """Pair every outer data qubit with its partner, scanning in row-major order."""
    if d < 2 or d % 2:
        raise LayoutError(f"distance {d}: an odd number of data qubits cannot be paired")
    paired: set[tuple[int, int]] = set()
    blocks = []
    for r in range(d):
        for c in range(d):
            p = partner(r, c, d)
            if (r, c) in paired or p in paired:
                continue
            paired |= {(r, c), p}
            blocks.append((r * d + c, p[0] * d + p[1]))
    layout = IcebergLayout(d, SurfaceLayout(d), blocks)
    layout.validate()
    return layout


def trigger_set(diff_syndrome: np.ndarray, layout: IcebergLayout, full: bool = False) -> list[int]:
    """Outer checks to run: those touching a block with a nonzero difference syndrome.

    ``diff_syndrome`` has one row per block (any number of columns, e.g. the
    Z and X inner checks). ``full`` selects every check.
    """
    if full:
        return list(range(layout.num_checks))
    diff = np.asarray(diff_syndrome, dtype=bool).reshape(layout.num_blocks, -1)
    out: set[int] = set()
    for b in np.flatnonzero(diff.any(axis=1)):
        out.update(layout.checks_on_block(int(b)))
    return sorted(out)


def inner_correct(z_syndrome: np.ndarray, x_syndrome: np.ndarray, layout: IcebergLayout) -> list[tuple[int, str]]:
    """Corrections ``(qubit, pauli)`` for raw inner outcomes.

    A flipped Z-check (an X error) gets an X on the block's shared qubit; a
    flipped X-check gets a Z.
    """
    out = []
    for b in range(layout.num_blocks):
        if z_syndrome[b]:
            out.append((layout.shared_qubit(b), "X"))
        if x_syndrome[b]:
            out.append((layout.shared_qubit(b), "Z"))
    return out


def per_round_rate(R: float, d: int) -> float:
    """Per-round logical error rate of a ``d``-round experiment with total rate ``R``."""
    if not 0.0 <= R <= 0.5:
        raise ValueError(f"logical error rate {R} outside [0, 0.5]")
    if d < 1:
        raise ValueError("need at least one round")
    if d == 1:
        return R
    return 0.5 * (1.0 - (1.0 - 2.0 * R) ** (1.0 / d))


# ---------------------------------------------------------------------------
# Hardware schedule shared by the adaptive and static circuits


def _inner_layers(layout: IcebergLayout) -> list[list[GateOp]]:
    B = layout.num_blocks
    xa = tuple(layout.x_ancilla(b) for b in range(B))
    layers = [[GateOp("H", xa)]]
    for t in range(4):
        targets: list[int] = []
        for b in range(B):
            data = layout.data(b)
            targets += [data[t], layout.z_ancilla(b), layout.x_ancilla(b), data[(t + 2) % 4]]
        layers.append([GateOp("CX", tuple(targets))])
    layers.append([GateOp("H", xa)])
    layers.append([GateOp("MR", tuple(q for b in range(B) for q in (layout.z_ancilla(b), layout.x_ancilla(b))))])
    return layers


def _outer_layers(layout: IcebergLayout, checks: Iterable[int]) -> list[list[GateOp]]:
    checks = sorted(checks)
    if not checks:
        return []
    outer = layout.outer
    xs = [i for i in checks if outer.checks[i].basis == "X"]
    zs = [i for i in checks if outer.checks[i].basis == "Z"]
    layers: list[list[GateOp]] = []
    if xs:
        layers.append([GateOp("H", tuple(layout.check_ancilla(i) for i in xs))])
    for basis, group in (("Z", zs), ("X", xs)):
        for t in range(4):
            for part in range(2):
                targets: list[int] = []
                for i in group:
                    q = outer.checks[i].support[t]
                    if q is None:
                        continue
                    phys = layout.logical(q, basis)[part]
                    a = layout.check_ancilla(i)
                    targets += [phys, a] if basis == "Z" else [a, phys]
                if targets:
                    layers.append([GateOp("CX", tuple(targets))])
    if xs:
        layers.append([GateOp("H", tuple(layout.check_ancilla(i) for i in xs))])
    layers.append([GateOp("MR", tuple(layout.check_ancilla(i) for i in checks))])
    return layers


def _final_layer(layout: IcebergLayout) -> list[GateOp]:
    return [GateOp("M", tuple(q for b in range(layout.num_blocks) for q in layout.data(b)))]


def _final_parities(layout: IcebergLayout, final: list[int]) -> tuple[list[list[int]], dict[int, list[int]], list[int]]:
    """Final-readout parities: inner Z check per block, outer Z check, logical Z."""
    meas_of = {q: final[4 * b + i] for b in range(layout.num_blocks) for i, q in enumerate(layout.data(b))}
    inner = [[meas_of[q] for q in layout.data(b)] for b in range(layout.num_blocks)]
    outer = {
        i: [meas_of[p] for q in sorted(layout.outer.supports(i)) for p in layout.logical(q, "Z")]
        for i in layout.outer.indices("Z")
    }
    logical = [meas_of[p] for q in layout.outer.logical_z() for p in layout.logical(q, "Z")]
    return inner, outer, logical


# ---------------------------------------------------------------------------
# Static circuit


def gen_concatenated(d: int, rounds: int, noise: NoiseModel | None = None) -> Circuit:
    """Concatenated memory experiment running every check every round.

    Z-type detectors only: each inner Z check and outer Z check is compared
    with its previous round (alone in the first round) and closed out against
    the final data readout.
    """
    noise = noise or NoiseModel()
    layout = build_layout(d)
    n = layout.num_qubits
    B = layout.num_blocks
    zchecks = layout.outer.indices("Z")
    b = CircuitBuilder()
    _emit(b, noise, n, [GateOp("R", tuple(range(n)))])
    prev_inner: list[int] | None = None
    prev_outer: dict[int, int] | None = None
    for _ in range(rounds):
        for gates in _inner_layers(layout):
            meas = _emit(b, noise, n, gates)
        inner = meas[0::2]
        for blk in range(B):
            b.detector([inner[blk]] if prev_inner is None else [inner[blk], prev_inner[blk]])
        prev_inner = inner
        for gates in _outer_layers(layout, range(layout.num_checks)):
            meas = _emit(b, noise, n, gates)
        outer = {i: meas[i] for i in zchecks}
        for i in zchecks:
            b.detector([outer[i]] if prev_outer is None else [outer[i], prev_outer[i]])
        prev_outer = outer
    final = _emit(b, noise, n, _final_layer(layout))
    f_inner, f_outer, logical = _final_parities(layout, final)
    for blk in range(B):
        b.detector([prev_inner[blk], *f_inner[blk]])
    for i in zchecks:
        b.detector([prev_outer[i], *f_outer[i]])
    b.observable(0, logical)
    return b.build(n)


def _emit(b: CircuitBuilder, noise: NoiseModel, n: int, gates: list[GateOp]) -> list[int]:
    return b.layer(*noise.apply(gates, n))


# ---------------------------------------------------------------------------
# Adaptive shots


@dataclass
class DetectorTracker:
    """Current and previous measurement index of each tracked check.

    A detector is instantiated for a check exactly when the two differ, i.e.
    when the check has run since its last detector.
    """

    num_checks: int
    current: list[int | None] = field(default_factory=list)
    previous: list[int | None] = field(default_factory=list)
    count: int = 0

    def __post_init__(self):
        self.current = [None] * self.num_checks
        self.previous = [None] * self.num_checks

    def record(self, check: int, measurement: int) -> None:
        self.current[check] = measurement

    def instantiate(self, builder: CircuitBuilder, checks: Iterable[int]) -> list[int]:
        made = []
        for i in checks:
            cur, prev = self.current[i], self.previous[i]
            if cur == prev:
                continue
            made.append(builder.detector([cur] if prev is None else [cur, prev]))
            self.previous[i] = cur
            self.count += 1
        return made


@dataclass
class AdaptiveConfig:
    d: int = 4
    rounds: int | None = None  # defaults to d
    refresh: int | None = None  # defaults to d // 2
    p: float = 0.001
    shots: int = 1
    seed: int = 0

    @property
    def num_rounds(self) -> int:
        return self.d if self.rounds is None else self.rounds

    @property
    def refresh_period(self) -> int:
        return max(1, self.d // 2) if self.refresh is None else self.refresh

    def full_round(self, r: int) -> bool:
        return r == 0 or r == self.num_rounds - 1 or r % self.refresh_period == 0


@dataclass
class ShotRecord:
    shot: int
    triggered: list[int]  # outer checks executed per round
    detectors: np.ndarray  # reported detector values
    observables: np.ndarray
    num_hyperedges: int | None
    circuit: Circuit = field(repr=False, compare=False)
    dem: Dem | None = field(default=None, repr=False)
    compile_ns: int = field(default=0, compare=False)  # timing, excluded from equality

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    def weight_histogram(self) -> dict[int, int]:
        if self.dem is None:
            return {}
        return dict(sorted(Counter(len(h.detectors) for h in self.dem.hyperedges).items()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShotRecord):
            return NotImplemented
        return (
            self.shot == other.shot
            and self.triggered == other.triggered
            and np.array_equal(self.detectors, other.detectors)
            and np.array_equal(self.observables, other.observables)
            and self.num_hyperedges == other.num_hyperedges
            and str(self.dem) == str(other.dem)
        )


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, shot]))


class _Shot:
    """One shot in progress: circuit under construction plus the two frames."""

    def __init__(self, layout: IcebergLayout, noise: NoiseModel, rng: np.random.Generator):
        self.layout = layout
        self.noise = noise
        self.n = layout.num_qubits
        self.builder = CircuitBuilder()
        self.errors = FrameSimulator(self.n, 1, rng)
        self.corrections = FrameSimulator(self.n, 1, rng)

    def layer(self, gates: list[GateOp]) -> list[int]:
        meas = _emit(self.builder, self.noise, self.n, gates)
        layer = self.builder.layers[-1]
        self.errors.apply_gates(layer)
        self.errors.apply_noise(layer)
        self.corrections.apply_gates(layer)
        return meas

    def raw(self, m: int) -> bool:
        return bool(self.errors.records[m][0] ^ self.corrections.records[m][0])

    def correct(self, fixes: list[tuple[int, str]]) -> None:
        for q, pauli in fixes:
            if pauli == "X":
                self.corrections.x[q] ^= True
            else:
                self.corrections.z[q] ^= True


def run_shot(
    cfg: AdaptiveConfig,
    rng: np.random.Generator | None = None,
    *,
    shot: int = 0,
    layout: IcebergLayout | None = None,
    compile: bool = True,
) -> ShotRecord:
    """Simulate one adaptive shot and (optionally) compile its DEM at level 0."""
    layout = layout or build_layout(cfg.d)
    rng = rng if rng is not None else shot_rng(cfg.seed, shot)
    s = _Shot(layout, NoiseModel(cfg.p), rng)
    B = layout.num_blocks
    zchecks = layout.outer.indices("Z")
    tracker = DetectorTracker(B + len(zchecks))
    outer_slot = {i: B + j for j, i in enumerate(zchecks)}
    prev_raw = np.zeros((B, 2), dtype=bool)
    triggered: list[int] = []

    s.layer([GateOp("R", tuple(range(s.n)))])
    for r in range(cfg.num_rounds):
        for gates in _inner_layers(layout):
            meas = s.layer(gates)
        raw = np.array([[s.raw(meas[2 * b]), s.raw(meas[2 * b + 1])] for b in range(B)], dtype=bool)
        for blk in range(B):
            tracker.record(blk, meas[2 * blk])
        tracker.instantiate(s.builder, range(B))
        checks = trigger_set(raw ^ prev_raw, layout, full=cfg.full_round(r))
        s.correct(inner_correct(raw[:, 0], raw[:, 1], layout))
        prev_raw = raw
        meas = []
        for gates in _outer_layers(layout, checks):
            meas = s.layer(gates)
        for pos, i in enumerate(checks):
            if i in outer_slot:
                tracker.record(outer_slot[i], meas[pos])
        tracker.instantiate(s.builder, (outer_slot[i] for i in zchecks))
        triggered.append(len(checks))

    final = s.layer(_final_layer(layout))
    f_inner, f_outer, logical = _final_parities(layout, final)
    for blk in range(B):
        s.builder.detector([tracker.current[blk], *f_inner[blk]])
    for i in zchecks:
        s.builder.detector([tracker.current[outer_slot[i]], *f_outer[i]])
    s.builder.observable(0, logical)
    circuit = s.builder.build(s.n)

    records = s.errors.record_matrix()[:, 0]
    dets = np.array([np.bitwise_xor.reduce(records[sorted(d.measurements)]) for d in circuit.detectors], dtype=bool)
    obs = np.array([np.bitwise_xor.reduce(records[sorted(o.measurements)]) for o in circuit.observables], dtype=bool)
    dem = None
    compile_ns = 0
    if compile:
        t0 = time.perf_counter_ns()
        dem = compile_dem(circuit, 0)
        compile_ns = time.perf_counter_ns() - t0
    return ShotRecord(
        shot=shot, triggered=triggered, detectors=dets, observables=obs,
        num_hyperedges=None if dem is None else len(dem), circuit=circuit, dem=dem, compile_ns=compile_ns,
    )


def run_shots(cfg: AdaptiveConfig, *, workers: int = 1, compile: bool = True) -> list[ShotRecord]:
    """All ``cfg.shots`` shots; each seeded from ``(cfg.seed, shot)`` so order never matters."""
    layout = build_layout(cfg.d)

    def one(i: int) -> ShotRecord:
        return run_shot(cfg, shot_rng(cfg.seed, i), shot=i, layout=layout, compile=compile)

    if workers <= 1:
        return [one(i) for i in range(cfg.shots)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(cfg.shots)))


CSV_HEADER = ["shot", "triggered_per_round", "num_detectors", "num_hyperedges", "compile_ns", "weight_histogram"]


def write_csv(records: Iterable[ShotRecord], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        hist = ";".join(f"{k}:{v}" for k, v in rec.weight_histogram().items())
        w.writerow([
            rec.shot,
            ";".join(map(str, rec.triggered)),
            rec.num_detectors,
            "" if rec.num_hyperedges is None else rec.num_hyperedges,
            rec.compile_ns,
            hist,
        ])
