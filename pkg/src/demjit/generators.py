"""Memory-experiment circuits for repetition and rotated surface codes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .circuit import Circuit, CircuitBuilder, GateOp, NoiseOp


@dataclass(frozen=True)
class NoiseModel:
    """Circuit-level noise of strength ``p``.

    Single-qubit gates get depolarising noise ``p``, two-qubit gates ``p/10``,
    idle qubits ``p/10``; measurements flip with ``p`` and resets fail
    (leave an X) with ``p``. ``swap_gate_rates`` exchanges the two gate rates.
    """

    p: float = 0.0
    swap_gate_rates: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise strength {self.p} outside [0, 1]")

    @property
    def single(self) -> float:
        return self.p / 10 if self.swap_gate_rates else self.p

    @property
    def two(self) -> float:
        return self.p if self.swap_gate_rates else self.p / 10

    @property
    def measure(self) -> float:
        return self.p

    @property
    def reset(self) -> float:
        return self.p

    @property
    def idle(self) -> float:
        return self.p / 10

    def apply(self, gates: Sequence[GateOp], num_qubits: int) -> tuple[list[GateOp], list[NoiseOp]]:
        """Attach measurement flips to ``gates`` and list the layer's noise channels.

        Channels with zero probability are left out entirely.
        """
        out_gates: list[GateOp] = []
        noise: list[NoiseOp] = []
        busy: set[int] = set()

        def add(name: str, p: float, targets: Iterable[int]) -> None:
            targets = tuple(targets)
            if p > 0 and targets:
                noise.append(NoiseOp(name, p, targets))

        for g in gates:
            busy.update(g.targets)
            if g.name in ("M", "MR") and self.measure > 0:
                g = GateOp(g.name, g.targets, self.measure)
            out_gates.append(g)
            if g.name == "H":
                add("DEPOLARIZE1", self.single, g.targets)
            elif g.name == "CX":
                add("DEPOLARIZE2", self.two, g.targets)
            elif g.name in ("R", "MR"):
                add("X_ERROR", self.reset, g.targets)
        add("DEPOLARIZE1", self.idle, (q for q in range(num_qubits) if q not in busy))
        return out_gates, noise


def _layer(b: CircuitBuilder, noise: NoiseModel, n: int, gates: Iterable[GateOp]) -> list[int]:
    gates = [g for g in gates if g.targets]
    return b.layer(*noise.apply(gates, n))


def gen_repetition(
    d: int, rounds: int, noise: NoiseModel | None = None, *, final_readout: bool = True
) -> Circuit:
    """Bit-flip repetition code memory experiment.

    Data qubit ``i`` sits at ``2i`` and ancilla ``i`` (comparing data ``i`` and
    ``i+1``) at ``2i+1``. ``final_readout=False`` stops after the last round of
    ancilla measurements, with no data readout and no observable.
    """
    if d < 2 or rounds < 1:
        raise ValueError("need d >= 2 and rounds >= 1")
    noise = noise or NoiseModel()
    n = 2 * d - 1
    data = list(range(0, n, 2))
    anc = list(range(1, n, 2))
    b = CircuitBuilder()
    _layer(b, noise, n, [GateOp("R", tuple(range(n)))])
    prev: list[int] | None = None
    for _ in range(rounds):
        _layer(b, noise, n, [GateOp("CX", tuple(q for i in range(d - 1) for q in (data[i], anc[i])))])
        _layer(b, noise, n, [GateOp("CX", tuple(q for i in range(d - 1) for q in (data[i + 1], anc[i])))])
        meas = _layer(b, noise, n, [GateOp("MR", tuple(anc))])
        for i, m in enumerate(meas):
            b.detector([m] if prev is None else [m, prev[i]])
        prev = meas
    if final_readout:
        final = _layer(b, noise, n, [GateOp("M", tuple(data))])
        for i in range(d - 1):
            b.detector([final[i], final[i + 1], prev[i]])
        b.observable(0, [final[0]])
    return b.build(n)


@dataclass(frozen=True)
class Check:
    basis: str  # "X" or "Z"
    corner: tuple[int, int]  # top-left plaquette corner, may be -1
    support: tuple[int | None, ...]  # data qubit per CX step, None when absent


@dataclass
class SurfaceLayout:
    """Rotated surface code patch with 4-step CNOT schedules.

    Data ``(r, c)`` has index ``r*d + c``; ancilla of check ``i`` is ``d*d + i``.
    A plaquette with top-left corner ``(pr, pc)`` is X-type when ``pr + pc``
    is even; weight-2 X checks sit on the top and bottom edges, Z checks on
    the left and right edges.
    """

    d: int
    checks: list[Check] = field(default_factory=list)

    # Corner offsets (NW, NE, SW, SE) and the order each basis visits them.
    _CORNERS = ((0, 0), (0, 1), (1, 0), (1, 1))
    _ORDER = {"X": (0, 1, 2, 3), "Z": (0, 2, 1, 3)}

    def __post_init__(self):
        d = self.d
        if d < 2:
            raise ValueError("surface code needs d >= 2")
        if self.checks:
            return
        for pr in range(-1, d):
            for pc in range(-1, d):
                basis = "X" if (pr + pc) % 2 == 0 else "Z"
                interior = 0 <= pr < d - 1 and 0 <= pc < d - 1
                edge_x = basis == "X" and pr in (-1, d - 1) and 0 <= pc < d - 1
                edge_z = basis == "Z" and pc in (-1, d - 1) and 0 <= pr < d - 1
                if not (interior or edge_x or edge_z):
                    continue
                support = []
                for corner in self._ORDER[basis]:
                    r, c = pr + self._CORNERS[corner][0], pc + self._CORNERS[corner][1]
                    support.append(r * d + c if 0 <= r < d and 0 <= c < d else None)
                self.checks.append(Check(basis, (pr, pc), tuple(support)))

    @property
    def num_data(self) -> int:
        return self.d * self.d

    @property
    def num_qubits(self) -> int:
        return self.num_data + len(self.checks)

    def ancilla(self, i: int) -> int:
        return self.num_data + i

    def data_qubit(self, r: int, c: int) -> int:
        return r * self.d + c

    def indices(self, basis: str) -> list[int]:
        return [i for i, ch in enumerate(self.checks) if ch.basis == basis]

    def supports(self, i: int) -> set[int]:
        return {q for q in self.checks[i].support if q is not None}

    def step(self, t: int) -> list[tuple[int, int]]:
        """CX (control, target) pairs of schedule step ``t``."""
        pairs = []
        for i, ch in enumerate(self.checks):
            q = ch.support[t]
            if q is None:
                continue
            a = self.ancilla(i)
            pairs.append((a, q) if ch.basis == "X" else (q, a))
        return pairs

    def logical_z(self) -> list[int]:
        return [self.data_qubit(0, c) for c in range(self.d)]

    def logical_x(self) -> list[int]:
        return [self.data_qubit(r, 0) for r in range(self.d)]


def gen_surface(
    d: int, rounds: int, noise: NoiseModel | None = None, *, basis: str = "Z", z_only: bool = False
) -> Circuit:
    """Z-basis memory experiment on the rotated surface code.

    ``z_only`` keeps only Z-type detectors, the detectors that stay meaningful
    when X/Z correlations are dropped.
    """
    if basis != "Z":
        raise ValueError("only Z-basis memory experiments are generated")
    if rounds < 1:
        raise ValueError("need rounds >= 1")
    noise = noise or NoiseModel()
    lay = SurfaceLayout(d)
    n = lay.num_qubits
    xa = tuple(lay.ancilla(i) for i in lay.indices("X"))
    allanc = tuple(lay.ancilla(i) for i in range(len(lay.checks)))
    b = CircuitBuilder()
    _layer(b, noise, n, [GateOp("R", tuple(range(n)))])
    prev: list[int] | None = None
    for _ in range(rounds):
        _layer(b, noise, n, [GateOp("H", xa)])
        for t in range(4):
            _layer(b, noise, n, [GateOp("CX", tuple(q for pair in lay.step(t) for q in pair))])
        _layer(b, noise, n, [GateOp("H", xa)])
        meas = _layer(b, noise, n, [GateOp("MR", allanc)])
        for i, ch in enumerate(lay.checks):
            if prev is None:
                if ch.basis == "Z":
                    b.detector([meas[i]])
            elif ch.basis == "Z" or not z_only:
                b.detector([meas[i], prev[i]])
        prev = meas
    final = _layer(b, noise, n, [GateOp("M", tuple(range(lay.num_data)))])
    for i in lay.indices("Z"):
        b.detector([prev[i], *(final[q] for q in lay.supports(i))])
    b.observable(0, [final[q] for q in lay.logical_z()])
    return b.build(n)
