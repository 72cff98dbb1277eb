"""Layered syndrome-measurement circuits and their text format.

The text format is a small Stim-like subset, one instruction per line::

    R 0 1 2
    X_ERROR(0.001) 0 1 2
    TICK
    CX 0 1
    DEPOLARIZE2(0.001) 0 1
    TICK
    M(0.001) 1
    DETECTOR rec[-1]

``TICK`` separates layers. Within a layer the gates act first and the noise
channels written in that layer act afterwards.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

GATES = ("H", "CX", "R", "M", "MR")
NOISE = ("X_ERROR", "Z_ERROR", "DEPOLARIZE1", "DEPOLARIZE2")
MEASURE_GATES = ("M", "MR")


class CircuitError(ValueError):
    """Raised for malformed or invalid circuits.

    ``line`` and ``column`` are 1-based and refer to the source text when the
    error came from :func:`parse_circuit`.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class GateOp:
    """A gate acting on ``targets``; CX targets are flattened control/target pairs.

    ``flip`` is the classical flip probability of a measurement (``M(p)``),
    ``None`` when the measurement was written without an argument.
    """

    name: str
    targets: tuple[int, ...]
    flip: float | None = None

    @property
    def pairs(self) -> list[tuple[int, int]]:
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t), 2)]


@dataclass(frozen=True)
class NoiseOp:
    name: str
    probability: float
    targets: tuple[int, ...]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t), 2)]


@dataclass(frozen=True)
class Layer:
    """Gates applied in parallel, followed by noise.

    ``measure_start`` is the absolute index of the first measurement recorded
    in this layer; measurements are numbered in target order.
    """

    gates: tuple[GateOp, ...] = ()
    noise: tuple[NoiseOp, ...] = ()
    measure_start: int = 0

    @property
    def measured_qubits(self) -> list[int]:
        return [q for g in self.gates if g.name in MEASURE_GATES for q in g.targets]

    @property
    def num_measurements(self) -> int:
        return sum(len(g.targets) for g in self.gates if g.name in MEASURE_GATES)

    @property
    def meas_flips(self) -> list[tuple[int, float]]:
        """``(absolute measurement index, probability)`` for noisy measurements."""
        out = []
        m = self.measure_start
        for g in self.gates:
            if g.name not in MEASURE_GATES:
                continue
            for _ in g.targets:
                if g.flip is not None:
                    out.append((m, g.flip))
                m += 1
        return out

    def busy_qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.targets}


@dataclass(frozen=True)
class Detector:
    id: int
    measurements: frozenset[int]


@dataclass(frozen=True)
class Observable:
    id: int
    measurements: frozenset[int]


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    layers: tuple[Layer, ...]
    num_measurements: int
    detectors: tuple[Detector, ...] = ()
    observables: tuple[Observable, ...] = ()

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_observables(self) -> int:
        return len(self.observables)

    def measurement_qubits(self) -> list[int]:
        """Qubit measured by each absolute measurement index."""
        out: list[int] = []
        for layer in self.layers:
            out.extend(layer.measured_qubits)
        return out

    def without_noise(self) -> "Circuit":
        layers = tuple(
            Layer(
                gates=tuple(GateOp(g.name, g.targets) for g in layer.gates),
                measure_start=layer.measure_start,
            )
            for layer in self.layers
        )
        return Circuit(self.num_qubits, layers, self.num_measurements, self.detectors, self.observables)

    def __str__(self) -> str:
        return serialize_circuit(self)


@dataclass
class Violation:
    """First invariant violation found by :func:`validate_layers`."""

    message: str
    layer: int | None = None

    def __str__(self) -> str:
        if self.layer is None:
            return self.message
        return f"layer {self.layer}: {self.message}"


def validate_layers(c: Circuit) -> Violation | None:
    """Check every circuit invariant; return the first violation or ``None``."""
    n = c.num_qubits
    m = 0
    for i, layer in enumerate(c.layers):
        if layer.measure_start != m:
            return Violation(f"measure_start {layer.measure_start} != {m}", i)
        seen: set[int] = set()
        cx_pairs: set[frozenset[int]] = set()
        for g in layer.gates:
            if g.name not in GATES:
                return Violation(f"unsupported gate {g.name!r}", i)
            if g.name == "CX":
                if len(g.targets) % 2:
                    return Violation("CX needs an even number of targets", i)
                for a, b in g.pairs:
                    if a == b:
                        return Violation(f"CX control equals target ({a})", i)
                    cx_pairs.add(frozenset((a, b)))
            if g.flip is not None and (g.name not in MEASURE_GATES or not 0.0 <= g.flip <= 1.0):
                return Violation(f"bad measurement flip on {g.name}", i)
            for q in g.targets:
                if not 0 <= q < n:
                    return Violation(f"qubit {q} out of range (n={n})", i)
                if q in seen:
                    return Violation(f"qubit {q} used by more than one gate", i)
                seen.add(q)
        for op in layer.noise:
            if op.name not in NOISE:
                return Violation(f"unsupported noise channel {op.name!r}", i)
            if not 0.0 <= op.probability <= 1.0:
                return Violation(f"{op.name} probability {op.probability} outside [0, 1]", i)
            for q in op.targets:
                if not 0 <= q < n:
                    return Violation(f"qubit {q} out of range (n={n})", i)
            if op.name == "DEPOLARIZE2":
                if len(op.targets) % 2:
                    return Violation("DEPOLARIZE2 needs target pairs", i)
                for a, b in op.pairs:
                    if a == b:
                        return Violation(f"DEPOLARIZE2 on a repeated qubit ({a})", i)
                    if frozenset((a, b)) not in cx_pairs and (a in seen or b in seen):
                        return Violation(f"DEPOLARIZE2 {a} {b} is neither a CX pair nor an idle pair", i)
        m += layer.num_measurements
    if m != c.num_measurements:
        return Violation(f"num_measurements {c.num_measurements} != {m}")
    for kind, items in (("detector", c.detectors), ("observable", c.observables)):
        for idx, item in enumerate(items):
            if item.id != idx:
                return Violation(f"{kind} ids are not dense at {idx}")
            if kind == "detector" and not item.measurements:
                return Violation(f"detector {idx} has no measurements")
            for j in item.measurements:
                if not 0 <= j < m:
                    return Violation(f"{kind} {idx} references measurement {j} of {m}")
    return None


# ---------------------------------------------------------------------------
# Parsing

_LINE = re.compile(r"^([A-Z_][A-Z0-9_]*)(?:\(([^)]*)\))?((?:\s+\S+)*)\s*$")
_REC = re.compile(r"^rec\[-(\d+)\]$")


def _parse_float(text: str, lineno: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CircuitError(f"bad numeric argument {text!r}", lineno, col) from None
    if not 0.0 <= value <= 1.0:
        raise CircuitError(f"probability {value} outside [0, 1]", lineno, col)
    return value


class _LayerAcc:
    def __init__(self, measure_start: int):
        self.gates: list[GateOp] = []
        self.noise: list[NoiseOp] = []
        self.busy: dict[int, int] = {}
        self.measure_start = measure_start

    def freeze(self) -> Layer:
        return Layer(tuple(self.gates), tuple(self.noise), self.measure_start)


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text into a validated, layered :class:`Circuit`.

    ``rec[-k]`` references are resolved against the number of measurements
    seen so far, so the same token means different records at different
    positions. Raises :class:`CircuitError` with the offending line/column.
    """
    layers: list[Layer] = []
    acc = _LayerAcc(0)
    num_meas = 0
    max_qubit = -1
    detectors: list[Detector] = []
    obs_sets: dict[int, set[int]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        line = line.strip()
        match = _LINE.match(line)
        if match is None:
            raise CircuitError(f"syntax error: {line!r}", lineno, indent + 1)
        name, arg, rest = match.group(1), match.group(2), match.group(3)
        tokens = rest.split()
        arg_col = indent + len(name) + 2
        offset = indent + match.start(3) + 1
        tok_col = [offset + m.start() for m in re.finditer(r"\S+", rest)]

        if name == "TICK":
            if arg is not None or tokens:
                raise CircuitError("TICK takes no arguments", lineno, indent + 1)
            layers.append(acc.freeze())
            acc = _LayerAcc(num_meas)
            continue

        if name in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            if name == "DETECTOR" and arg is not None:
                # Coordinates are not supported.
                raise CircuitError("DETECTOR takes no arguments", lineno, arg_col)
            recs: set[int] = set()
            for tok, col in zip(tokens, tok_col):
                rm = _REC.match(tok)
                if rm is None:
                    raise CircuitError(f"expected rec[-k], got {tok!r}", lineno, col)
                k = int(rm.group(1))
                if k < 1 or k > num_meas:
                    raise CircuitError(
                        f"unresolved record reference {tok} ({num_meas} measurements so far)", lineno, col
                    )
                recs ^= {num_meas - k}
            if name == "DETECTOR":
                if not recs:
                    raise CircuitError("detector has no measurements", lineno, indent + 1)
                detectors.append(Detector(len(detectors), frozenset(recs)))
            else:
                if arg is None:
                    raise CircuitError("OBSERVABLE_INCLUDE needs an index", lineno, indent + 1)
                try:
                    idx = int(arg)
                except ValueError:
                    raise CircuitError(f"bad observable index {arg!r}", lineno, arg_col) from None
                if idx < 0:
                    raise CircuitError("negative observable index", lineno, arg_col)
                obs_sets.setdefault(idx, set()).symmetric_difference_update(recs)
            continue

        if name not in GATES and name not in NOISE:
            raise CircuitError(f"unsupported instruction {name!r}", lineno, indent + 1)

        qubits: list[int] = []
        for tok, col in zip(tokens, tok_col):
            if not tok.isdigit():
                raise CircuitError(f"expected qubit index, got {tok!r}", lineno, col)
            qubits.append(int(tok))
        if not qubits:
            raise CircuitError(f"{name} needs targets", lineno, indent + 1)
        if name in ("CX", "DEPOLARIZE2") and len(qubits) % 2:
            raise CircuitError(f"{name} needs an even number of targets", lineno, indent + 1)
        max_qubit = max(max_qubit, *qubits)

        if name in GATES:
            flip = None
            if arg is not None:
                if name not in MEASURE_GATES:
                    raise CircuitError(f"{name} takes no arguments", lineno, arg_col)
                flip = _parse_float(arg, lineno, arg_col)
            if name == "CX":
                for a, b in zip(qubits[::2], qubits[1::2]):
                    if a == b:
                        raise CircuitError(f"CX control equals target ({a})", lineno, indent + 1)
            for q, col in zip(qubits, tok_col):
                if q in acc.busy:
                    raise CircuitError(
                        f"qubit {q} already used in this layer (line {acc.busy[q]})", lineno, col
                    )
                acc.busy[q] = lineno
            acc.gates.append(GateOp(name, tuple(qubits), flip))
            if name in MEASURE_GATES:
                num_meas += len(qubits)
        else:
            if arg is None:
                raise CircuitError(f"{name} needs a probability", lineno, indent + 1)
            p = _parse_float(arg, lineno, arg_col)
            acc.noise.append(NoiseOp(name, p, tuple(qubits)))

    if acc.gates or acc.noise:
        layers.append(acc.freeze())

    observables = []
    if obs_sets:
        top = max(obs_sets)
        for i in range(top + 1):
            observables.append(Observable(i, frozenset(obs_sets.get(i, ()))))

    circuit = Circuit(max_qubit + 1, tuple(layers), num_meas, tuple(detectors), tuple(observables))
    violation = validate_layers(circuit)
    if violation is not None:
        raise CircuitError(str(violation))
    return circuit


# ---------------------------------------------------------------------------
# Serialization


def _fmt_prob(p: float) -> str:
    return repr(float(p))


def serialize_circuit(c: Circuit) -> str:
    """Render ``c`` in the text format; ``parse_circuit`` inverts it exactly."""
    # Annotations go after the layer holding their latest measurement, kept in
    # id order so that re-parsing assigns the same ids.
    layer_of_meas: list[int] = []
    for i, layer in enumerate(c.layers):
        layer_of_meas.extend([i] * layer.num_measurements)

    def placement(items: Sequence[Detector] | Sequence[Observable]) -> list[int]:
        out, floor = [], 0
        for item in items:
            last = max((layer_of_meas[j] for j in item.measurements), default=0)
            floor = max(floor, last)
            out.append(floor)
        return out

    det_at = placement(c.detectors)
    obs_at = placement(c.observables)
    lines: list[str] = []
    measured = 0
    for i, layer in enumerate(c.layers):
        if i:
            lines.append("TICK")
        for g in layer.gates:
            head = g.name if g.flip is None else f"{g.name}({_fmt_prob(g.flip)})"
            lines.append(head + " " + " ".join(map(str, g.targets)))
        for op in layer.noise:
            lines.append(f"{op.name}({_fmt_prob(op.probability)}) " + " ".join(map(str, op.targets)))
        measured += layer.num_measurements
        for det, at in zip(c.detectors, det_at):
            if at == i:
                recs = " ".join(f"rec[-{measured - j}]" for j in sorted(det.measurements, reverse=True))
                lines.append(f"DETECTOR {recs}")
        for obs, at in zip(c.observables, obs_at):
            if at == i:
                recs = " ".join(f"rec[-{measured - j}]" for j in sorted(obs.measurements, reverse=True))
                lines.append(f"OBSERVABLE_INCLUDE({obs.id}) {recs}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Programmatic construction


@dataclass
class CircuitBuilder:
    """Assemble a circuit layer by layer with absolute measurement indices.

    >>> b = CircuitBuilder()
    >>> b.layer([GateOp("R", (0,))])
    []
    >>> b.layer([GateOp("M", (0,))])
    [0]
    >>> b.detector([0])
    0
    """

    layers: list[Layer] = field(default_factory=list)
    detectors: list[Detector] = field(default_factory=list)
    observables: dict[int, set[int]] = field(default_factory=dict)
    num_measurements: int = 0
    num_qubits: int = 0

    def layer(self, gates: Iterable[GateOp], noise: Iterable[NoiseOp] = ()) -> list[int]:
        """Append a layer; returns the absolute indices of its measurements."""
        gates = tuple(gates)
        noise = tuple(noise)
        layer = Layer(gates, noise, self.num_measurements)
        for op in (*gates, *noise):
            if op.targets:
                self.num_qubits = max(self.num_qubits, max(op.targets) + 1)
        start = self.num_measurements
        self.num_measurements += layer.num_measurements
        self.layers.append(layer)
        return list(range(start, self.num_measurements))

    def detector(self, measurements: Iterable[int]) -> int:
        ms: set[int] = set()
        for j in measurements:
            ms ^= {j}
        self.detectors.append(Detector(len(self.detectors), frozenset(ms)))
        return len(self.detectors) - 1

    def observable(self, index: int, measurements: Iterable[int]) -> None:
        s = self.observables.setdefault(index, set())
        for j in measurements:
            s ^= {j}

    def build(self, num_qubits: int | None = None) -> Circuit:
        n = self.num_qubits if num_qubits is None else max(num_qubits, self.num_qubits)
        obs = ()
        if self.observables:
            obs = tuple(
                Observable(i, frozenset(self.observables.get(i, ())))
                for i in range(max(self.observables) + 1)
            )
        c = Circuit(n, tuple(self.layers), self.num_measurements, tuple(self.detectors), obs)
        violation = validate_layers(c)
        if violation is not None:
            raise CircuitError(str(violation))
        return c
