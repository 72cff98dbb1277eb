"""Batched Pauli-frame simulation of layered circuits.

A frame records, per shot, which X and Z flips a qubit carries relative to
the noiseless reference run. Measurements report whether the reference
outcome is flipped. Columns are shots (or, for the oracle, individual
injected errors).
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, Layer

# Two-qubit Pauli draws for DEPOLARIZE2: index 1..15 over (I, X, Z, Y)^2.
_P2_X0 = np.array([(i >> 2) & 1 for i in range(16)], dtype=bool)
_P2_Z0 = np.array([(i >> 3) & 1 for i in range(16)], dtype=bool)
_P2_X1 = np.array([i & 1 for i in range(16)], dtype=bool)
_P2_Z1 = np.array([(i >> 1) & 1 for i in range(16)], dtype=bool)


class FrameSimulator:
    """Propagate Pauli frames through layers, one column per shot.

    With ``gauge=True`` the Z part of the frame is randomised wherever it is
    physically meaningless (initial |0>, after resets and measurements); a
    detector that is not deterministic then shows random flips.
    """

    def __init__(self, num_qubits: int, shots: int, rng: np.random.Generator | None = None, gauge: bool = False):
        self.n = num_qubits
        self.shots = shots
        self.rng = rng if rng is not None else np.random.default_rng()
        self.gauge = gauge
        self.x = np.zeros((num_qubits, shots), dtype=bool)
        self.z = np.zeros((num_qubits, shots), dtype=bool)
        if gauge:
            self.z[:] = self.rng.random((num_qubits, shots)) < 0.5
        self.records: list[np.ndarray] = []

    @property
    def num_measurements(self) -> int:
        return len(self.records)

    def record_matrix(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.shots), dtype=bool)
        return np.array(self.records)

    def _scramble_z(self, qubits: list[int]) -> None:
        if self.gauge and qubits:
            self.z[qubits] = self.rng.random((len(qubits), self.shots)) < 0.5

    def apply_gates(self, layer: Layer) -> list[int]:
        """Apply the gates of ``layer``; returns indices of the new records."""
        x, z = self.x, self.z
        first = len(self.records)
        for g in layer.gates:
            t = list(g.targets)
            if g.name == "H":
                x[t], z[t] = z[t].copy(), x[t].copy()
            elif g.name == "CX":
                c, tg = t[0::2], t[1::2]
                x[tg] ^= x[c]
                z[c] ^= z[tg]
            elif g.name == "R":
                x[t] = False
                z[t] = False
                self._scramble_z(t)
            elif g.name in ("M", "MR"):
                for q in t:
                    self.records.append(x[q].copy())
                if g.name == "MR":
                    x[t] = False
                z[t] = False
                self._scramble_z(t)
            else:
                raise ValueError(f"unsupported gate {g.name!r}")
        return list(range(first, len(self.records)))

    def apply_noise(self, layer: Layer) -> None:
        """Sample the noise channels of ``layer`` (after its gates have run)."""
        rng = self.rng
        x, z = self.x, self.z
        S = self.shots
        m = layer.measure_start
        for g in layer.gates:
            if g.name not in ("M", "MR"):
                continue
            for _ in g.targets:
                if g.flip:
                    self.records[m] ^= rng.random(S) < g.flip
                m += 1
        for op in layer.noise:
            p = op.probability
            if p == 0:
                continue
            t = list(op.targets)
            if op.name == "X_ERROR":
                x[t] ^= rng.random((len(t), S)) < p
            elif op.name == "Z_ERROR":
                z[t] ^= rng.random((len(t), S)) < p
            elif op.name == "DEPOLARIZE1":
                hit = rng.random((len(t), S)) < p
                which = rng.integers(1, 4, size=(len(t), S))
                x[t] ^= hit & ((which & 1) == 1)
                z[t] ^= hit & ((which & 2) == 2)
            elif op.name == "DEPOLARIZE2":
                a, b = t[0::2], t[1::2]
                hit = rng.random((len(a), S)) < p
                which = rng.integers(1, 16, size=(len(a), S))
                x[a] ^= hit & _P2_X0[which]
                z[a] ^= hit & _P2_Z0[which]
                x[b] ^= hit & _P2_X1[which]
                z[b] ^= hit & _P2_Z1[which]
            else:
                raise ValueError(f"unsupported noise channel {op.name!r}")

    def run(self, c: Circuit, noise: bool = True) -> np.ndarray:
        """Run every layer of ``c``; returns the ``(measurements, shots)`` flips."""
        for layer in c.layers:
            self.apply_gates(layer)
            if noise:
                self.apply_noise(layer)
        return self.record_matrix()


def parities(records: np.ndarray, sets) -> np.ndarray:
    """XOR of the listed record rows for every set; shape ``(len(sets), shots)``."""
    out = np.zeros((len(sets), records.shape[1]), dtype=bool)
    for i, ms in enumerate(sets):
        for j in ms:
            out[i] ^= records[j]
    return out


def sample_detectors(
    c: Circuit, shots: int, *, seed: int | None = None, noise: bool = True, gauge: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``(detector flips, observable flips)``, each shaped ``(count, shots)``."""
    sim = FrameSimulator(c.num_qubits, shots, np.random.default_rng(seed), gauge=gauge)
    rec = sim.run(c, noise=noise)
    dets = parities(rec, [d.measurements for d in c.detectors])
    obs = parities(rec, [o.measurements for o in c.observables])
    return dets, obs
