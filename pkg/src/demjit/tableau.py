"""Stabilizer tableau simulation (Aaronson-Gottesman) for noiseless reference runs.

Only used to confirm that generated circuits have detectors whose noiseless
value is exactly 0, which a frame simulator cannot see on its own.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit


class TableauSimulator:
    def __init__(self, n: int, rng: np.random.Generator | None = None):
        self.n = n
        self.rng = rng if rng is not None else np.random.default_rng()
        # Rows 0..n-1 destabilizers, n..2n-1 stabilizers, 2n scratch.
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros(2 * n + 1, dtype=np.uint8)
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1

    def h(self, a: int) -> None:
        x, z = self.x, self.z
        self.r ^= x[:, a] & z[:, a]
        x[:, a], z[:, a] = z[:, a].copy(), x[:, a].copy()

    def cx(self, a: int, b: int) -> None:
        x, z = self.x, self.z
        self.r ^= x[:, a] & z[:, b] & (x[:, b] ^ z[:, a] ^ 1)
        x[:, b] ^= x[:, a]
        z[:, a] ^= z[:, b]

    def _rowsum(self, h: int, i: int) -> None:
        x1, z1 = self.x[i].astype(np.int64), self.z[i].astype(np.int64)
        x2, z2 = self.x[h].astype(np.int64), self.z[h].astype(np.int64)
        g = np.where(
            (x1 == 1) & (z1 == 1), z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
        )
        total = (2 * int(self.r[h]) + 2 * int(self.r[i]) + int(g.sum())) % 4
        self.r[h] = 1 if total == 2 else 0
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(self, a: int) -> int:
        n = self.n
        hits = np.flatnonzero(self.x[n : 2 * n, a])
        if len(hits):
            p = n + int(hits[0])
            for i in np.flatnonzero(self.x[: 2 * n, a]):
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            self.r[p] = self.rng.integers(2)
            return int(self.r[p])
        s = 2 * n
        self.x[s] = 0
        self.z[s] = 0
        self.r[s] = 0
        for i in np.flatnonzero(self.x[:n, a]):
            self._rowsum(s, int(i) + n)
        return int(self.r[s])

    def reset(self, a: int) -> None:
        if self.measure(a):
            self.r ^= self.z[:, a]  # apply X

    def run(self, c: Circuit) -> list[int]:
        """Run the gates of ``c`` (noise ignored); returns measurement outcomes."""
        out: list[int] = []
        for layer in c.layers:
            for g in layer.gates:
                if g.name == "H":
                    for q in g.targets:
                        self.h(q)
                elif g.name == "CX":
                    for a, b in g.pairs:
                        self.cx(a, b)
                elif g.name == "R":
                    for q in g.targets:
                        self.reset(q)
                elif g.name == "M":
                    out.extend(self.measure(q) for q in g.targets)
                elif g.name == "MR":
                    for q in g.targets:
                        out.append(self.measure(q))
                        if out[-1]:
                            self.r ^= self.z[:, q]
        return out


def reference_detectors(c: Circuit, seed: int | None = None) -> list[int]:
    """Noiseless detector values of one tableau-simulated shot."""
    outcomes = TableauSimulator(c.num_qubits, np.random.default_rng(seed)).run(c)
    return [sum(outcomes[j] for j in d.measurements) % 2 for d in c.detectors]
