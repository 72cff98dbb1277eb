"""Forward-propagation reference for detector error models.

Every error term is pushed forward through the rest of the circuit as its
own Pauli frame and the flipped detectors are read off directly. This is the
quadratic method; it shares nothing with the backward traversal except the
list of error terms, so agreement between the two is a real check.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit
from .dem import Dem, canonical, merge_prob
from .frames import FrameSimulator, parities
from .stepg import CorrelationLevel, NoiseTerm, NoiseTerms, circuit_noise_terms


class PlacementError(ValueError):
    pass


def _signatures(c: Circuit, terms: NoiseTerms) -> tuple[np.ndarray, np.ndarray]:
    S = len(terms)
    sim = FrameSimulator(c.num_qubits, S)
    cols = np.arange(S)
    by_boundary: dict[int, np.ndarray] = {}
    pauli = terms.meas < 0
    for b in np.unique(terms.boundary[pauli]):
        by_boundary[int(b)] = cols[pauli & (terms.boundary == b)]
    for i, layer in enumerate(c.layers):
        sim.apply_gates(layer)
        sel = by_boundary.get(i)
        if sel is None:
            continue
        for q, p in ((terms.qa[sel], terms.pa[sel]), (terms.qb[sel], terms.pb[sel])):
            ok = q >= 0
            s, q, p = sel[ok], q[ok], p[ok]
            sim.x[q, s] ^= (p & 1).astype(bool)
            sim.z[q, s] ^= (p & 2).astype(bool)
    rec = sim.record_matrix()
    flips = cols[~pauli]
    rec[terms.meas[flips], flips] ^= True
    dets = parities(rec, [d.measurements for d in c.detectors])
    obs = parities(rec, [o.measurements for o in c.observables])
    return dets, obs


def _check_placement(c: Circuit, e: NoiseTerm) -> None:
    if e.measurement is not None:
        if not 0 <= e.measurement < c.num_measurements:
            raise PlacementError(f"measurement {e.measurement} does not exist")
        return
    if not 0 <= e.boundary < c.num_layers:
        raise PlacementError(f"boundary {e.boundary} outside 0..{c.num_layers - 1}")
    if not e.paulis or len(e.paulis) > 2:
        raise PlacementError("an error acts on one or two qubits")
    for q, p in e.paulis:
        if not 0 <= q < c.num_qubits or p not in (1, 2, 3):
            raise PlacementError(f"bad Pauli placement ({q}, {p})")


def propagate_error(c: Circuit, e: NoiseTerm) -> tuple[frozenset[int], frozenset[int]]:
    """Detectors and observables flipped by the single error ``e``."""
    _check_placement(c, e)
    if e.measurement is not None:
        terms = NoiseTerms(*(np.array([v]) for v in (e.boundary, -1, 0, -1, 0, e.measurement)), np.array([e.probability]))
    else:
        (qa, pa), (qb, pb) = (list(e.paulis) + [(-1, 0)])[:2]
        terms = NoiseTerms(*(np.array([v]) for v in (e.boundary, qa, pa, qb, pb, -1)), np.array([e.probability]))
    dets, obs = _signatures(c, terms)
    return frozenset(np.flatnonzero(dets[:, 0]).tolist()), frozenset(np.flatnonzero(obs[:, 0]).tolist())


def build_dem_oracle(c: Circuit, level: CorrelationLevel | int) -> Dem:
    """DEM by propagating every error term of ``c`` forward, one at a time."""
    terms = circuit_noise_terms(c, level)
    edges: dict[tuple, float] = {}
    if len(terms):
        dets, obs = _signatures(c, terms)
        det_cols = [np.flatnonzero(col).tolist() for col in dets.T]
        obs_cols = [np.flatnonzero(col).tolist() for col in obs.T]
        for s in range(len(terms)):
            key = (tuple(det_cols[s]), tuple(obs_cols[s]))
            p = float(terms.prob[s])
            edges[key] = merge_prob(edges[key], p) if key in edges else p
    return canonical(c.num_detectors, c.num_observables, edges)
