"""End-to-end compilation: circuit -> propagation graph -> classes -> DEM."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .circuit import Circuit
from .dem import Dem, reduce
from .eec import EecMatrix, init_leaves, run_backward, signatures
from .stepg import CorrelationLevel, lower


@dataclass
class CompileTimings:
    lower_ns: int = 0
    classes_ns: int = 0
    reduce_ns: int = 0

    @property
    def total_ns(self) -> int:
        return self.lower_ns + self.classes_ns + self.reduce_ns


def compile_dem(
    circuit: Circuit,
    level: CorrelationLevel | int = CorrelationLevel.L2,
    *,
    backend: str | None = None,
    threads: int = 1,
    timings: CompileTimings | None = None,
) -> Dem:
    """Compile ``circuit`` to its canonical detector error model."""
    t0 = time.perf_counter_ns()
    g = lower(circuit, level)
    t1 = time.perf_counter_ns()
    m = EecMatrix.for_graph(g)
    init_leaves(g, g.detectors, g.observables, m)
    run_backward(g, m, backend=backend, threads=threads)
    sigs = signatures(g, m, backend=None if backend == "reference" else backend)
    t2 = time.perf_counter_ns()
    dem = reduce(sigs, g.prob, g.D, g.O, backend=None if backend == "reference" else backend)
    t3 = time.perf_counter_ns()
    if timings is not None:
        timings.lower_ns += t1 - t0
        timings.classes_ns += t2 - t1
        timings.reduce_ns += t3 - t2
    return dem
