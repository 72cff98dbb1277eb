"""Timing harness for DEM compilation."""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Iterable, TextIO

from .circuit import Circuit
from .pipeline import compile_dem


@dataclass
class BenchRecord:
    label: str
    level: int
    rounds: int
    iterations: int
    backend: str
    threads: int
    hyperedges: int
    # Timing fields (the only nondeterministic output).
    mean_round_ns: float
    std_round_ns: float
    hyperedges_per_second: float

    @property
    def relative_std(self) -> float:
        return self.std_round_ns / self.mean_round_ns if self.mean_round_ns else 0.0


def run_bench(
    circuit: Circuit,
    *,
    label: str,
    level: int,
    rounds: int,
    iters: int,
    backend: str | None = None,
    threads: int = 1,
    warmup: int = 1,
) -> BenchRecord:
    """Compile ``circuit`` ``iters`` times after ``warmup`` untimed runs.

    Times are per round (total / ``rounds``); throughput is hyperedges
    produced per second of compile time.
    """
    from . import _kernels

    if iters < 1:
        raise ValueError("need at least one iteration")
    for _ in range(warmup):
        dem = compile_dem(circuit, level, backend=backend, threads=threads)
    samples = []
    for _ in range(iters):
        t0 = time.perf_counter_ns()
        dem = compile_dem(circuit, level, backend=backend, threads=threads)
        samples.append(time.perf_counter_ns() - t0)
    per_round = [s / rounds for s in samples]
    total_s = sum(samples) / 1e9
    return BenchRecord(
        label=label, level=int(level), rounds=rounds, iterations=iters,
        backend=backend or _kernels.DEFAULT, threads=threads, hyperedges=len(dem),
        mean_round_ns=statistics.fmean(per_round),
        std_round_ns=statistics.pstdev(per_round) if iters > 1 else 0.0,
        hyperedges_per_second=len(dem) * iters / total_s if total_s > 0 else float("inf"),
    )


def write_bench_csv(records: Iterable[BenchRecord], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow([f.name for f in fields(BenchRecord)])
    for r in records:
        w.writerow(list(asdict(r).values()))
