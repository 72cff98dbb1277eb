"""Compare the compiled and numpy kernel backends on surface-code circuits.

    python3 benchmarks/bench_kernels.py [--distances 3 5 7 9] [--iters 20] [-o out.csv]

Writes one CSV row per (distance, backend) with per-round timings and
throughput, then prints the speedup of each backend over numpy.
"""

import argparse
import sys

from demjit import _kernels
from demjit.bench import run_bench, write_bench_csv
from demjit.generators import NoiseModel, gen_surface


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distances", type=int, nargs="+", default=[3, 5, 7, 9])
    ap.add_argument("--iters", type=int, default=20)
    ap.add_argument("--level", type=int, default=2)
    ap.add_argument("--noise", type=float, default=0.001)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("-o", "--output")
    args = ap.parse_args(argv)

    records = []
    for d in args.distances:
        c = gen_surface(d, d, NoiseModel(args.noise))
        for backend in sorted(_kernels.BACKENDS):
            records.append(
                run_bench(c, label=f"surface_d{d}_r{d}", level=args.level, rounds=d,
                          iters=args.iters, backend=backend, threads=args.threads)
            )
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        write_bench_csv(records, out)
    finally:
        if out is not sys.stdout:
            out.close()

    base = {r.label: r.mean_round_ns for r in records if r.backend == "numpy"}
    for r in records:
        print(f"{r.label:16s} {r.backend:6s} {r.mean_round_ns / 1e6:8.3f} ms/round  "
              f"{r.hyperedges_per_second:12,.0f} edges/s  x{base[r.label] / r.mean_round_ns:5.2f} vs numpy",
              file=sys.stderr)
    if "ext" not in _kernels.BACKENDS:
        print("compiled extension not built; only the numpy backend was measured", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
