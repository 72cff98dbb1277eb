"""Command-line interface: ``demjit {compile,verify,gen,bench,dem-diff,adaptive}``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .circuit import CircuitError, parse_circuit
from .dem import DemParseError, diff_dems, parse_dem, serialize_dem
from .stepg import LoweringError

DEFAULT_VERIFY_CAP = 20000


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_circuit(path: str):
    try:
        return parse_circuit(_read(path))
    except CircuitError as e:
        raise SystemExit(f"error: {path}: {e}") from None
    except OSError as e:
        raise SystemExit(f"error: {e}") from None


def cmd_compile(args) -> int:
    from .pipeline import compile_dem

    c = _load_circuit(args.input)
    t0 = time.perf_counter()
    try:
        dem = compile_dem(c, args.level, backend=args.backend, threads=args.threads)
    except LoweringError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0
    _write(args.output, serialize_dem(dem))
    print(f"D={dem.num_detectors} O={dem.num_observables} E={len(dem)} time={wall:.6f}s", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    from .oracle import build_dem_oracle
    from .pipeline import compile_dem

    c = _load_circuit(args.input)
    size = c.num_qubits * c.num_layers
    if size > args.cap:
        print(f"error: n*l = {size} exceeds the oracle cap {args.cap} (raise with --cap)", file=sys.stderr)
        return 2
    ours = compile_dem(c, args.level)
    ref = build_dem_oracle(c, args.level)
    diff = diff_dems(ours, ref, args.tolerance)
    if diff.equal:
        print(f"ok: {len(ours)} hyperedges match the forward-propagation reference")
        return 0
    print(f"mismatch: {diff.summary(ours, ref)}")
    print(f"first difference (pipeline vs reference): {diff.first()}")
    return 1


def cmd_gen(args) -> int:
    from .generators import NoiseModel, gen_repetition, gen_surface

    noise = NoiseModel(args.noise, swap_gate_rates=args.swap_gate_rates)
    if args.code == "repetition":
        c = gen_repetition(args.distance, args.rounds, noise)
    else:
        c = gen_surface(args.distance, args.rounds, noise, z_only=args.z_only)
    _write(args.output, str(c) + "\n")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_bench, write_bench_csv
    from .generators import NoiseModel, gen_repetition, gen_surface

    gen = gen_repetition if args.code == "repetition" else gen_surface
    c = gen(args.distance, args.rounds, NoiseModel(args.noise))
    rec = run_bench(
        c, label=f"{args.code}_d{args.distance}_r{args.rounds}", level=args.level,
        rounds=args.rounds, iters=args.iters, backend=args.backend, threads=args.threads,
    )
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        write_bench_csv([rec], out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_dem_diff(args) -> int:
    try:
        a = parse_dem(_read(args.a))
        b = parse_dem(_read(args.b))
    except (DemParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    diff = diff_dems(a, b, args.tolerance)
    if diff.equal:
        print(f"equal: {len(a)} hyperedges")
        return 0
    print(f"different: {diff.summary(a, b)}")
    print(diff.first())
    return 1


def cmd_adaptive_run(args) -> int:
    from .adaptive import AdaptiveConfig, LayoutError, run_shots, write_csv

    cfg = AdaptiveConfig(
        d=args.distance, rounds=args.rounds, refresh=args.refresh, p=args.noise, shots=args.shots, seed=args.seed
    )
    try:
        records = run_shots(cfg, workers=args.workers)
    except LayoutError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        write_csv(records, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _level(text: str) -> int:
    v = int(text)
    if v not in (0, 1, 2):
        raise argparse.ArgumentTypeError("level must be 0, 1 or 2")
    return v


def build_parser() -> argparse.ArgumentParser:
    from . import _kernels

    p = argparse.ArgumentParser(prog="demjit", description="Compile detector error models from stabilizer circuits.")
    sub = p.add_subparsers(dest="command", required=True)
    backends = sorted(_kernels.BACKENDS) + ["reference"]

    c = sub.add_parser("compile", help="circuit file -> DEM text")
    c.add_argument("input")
    c.add_argument("--level", type=_level, default=2)
    c.add_argument("--backend", choices=backends, default=None)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("verify", help="compare the pipeline with the forward-propagation reference")
    v.add_argument("input")
    v.add_argument("--level", type=_level, default=2)
    v.add_argument("--cap", type=int, default=DEFAULT_VERIFY_CAP, help="maximum qubits*layers")
    v.add_argument("--tolerance", type=float, default=1e-12)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gen", help="write a memory-experiment circuit")
    g.add_argument("code", choices=["repetition", "surface"])
    g.add_argument("--distance", type=int, default=3)
    g.add_argument("--rounds", type=int, default=3)
    g.add_argument("--noise", type=float, default=0.001)
    g.add_argument("--swap-gate-rates", action="store_true", help="p/10 on single-qubit gates, p on CX")
    g.add_argument("--z-only", action="store_true", help="surface code: Z-type detectors only")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="time compilation of a generated circuit")
    b.add_argument("--code", choices=["repetition", "surface"], default="surface")
    b.add_argument("--distance", type=int, default=3)
    b.add_argument("--rounds", type=int, default=1)
    b.add_argument("--noise", type=float, default=0.001)
    b.add_argument("--level", type=_level, default=2)
    b.add_argument("--iters", type=int, default=100)
    b.add_argument("--backend", choices=sorted(_kernels.BACKENDS), default=None)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)

    dd = sub.add_parser("dem-diff", help="compare two DEM files")
    dd.add_argument("a")
    dd.add_argument("b")
    dd.add_argument("--tolerance", type=float, default=1e-12)
    dd.set_defaults(func=cmd_dem_diff)

    ad = sub.add_parser("adaptive", help="adaptive concatenated-code case study")
    ad_sub = ad.add_subparsers(dest="adaptive_command", required=True)
    run = ad_sub.add_parser("run", help="simulate shots and compile a DEM per shot")
    run.add_argument("--distance", type=int, default=4)
    run.add_argument("--rounds", type=int, default=None)
    run.add_argument("--refresh", type=int, default=None)
    run.add_argument("--noise", type=float, default=0.001)
    run.add_argument("--shots", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("-o", "--output")
    run.set_defaults(func=cmd_adaptive_run)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
