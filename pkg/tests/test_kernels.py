import io
import os
import subprocess
import sys

import numpy as np
import pytest

from demjit import _kernels
from demjit.bench import BenchRecord, run_bench, write_bench_csv
from demjit.eec import EecMatrix, init_leaves
from demjit.generators import NoiseModel, gen_surface
from demjit.pipeline import CompileTimings, compile_dem
from demjit.stepg import lower

needs_ext = pytest.mark.skipif("ext" not in _kernels.BACKENDS, reason="compiled extension not built")


def test_default_backend():
    assert _kernels.DEFAULT in _kernels.BACKENDS
    assert _kernels.get() is _kernels.BACKENDS[_kernels.DEFAULT]


def test_unknown_backend():
    with pytest.raises(ValueError, match="unavailable"):
        _kernels.get("gpu")


def test_pure_fallback_selected_by_env():
    env = dict(os.environ, DEMJIT_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from demjit import _kernels; print(_kernels.DEFAULT, sorted(_kernels.BACKENDS))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy ['numpy']"


@pytest.fixture(scope="module")
def graph():
    return lower(gen_surface(5, 4, NoiseModel(0.002)), 2)


@needs_ext
@pytest.mark.parametrize("threads", [1, 3])
def test_backward_parity(graph, threads):
    g = graph
    out = {}
    for name in ("numpy", "ext"):
        m = EecMatrix.for_graph(g)
        init_leaves(g, g.detectors, g.observables, m)
        _kernels.get(name).backward(g.successors, m.words, g.l, g.k, np.asarray(g.subpasses()), threads)
        out[name] = m.words
    assert np.array_equal(out["numpy"], out["ext"])


@needs_ext
def test_gather_and_hash_parity(graph):
    rng = np.random.default_rng(0)
    words = rng.integers(0, 2**63, size=(2, graph.num_rows), dtype=np.uint64)
    a = _kernels.get("numpy").gather(words, graph.comp0, graph.comp1)
    b = _kernels.get("ext").gather(words, graph.comp0, graph.comp1)
    assert np.array_equal(a, b)
    assert np.array_equal(_kernels.get("numpy").fnv1_64(a), _kernels.get("ext").fnv1_64(a))


def test_backends_give_identical_dem_text():
    c = gen_surface(3, 3, NoiseModel(0.001))
    texts = {str(compile_dem(c, 2, backend=b)) for b in list(_kernels.BACKENDS) + ["reference"]}
    assert len(texts) == 1


def test_compile_timings():
    t = CompileTimings()
    compile_dem(gen_surface(3, 1, NoiseModel(0.001)), 2, timings=t)
    assert t.lower_ns > 0 and t.classes_ns > 0 and t.reduce_ns > 0
    assert t.total_ns == t.lower_ns + t.classes_ns + t.reduce_ns


def test_bench_record():
    c = gen_surface(3, 2, NoiseModel(0.001))
    rec = run_bench(c, label="s", level=2, rounds=2, iters=3)
    n = len(compile_dem(c, 2))
    assert rec.hyperedges == n and rec.iterations == 3 and rec.rounds == 2
    assert rec.mean_round_ns > 0 and rec.std_round_ns >= 0
    # Per-round mean times rounds, times iterations, is the total compile time.
    total_s = rec.mean_round_ns * rec.rounds * rec.iterations / 1e9
    assert rec.hyperedges_per_second == pytest.approx(n * rec.iterations / total_s, rel=1e-9)


def test_bench_single_iteration():
    rec = run_bench(gen_surface(3, 1, NoiseModel(0.001)), label="s", level=0, rounds=1, iters=1)
    assert rec.std_round_ns == 0.0 and rec.relative_std == 0.0


def test_bench_rejects_zero_iters():
    with pytest.raises(ValueError):
        run_bench(gen_surface(3, 1), label="s", level=0, rounds=1, iters=0)


def test_bench_csv_quoting():
    buf = io.StringIO()
    rec = BenchRecord('a,"b"', 0, 1, 1, "numpy", 1, 5, 1.0, 0.0, 5e9)
    write_bench_csv([rec], buf)
    header, row = buf.getvalue().split("\r\n")[:2]
    assert header.startswith("label,level,rounds")
    assert row.startswith('"a,""b""",0,1')
