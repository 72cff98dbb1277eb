import csv
import io

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from demjit.adaptive import (
    CSV_HEADER,
    AdaptiveConfig,
    DetectorTracker,
    IcebergLayout,
    LayoutError,
    _Shot,
    _inner_layers,
    build_layout,
    gen_concatenated,
    inner_correct,
    partner,
    per_round_rate,
    run_shot,
    run_shots,
    trigger_set,
    write_csv,
)
from demjit.circuit import CircuitBuilder, GateOp
from demjit.dem import diff_dems
from demjit.frames import sample_detectors
from demjit.generators import NoiseModel
from demjit.pipeline import compile_dem


@pytest.fixture(scope="module")
def layout4():
    return build_layout(4)


@pytest.mark.parametrize("rc, d, expect", [((0, 0), 4, (3, 2)), ((0, 0), 6, (5, 2)), ((2, 3), 4, (1, 1))])
def test_partner_examples(rc, d, expect):
    assert partner(*rc, d) == expect


def test_partner_is_involution_at_d4():
    for r in range(4):
        for c in range(4):
            p = partner(r, c, 4)
            assert p != (r, c) and partner(*p, 4) == (r, c)


@pytest.mark.parametrize("d", [4, 6, 8, 10])
def test_partner_orbits_even(d):
    cells = [(r, c) for r in range(d) for c in range(d)]
    assert sorted(partner(r, c, d) for r, c in cells) == cells
    seen = set()
    for start in cells:
        if start in seen:
            continue
        orbit, q = [start], partner(*start, d)
        while q != start:
            orbit.append(q)
            q = partner(*q, d)
        seen.update(orbit)
        assert len(orbit) % 2 == 0


def test_partner_rejects():
    with pytest.raises(ValueError):
        partner(4, 0, 4)


def test_per_round_rate_examples():
    assert per_round_rate(0.0, 7) == 0.0
    assert per_round_rate(0.237, 1) == 0.237
    assert abs(per_round_rate(0.18, 2) - 0.1) < 1e-12


@given(st.floats(0, 0.3), st.integers(1, 25))
def test_per_round_rate_inverts_compounding(r, d):
    # The inverse loses precision once the surviving bias (1 - 2r)^d underflows toward zero.
    assume((1 - 2 * r) ** d > 1e-4)
    R = 0.5 * (1 - (1 - 2 * r) ** d)
    assert abs(per_round_rate(R, d) - r) < 1e-9


@pytest.mark.parametrize("R, d", [(-0.1, 2), (0.6, 2), (0.1, 0)])
def test_per_round_rate_domain(R, d):
    with pytest.raises(ValueError):
        per_round_rate(R, d)


@pytest.mark.parametrize("d", [4, 6, 8, 10])
def test_layouts_valid(d):
    lay = build_layout(d)
    assert lay.num_blocks == d * d // 2
    lay.validate()


def test_d4_leading_block(layout4):
    assert layout4.blocks[0] == (0, 14)
    assert layout4.num_blocks == 8


@pytest.mark.parametrize("d", [3, 5])
def test_odd_distance_rejected(d):
    with pytest.raises(LayoutError, match="odd"):
        build_layout(d)


def test_validate_reports_shared_check(layout4):
    # Neighbours 0 and 1 share an outer check.
    bad = IcebergLayout(4, layout4.outer, [(0, 1)] + [b for b in layout4.blocks if 0 not in b and 1 not in b] + [(14, 3)])
    with pytest.raises(LayoutError):
        bad.validate()


def test_validate_reports_non_matching(layout4):
    with pytest.raises(LayoutError, match="perfect matching"):
        IcebergLayout(4, layout4.outer, layout4.blocks[:-1]).validate()


def test_trigger_quiet(layout4):
    assert trigger_set(np.zeros((8, 2), dtype=bool), layout4) == []


def test_trigger_leading_block(layout4):
    diff = np.zeros((8, 2), dtype=bool)
    diff[0, 1] = True
    got = trigger_set(diff, layout4)
    outer = layout4.outer
    expect = sorted(i for i in range(len(outer.checks)) if outer.supports(i) & {0, 14})
    assert got == expect
    assert any(0 in outer.supports(i) for i in got) and any(14 in outer.supports(i) for i in got)


def test_trigger_full_round(layout4):
    assert trigger_set(np.zeros((8, 2), dtype=bool), layout4, full=True) == list(range(15))


def test_inner_correct_examples(layout4):
    z = np.zeros(8, dtype=bool)
    assert inner_correct(z, z, layout4) == []
    z2 = z.copy()
    z2[3] = True
    assert inner_correct(z2, z, layout4) == [(layout4.shared_qubit(3), "X")]


def _measure_inner(s, layout):
    for gates in _inner_layers(layout):
        meas = s.layer(gates)
    B = layout.num_blocks
    return np.array([[s.raw(meas[2 * b]), s.raw(meas[2 * b + 1])] for b in range(B)], dtype=bool)


@pytest.mark.parametrize("offset, pauli", [(0, "x"), (1, "x"), (2, "x"), (3, "x"), (1, "z"), (3, "z")])
def test_inner_correction_silences_syndrome(layout4, offset, pauli):
    s = _Shot(layout4, NoiseModel(0.0), np.random.default_rng(0))
    s.layer([GateOp("R", tuple(range(s.n)))])
    getattr(s.errors, pauli)[layout4.data(5)[offset]] ^= True
    raw = _measure_inner(s, layout4)
    assert raw[5].any() and not raw[np.arange(8) != 5].any()
    s.correct(inner_correct(raw[:, 0], raw[:, 1], layout4))
    assert not _measure_inner(s, layout4).any()


def test_tracker_instantiates_on_change():
    t = DetectorTracker(2)
    b = CircuitBuilder()
    m = b.layer([GateOp("M", (0, 1))])
    t.record(0, m[0])
    assert len(t.instantiate(b, [0, 1])) == 1
    assert t.instantiate(b, [0, 1]) == []
    m2 = b.layer([GateOp("M", (0,))])
    t.record(0, m2[0])
    t.instantiate(b, [0])
    assert t.count == 2
    assert b.build().detectors[1].measurements == frozenset({m[0], m2[0]})


def test_noiseless_shot(layout4):
    cfg = AdaptiveConfig(d=4, p=0.0, seed=3)
    rec = run_shot(cfg, layout=layout4)
    assert not rec.detectors.any() and not rec.observables.any()
    assert rec.triggered == [15, 0, 15, 15]
    assert rec.num_hyperedges == 0


def test_same_seed_same_record(layout4):
    cfg = AdaptiveConfig(d=4, p=0.003, seed=11)
    a = run_shot(cfg, shot=2, layout=layout4)
    b = run_shot(cfg, shot=2, layout=layout4)
    assert a == b and str(a.circuit) == str(b.circuit)


def test_refresh_one_matches_static():
    cfg = AdaptiveConfig(d=4, refresh=1, p=0.002, seed=5)
    rec = run_shot(cfg)
    static = compile_dem(gen_concatenated(4, cfg.num_rounds, NoiseModel(0.002)), 0)
    assert rec.circuit == gen_concatenated(4, cfg.num_rounds, NoiseModel(0.002))
    assert diff_dems(rec.dem, static, 0.0).equal


def test_static_circuit_deterministic():
    dets, obs = sample_detectors(gen_concatenated(4, 2), 64, seed=0, noise=False)
    assert not dets.any() and not obs.any()


def test_tracker_consistency(layout4):
    cfg = AdaptiveConfig(d=4, p=0.01, shots=20, seed=9)
    zanc = {layout4.check_ancilla(i) for i in layout4.outer.indices("Z")}
    B, nz = layout4.num_blocks, len(zanc)
    for rec in run_shots(cfg, compile=False):
        c = rec.circuit
        z_runs = sum(
            sum(q in zanc for q in g.targets) for layer in c.layers for g in layer.gates if g.name == "MR"
        )
        assert c.num_detectors == B * cfg.num_rounds + z_runs + B + nz
        measured = c.measurement_qubits()
        for det in c.detectors:
            assert all(0 <= m < len(measured) for m in det.measurements)


def test_config_schedule():
    cfg = AdaptiveConfig(d=6)
    assert (cfg.num_rounds, cfg.refresh_period) == (6, 3)
    assert [cfg.full_round(r) for r in range(6)] == [True, False, False, True, False, True]


@pytest.mark.slow
def test_volume_monotonicity(layout4):
    cfg = AdaptiveConfig(d=4, p=0.001, shots=1000, seed=2)
    recs = run_shots(cfg, compile=False)
    inter = [n for r in recs for i, n in enumerate(r.triggered) if not cfg.full_round(i)]
    mean = float(np.mean(inter))
    assert mean < 15
    assert max(inter) <= 15


def test_concurrent_shots_deterministic():
    cfg = AdaptiveConfig(d=4, p=0.004, shots=6, seed=21)
    serial = run_shots(cfg, workers=1)
    parallel = run_shots(cfg, workers=3)
    assert serial == parallel
    assert [r.shot for r in parallel] == list(range(6))


def test_csv_output():
    cfg = AdaptiveConfig(d=4, p=0.002, shots=2, seed=1)
    buf = io.StringIO(newline="")
    write_csv(run_shots(cfg), buf)
    text = buf.getvalue()
    assert text.count("\r\n") == 3
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    assert rows[1][0] == "0" and len(rows[1][1].split(";")) == 4
    assert int(rows[1][3]) > 0 and ":" in rows[1][5]
