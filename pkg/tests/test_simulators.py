import numpy as np
import pytest

from demjit.circuit import parse_circuit
from demjit.dem import merge_prob
from demjit.frames import FrameSimulator, parities, sample_detectors
from demjit.generators import NoiseModel, gen_repetition, gen_surface
from demjit.pipeline import compile_dem
from demjit.tableau import TableauSimulator, reference_detectors


def test_noiseless_rep_xerr(rep_xerr):
    dets, obs = sample_detectors(rep_xerr, 200, seed=0, noise=False)
    assert not dets.any() and not obs.any()
    assert reference_detectors(rep_xerr, seed=3) == [0, 0, 0, 0]


def test_gauge_exposes_random_detector():
    c = parse_circuit("R 0\nTICK\nH 0\nTICK\nM 0\nDETECTOR rec[-1]")
    dets, _ = sample_detectors(c, 2000, seed=1, noise=False)
    assert 0.4 < dets.mean() < 0.6
    outcomes = {tuple(reference_detectors(c, seed=s)) for s in range(40)}
    assert outcomes == {(0,), (1,)}


def test_gauge_off_hides_random_detector():
    c = parse_circuit("R 0\nTICK\nH 0\nTICK\nM 0\nDETECTOR rec[-1]")
    dets, _ = sample_detectors(c, 100, seed=1, noise=False, gauge=False)
    assert not dets.any()


def test_x_error_rate():
    c = parse_circuit("R 0\nX_ERROR(0.3) 0\nTICK\nM 0\nDETECTOR rec[-1]")
    dets, _ = sample_detectors(c, 20000, seed=2)
    assert abs(dets.mean() - 0.3) < 0.02


def test_depolarize2_marginals():
    c = parse_circuit("R 0 1\nTICK\nCX 0 1\nDEPOLARIZE2(0.6) 0 1\nTICK\nM 0 1\nDETECTOR rec[-2]\nDETECTOR rec[-1]")
    dets, _ = sample_detectors(c, 40000, seed=3)
    # 8 of the 15 non-identity Paulis carry X (or Y) on a given qubit.
    assert np.allclose(dets.mean(axis=1), 0.6 * 8 / 15, atol=0.015)


def test_parities():
    rec = np.array([[1, 0], [1, 1], [0, 1]], dtype=bool)
    assert parities(rec, [{0, 1}, {2}, set()]).tolist() == [[False, True], [False, True], [False, False]]


def test_record_indices():
    sim = FrameSimulator(3, 1)
    c = parse_circuit("M 0 1\nTICK\nMR 2")
    assert sim.apply_gates(c.layers[0]) == [0, 1]
    assert sim.apply_gates(c.layers[1]) == [2]
    assert sim.record_matrix().shape == (3, 1)


@pytest.mark.parametrize(
    "make",
    [
        lambda: gen_surface(3, 2, NoiseModel(0.0)),
        lambda: gen_surface(4, 2, NoiseModel(0.0)),
        lambda: gen_repetition(5, 3, NoiseModel(0.0)),
    ],
)
def test_tableau_agrees_generated_circuits_are_deterministic(make):
    c = make()
    for seed in range(3):
        assert not any(reference_detectors(c, seed=seed))


def test_tableau_bell_pair():
    for seed in range(20):
        t = TableauSimulator(2, np.random.default_rng(seed))
        t.h(0)
        t.cx(0, 1)
        assert t.measure(0) == t.measure(1)


def test_tableau_reset():
    t = TableauSimulator(1, np.random.default_rng(0))
    t.h(0)
    t.measure(0)
    t.reset(0)
    assert t.measure(0) == 0


def test_dem_predicts_sampled_rates():
    # Independent route: sampled detector marginals match the compiled DEM.
    c = gen_surface(3, 2, NoiseModel(0.01))
    dem = compile_dem(c, 2)
    expect = np.zeros(c.num_detectors)
    for h in dem.hyperedges:
        for d in h.detectors:
            expect[d] = merge_prob(expect[d], h.probability)
    dets, _ = sample_detectors(c, 20000, seed=4)
    sigma = np.sqrt(expect * (1 - expect) / 20000)
    assert np.all(np.abs(dets.mean(axis=1) - expect) < 5 * sigma + 2e-3)
