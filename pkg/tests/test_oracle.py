import pytest
from hypothesis import given, settings

from demjit import _kernels
from demjit.circuit import parse_circuit
from demjit.dem import diff_dems
from demjit.fixtures import REP_XERR_DETECTORS, REP_XERR_P, REP_XERR_PLACEMENTS
from demjit.oracle import PlacementError, build_dem_oracle, propagate_error
from demjit.pipeline import compile_dem
from demjit.stepg import NoiseTerm

from .strategies import circuit_texts

X, Z, Y = 1, 2, 3
BACKENDS = sorted(_kernels.BACKENDS) + ["reference"]


def _x(index):
    layer, qubit = REP_XERR_PLACEMENTS[index]
    return NoiseTerm(layer, ((qubit, X),), REP_XERR_P)


def test_placement_12_flips_both_comparisons(rep_xerr):
    dets, obs = propagate_error(rep_xerr, _x(12))
    assert dets == {REP_XERR_DETECTORS["a1_compare"], REP_XERR_DETECTORS["a0_compare"]} and obs == set()


def test_placements_3_8_13_equivalent(rep_xerr):
    sigs = {propagate_error(rep_xerr, _x(e)) for e in (3, 8, 13)}
    assert len(sigs) == 1 and next(iter(sigs))[0]


def test_rep_xerr_placement_count(rep_xerr):
    assert len(REP_XERR_PLACEMENTS) == 26
    classes = {propagate_error(rep_xerr, _x(e)) for e in REP_XERR_PLACEMENTS}
    classes.discard((frozenset(), frozenset()))
    assert len(classes) == 9


def test_z_before_mr_is_empty(rep_xerr):
    assert propagate_error(rep_xerr, NoiseTerm(2, ((3, Z),), 0.1)) == (frozenset(), frozenset())


def test_after_final_measurement_is_empty(rep_xerr):
    last = rep_xerr.num_layers - 1
    for q in range(rep_xerr.num_qubits):
        for p in (X, Z, Y):
            assert propagate_error(rep_xerr, NoiseTerm(last, ((q, p),), 0.1)) == (frozenset(), frozenset())


def test_hand_propagation():
    c = parse_circuit("R 0 1\nTICK\nCX 0 1\nTICK\nH 0\nTICK\nM 0 1\nDETECTOR rec[-2]\nDETECTOR rec[-1]")
    # X on the control before the CX spreads to the target; H turns the control copy into Z.
    assert propagate_error(c, NoiseTerm(0, ((0, X),), 0.1))[0] == {1}
    # Z on the target spreads back to the control, which H then turns into X.
    assert propagate_error(c, NoiseTerm(0, ((1, Z),), 0.1))[0] == {0}
    assert propagate_error(c, NoiseTerm(1, ((0, Z),), 0.1))[0] == {0}


def test_measurement_flip():
    c = parse_circuit("M 0 1\nDETECTOR rec[-2] rec[-1]\nOBSERVABLE_INCLUDE(0) rec[-1]")
    assert propagate_error(c, NoiseTerm(0, (), 0.1, measurement=1)) == ({0}, {0})


@pytest.mark.parametrize(
    "term",
    [
        NoiseTerm(7, ((0, X),), 0.1),
        NoiseTerm(0, ((9, X),), 0.1),
        NoiseTerm(0, ((0, 0),), 0.1),
        NoiseTerm(0, (), 0.1),
        NoiseTerm(0, ((0, X), (1, X), (2, X)), 0.1),
        NoiseTerm(0, (), 0.1, measurement=4),
    ],
)
def test_placement_errors(rep_xerr, term):
    with pytest.raises(PlacementError):
        propagate_error(rep_xerr, term)


def test_rep_xerr_oracle_dem(rep_xerr):
    assert len(build_dem_oracle(rep_xerr, 0)) == 9


def test_noiseless_is_empty(rep_xerr):
    dem = build_dem_oracle(rep_xerr.without_noise(), 2)
    assert len(dem) == 0 and dem.num_detectors == 4


@pytest.mark.parametrize("level", [0, 1, 2])
@pytest.mark.parametrize("name", ["rep_d3_r2", "surface_d3_r2", "surface_d3_r3"])
def test_corpus_equivalence(corpus, name, level):
    c = corpus[name]
    ref = build_dem_oracle(c, level)
    for backend in BACKENDS:
        d = diff_dems(compile_dem(c, level, backend=backend), ref, 1e-12)
        assert d.equal, f"{backend}: {d.first()}"


@settings(max_examples=120, deadline=None)
@given(circuit_texts())
def test_random_circuit_equivalence(text):
    c = parse_circuit(text)
    for level in (0, 1, 2):
        ref = build_dem_oracle(c, level)
        d = diff_dems(compile_dem(c, level), ref, 1e-12)
        assert d.equal, f"level {level}: {d.first()}"
