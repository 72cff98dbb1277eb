import shutil

import pytest

import demjit.fixtures as fx
from demjit.dem import diff_dems, parse_dem
from demjit.oracle import build_dem_oracle
from demjit.pipeline import compile_dem

NAMES = [case.name for case in fx.CASES]


@pytest.mark.parametrize("name", NAMES)
def test_golden_matches_pipeline(name):
    c, level, expected = fx.load_case(fx.DEFAULT_DIR, name)
    ref = parse_dem(expected, c.num_detectors, c.num_observables)
    assert diff_dems(compile_dem(c, level), ref, 1e-12).equal


@pytest.mark.parametrize("name", NAMES)
def test_golden_is_oracle_output(name):
    c, level, expected = fx.load_case(fx.DEFAULT_DIR, name)
    assert str(build_dem_oracle(c, level)) == expected


def test_rep_xerr_golden_has_nine_lines():
    _, level, expected = fx.load_case(fx.DEFAULT_DIR, "rep_d3_r2_xerr")
    assert level == 0 and len(expected.splitlines()) == 9


def test_level_monotone_goldens():
    l0 = fx.load_case(fx.DEFAULT_DIR, "surface_d3_r2_l0")[2]
    l2 = fx.load_case(fx.DEFAULT_DIR, "surface_d3_r2_l2")[2]
    assert len(l2.splitlines()) >= len(l0.splitlines())


def test_fnv_vectors_file():
    lines = (fx.DEFAULT_DIR / "fnv" / "vectors.txt").read_text().split("\n")
    assert lines[0] == " cbf29ce484222325"


def test_regeneration_is_a_noop(tmp_path):
    root = tmp_path / "fixtures"
    shutil.copytree(fx.DEFAULT_DIR, root)
    assert fx.regenerate_goldens(root) == []
    assert fx.main([str(root)]) == 0


def test_regeneration_rewrites_edits(tmp_path):
    root = tmp_path / "fixtures"
    shutil.copytree(fx.DEFAULT_DIR, root)
    target = root / "rep_d3_r2" / "expected.dem"
    original = target.read_text()
    target.write_text("error(0.5) D0\n")
    assert fx.regenerate_goldens(root) == [target]
    assert target.read_text() == original


def test_divergence_aborts(tmp_path, monkeypatch):
    monkeypatch.setattr(fx, "compile_dem", lambda c, level: compile_dem(c, 0 if level else 2))
    with pytest.raises(fx.DivergenceError):
        fx.regenerate_goldens(tmp_path)
    assert fx.main([str(tmp_path)]) == 1
    assert not any(tmp_path.iterdir())
