"""Golden test corpus: circuits with DEMs produced by the forward-propagation oracle.

Run ``python -m demjit.fixtures [DIR]`` to regenerate. Files are rewritten
only when their content changes, and regeneration stops if the oracle and the
pipeline disagree on any case.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .circuit import Circuit, parse_circuit
from .dem import diff_dems, serialize_dem
from .generators import NoiseModel, gen_repetition, gen_surface
from .oracle import build_dem_oracle
from .pipeline import compile_dem

DEFAULT_DIR = Path(__file__).resolve().parents[2] / "fixtures"

REP_XERR_P = 0.01

# Distance-3 repetition code, two rounds, one X error after every gate slot.
# Qubits: data 0, 2, 4; ancillas 1, 3.
REP_XERR_CIRCUIT = f"""\
R 0 1 2 3 4
X_ERROR({REP_XERR_P}) 0 1 2 3 4
TICK
CX 0 1 2 3
X_ERROR({REP_XERR_P}) 0 1 2 3 4
TICK
CX 2 1 4 3
X_ERROR({REP_XERR_P}) 0 1 2 3 4
TICK
MR 1 3
X_ERROR({REP_XERR_P}) 1 3
DETECTOR rec[-2]
DETECTOR rec[-1]
TICK
CX 0 1 2 3
X_ERROR({REP_XERR_P}) 0 1 2 3 4
TICK
CX 2 1 4 3
X_ERROR({REP_XERR_P}) 0 1 2 3
TICK
MR 1 3
DETECTOR rec[-2] rec[-4]
DETECTOR rec[-1] rec[-3]
"""


def _rep_xerr_placements() -> dict[int, tuple[int, int]]:
    """Placement index -> (layer, qubit) of each X error in :data:`REP_XERR_CIRCUIT`."""
    slots = [(0, q) for q in range(5)] + [(1, q) for q in range(5)] + [(2, q) for q in range(5)]
    slots += [(3, 1), (3, 3)] + [(4, q) for q in range(5)] + [(5, q) for q in range(4)]
    return dict(enumerate(slots))


REP_XERR_PLACEMENTS = _rep_xerr_placements()
# Detector ids by ancilla (a0 = qubit 1, a1 = qubit 3) and round.
REP_XERR_DETECTORS = {"a0_first": 0, "a1_first": 1, "a0_compare": 2, "a1_compare": 3}


@dataclass(frozen=True)
class GoldenCase:
    name: str
    level: int
    make: Callable[[], Circuit]
    note: str


CASES = [
    GoldenCase(
        "rep_d3_r2_xerr", 0, lambda: parse_circuit(REP_XERR_CIRCUIT),
        "Distance-3 repetition code, two rounds, four detectors, "
        f"26 X-error placements (indices 0-25) with probability {REP_XERR_P} (layer/qubit map in demjit.fixtures.REP_XERR_PLACEMENTS).",
    ),
    GoldenCase(
        "rep_d3_r2", 2, lambda: gen_repetition(3, 2, NoiseModel(0.001)),
        "gen_repetition(3, 2, NoiseModel(0.001)), level 2.",
    ),
    GoldenCase(
        "surface_d3_r2_l0", 0, lambda: gen_surface(3, 2, NoiseModel(0.001)),
        "gen_surface(3, 2, NoiseModel(0.001)), level 0.",
    ),
    GoldenCase(
        "surface_d3_r2_l2", 2, lambda: gen_surface(3, 2, NoiseModel(0.001)),
        "gen_surface(3, 2, NoiseModel(0.001)), level 2.",
    ),
    GoldenCase(
        "surface_d3_r3", 2, lambda: gen_surface(3, 3, NoiseModel(0.001)),
        "gen_surface(3, 3, NoiseModel(0.001)), level 2.",
    ),
]

# 64-bit FNV-1 reference vectors: (input bytes as hex, digest).
FNV1_64_VECTORS = [
    ("", 0xCBF29CE484222325),
    ("61", 0xAF63BD4C8601B7BE),  # "a"
    ("666f6f626172", 0x340D8765A4DDA9C2),  # "foobar"
]


class DivergenceError(RuntimeError):
    pass


def _write_if_changed(path: Path, text: str) -> bool:
    if path.exists() and path.read_text() == text:
        return False
    path.write_text(text)
    return True


def regenerate_goldens(root: Path = DEFAULT_DIR) -> list[Path]:
    """Rewrite every golden case under ``root``; returns the files that changed."""
    outputs = []
    for case in CASES:
        c = case.make()
        expected = build_dem_oracle(c, case.level)
        ours = compile_dem(c, case.level)
        diff = diff_dems(ours, expected)
        if not diff.equal:
            raise DivergenceError(f"{case.name}: pipeline and oracle disagree: {diff.first()}")
        outputs.append((case, c, expected))
    changed = []
    for case, c, expected in outputs:
        d = root / case.name
        d.mkdir(parents=True, exist_ok=True)
        files = {
            "circuit.txt": str(c) + "\n",
            "level": f"{case.level}\n",
            "expected.dem": serialize_dem(expected),
            "note.md": f"# {case.name}\n\n{case.note}\n\nExpected DEM written by the forward-propagation oracle.\n",
        }
        for fname, text in files.items():
            if _write_if_changed(d / fname, text):
                changed.append(d / fname)
    fnv = "".join(f"{data} {digest:016x}\n" for data, digest in FNV1_64_VECTORS)
    (root / "fnv").mkdir(parents=True, exist_ok=True)
    if _write_if_changed(root / "fnv" / "vectors.txt", fnv):
        changed.append(root / "fnv" / "vectors.txt")
    return changed


def load_case(root: Path, name: str) -> tuple[Circuit, int, str]:
    d = root / name
    return parse_circuit((d / "circuit.txt").read_text()), int((d / "level").read_text()), (d / "expected.dem").read_text()


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    root = Path(argv[0]) if argv else DEFAULT_DIR
    try:
        changed = regenerate_goldens(root)
    except DivergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for p in changed:
        print(f"wrote {p}")
    if not changed:
        print("fixtures up to date")
    return 0


if __name__ == "__main__":
    sys.exit(main())
