import pytest

from demjit.circuit import parse_circuit
from demjit.fixtures import REP_XERR_CIRCUIT
from demjit.generators import NoiseModel, gen_repetition, gen_surface


@pytest.fixture(scope="session")
def rep_xerr():
    return parse_circuit(REP_XERR_CIRCUIT)


CORPUS = {
    "rep_d3_r2": lambda: gen_repetition(3, 2, NoiseModel(0.001)),
    "surface_d3_r2": lambda: gen_surface(3, 2, NoiseModel(0.001)),
    "surface_d3_r3": lambda: gen_surface(3, 3, NoiseModel(0.001)),
}


@pytest.fixture(scope="session")
def corpus():
    return {name: make() for name, make in CORPUS.items()}


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
