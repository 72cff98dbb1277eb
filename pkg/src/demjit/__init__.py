"""Detector error model compilation by backward propagation over a space-time graph."""

from .circuit import Circuit, CircuitBuilder, CircuitError, parse_circuit, serialize_circuit
from .dem import Dem, Hyperedge, diff_dems, parse_dem, serialize_dem
from .pipeline import CompileTimings, compile_dem
from .stepg import CorrelationLevel, lower

__all__ = [
    "Circuit",
    "CircuitBuilder",
    "CircuitError",
    "CompileTimings",
    "CorrelationLevel",
    "Dem",
    "Hyperedge",
    "compile_dem",
    "diff_dems",
    "lower",
    "parse_circuit",
    "parse_dem",
    "serialize_circuit",
    "serialize_dem",
]
