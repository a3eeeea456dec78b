__all__ = [
    "SimulationParams",
    "Transition",
    "DriftSegment",
    "StreamDefinition",
    "SUDDEN",
    "gradual",
    "SimulationError",
    "StreamSimulator",
    "DisorderBuffer",
    "iter_stream",
    "simulate",
    "simulate_with_drift",
    "inject_disorder",
    "spawn_subcase",
]

from .streamDefinition import (
    SimulationParams, Transition, DriftSegment, StreamDefinition,
    SUDDEN, gradual
)
from .simulator import (
    SimulationError, StreamSimulator, DisorderBuffer, simulate,
    simulate_with_drift, iter_stream, inject_disorder, spawn_subcase
)
