"""Compiler and DDS simulator for pulse-level gate programs."""

from .core import (
    Constant,
    Diagnostic,
    Discrete,
    GLOBAL_BEAM,
    PulseRecord,
    Spline,
    bit_set,
    nop,
    validate_pulse,
)
from .discretize import (
    RangeError,
    discretize_amplitude,
    discretize_frequency,
    discretize_phase,
    phase_error_after_epoch,
    quantize_duration,
    to_amplitude,
    to_degrees,
    to_hz,
)
from .schedule import CollisionError, CompileError, GateBlock, ParallelGroup, Timeline, build_timeline
from .dds import CorrectionStream, SimConfig, SimulationError, simulate
from .compiler import compile_files, compile_source

__all__ = [
    "CollisionError",
    "CompileError",
    "Constant",
    "CorrectionStream",
    "Diagnostic",
    "Discrete",
    "GLOBAL_BEAM",
    "GateBlock",
    "ParallelGroup",
    "PulseRecord",
    "RangeError",
    "SimConfig",
    "SimulationError",
    "Spline",
    "Timeline",
    "bit_set",
    "build_timeline",
    "compile_files",
    "compile_source",
    "discretize_amplitude",
    "discretize_frequency",
    "discretize_phase",
    "nop",
    "phase_error_after_epoch",
    "quantize_duration",
    "simulate",
    "to_amplitude",
    "to_degrees",
    "to_hz",
    "validate_pulse",
]
