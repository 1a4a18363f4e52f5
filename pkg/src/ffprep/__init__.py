"""Constant-depth state preparation with measurement and feedforward.

Circuit IR, an adaptive-circuit simulator, constant-depth logic gates,
binary/unary encodings, state-preparation pipelines and brute-force oracles.
"""
from .circuit import Circuit, CircuitError, DepthWidthReport, Gate, Measure, compute_depth_width
from .simulator import (
    RNG_ALGORITHM,
    MeasurementRecord,
    SimConfig,
    StateVector,
    SuccessStats,
    estimate_success,
    fidelity,
    output_state,
    run,
)
from .state_prep import (
    BetheSpec,
    SosSpec,
    SparseSpec,
    SpecError,
    SymmetricSpec,
    load_spec,
    prepare_bethe,
    prepare_bethe_circuit,
    prepare_sos_linear,
    prepare_sos_log,
    prepare_sparse,
    prepare_symmetric,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Circuit",
    "CircuitError",
    "DepthWidthReport",
    "Gate",
    "Measure",
    "compute_depth_width",
    "RNG_ALGORITHM",
    "MeasurementRecord",
    "SimConfig",
    "StateVector",
    "SuccessStats",
    "estimate_success",
    "fidelity",
    "output_state",
    "run",
    "BetheSpec",
    "SosSpec",
    "SparseSpec",
    "SpecError",
    "SymmetricSpec",
    "load_spec",
    "prepare_bethe",
    "prepare_bethe_circuit",
    "prepare_sos_linear",
    "prepare_sos_log",
    "prepare_sparse",
    "prepare_symmetric",
]
