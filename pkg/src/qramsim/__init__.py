"""Dense-statevector simulation of circuit-based quantum data loaders.

Four loaders are provided: FF-QRAM (flip-flop QRAM, post-selected), PQM
(binary pattern storage), FFP-QRAM (PQM-prepared FF-QRAM) and A-PQM
(deterministic complex-amplitude loading on n+2 qubits).
"""

from .analysis import (
    SweepConfig,
    SweepRow,
    exact_postselect_probability,
    expected_repetitions,
    fidelity_to_target,
    rows_to_csv,
    run_sweep,
    sampled_postselect_probability,
)
from .circuit import Circuit, Gate, decompose_circuit, decompose_mcx, emit_qasm, simulate
from .dataset import DataRecord, Dataset, load_dataset
from .encoders import (
    EncodingResult,
    a_pqm_encode,
    encode,
    ff_qram_encode,
    ffp_qram_encode,
    pqm_store,
    preprocess_max_scale,
    target_state,
    theta_for_amplitude,
)
from .gates import (
    LoadGateSpec,
    U3Params,
    classical_flip_layer,
    classical_quantum_gate,
    ry_matrix,
    s_r_matrix,
    u3_matrix,
    u3_params,
)
from .statevector import (
    MeasurementOutcome,
    RegisterLayout,
    StateVector,
    apply_plus_layer,
    apply_unitary,
    fidelity,
    measure_shots,
    new_state,
    project_postselect,
)

__version__ = "0.1.0"

__all__ = [
    "a_pqm_encode",
    "apply_plus_layer",
    "apply_unitary",
    "Circuit",
    "classical_flip_layer",
    "classical_quantum_gate",
    "DataRecord",
    "Dataset",
    "decompose_circuit",
    "decompose_mcx",
    "emit_qasm",
    "encode",
    "EncodingResult",
    "exact_postselect_probability",
    "expected_repetitions",
    "ff_qram_encode",
    "ffp_qram_encode",
    "fidelity",
    "fidelity_to_target",
    "Gate",
    "load_dataset",
    "LoadGateSpec",
    "measure_shots",
    "MeasurementOutcome",
    "new_state",
    "pqm_store",
    "preprocess_max_scale",
    "project_postselect",
    "RegisterLayout",
    "rows_to_csv",
    "run_sweep",
    "ry_matrix",
    "s_r_matrix",
    "sampled_postselect_probability",
    "simulate",
    "StateVector",
    "SweepConfig",
    "SweepRow",
    "target_state",
    "theta_for_amplitude",
    "u3_matrix",
    "u3_params",
    "U3Params",
]
