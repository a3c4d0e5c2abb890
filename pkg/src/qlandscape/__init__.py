"""Dynamical Lie algebras, quantum Fisher information, and loss-landscape
analysis for layered periodic variational circuits."""

from .paulis import (
    PauliTerm,
    PauliSum,
    CliffordGate,
    pauli_commutator,
    conjugate_by_clifford,
    cz,
    cnot,
    hadamard,
    s_gate,
    sum_paulis,
)
from .lie import LieBasis, lie_closure
from .circuits import (
    AnsatzSpec,
    Rotation,
    Gate,
    apply_ansatz,
    derivative_state,
    full_unitary,
    hva_tfim,
    hea,
    tfim_hamiltonian,
    effective_generators,
    dla_dimension,
    ansatz_dla,
    input_state,
)
from .geometry import (
    QfimMatrix,
    SpectrumReport,
    qfim,
    qfim_shift_rule,
    qfim_rank_one_form,
    qfim_unitary,
    classical_fim,
    orbit_dimension,
    state_sector_dimension,
    effective_dimension_d1,
    spectrum_report,
)
from .landscape import (
    LossSpec,
    HessianMatrix,
    loss,
    gradient,
    hessian,
    hessian_linear,
    hessian_compile,
    hessian_shift_rule,
    compile_hessian_closed_form,
    target_value,
)
from .optimize import (
    AdamConfig,
    AdamState,
    RunRecord,
    adam_step,
    newton_polish,
    train,
    train_batch,
)
from .harness import (
    ExperimentConfig,
    RankScanConfig,
    SweepResult,
    run_sweep,
    rank_scan,
    haar_unitary,
    compressible_dataset,
)

__version__ = "0.1.0"
