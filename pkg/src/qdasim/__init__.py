"""Desk-scale density-matrix simulation of discriminant-analysis quantum algorithms.

The toolkit pairs every quantum-path operation (spectral-function chains,
phase estimation, swap tests, discriminant classification) with an exact
classical oracle so results are verifiable end to end.
"""

__version__ = "0.1.0"

from .errors import DomainRejection, NumericalFailure
from .linalg import (
    DensityOperator,
    EigenSolution,
    HermitianOperator,
    SpectralFunction,
    eig_hermitian,
    matrix_function,
    partial_trace,
    trace_distance,
)
from .oracle import (
    ClassStatistics,
    LabeledDataset,
    between_scatter,
    class_covariance_operator,
    class_statistics,
    weighted_superposition,
    within_scatter,
)
from .qsim import (
    RegisteredState,
    ShotResult,
    density_exponentiation_step,
    overlap_test_signed,
    phase_estimation,
    postselect_ancilla,
    sample_eigenpairs,
    swap_test,
)
from .chain import (
    ChainReport,
    ChainSpec,
    chain_apply,
    chain_stage,
    classical_chain_oracle,
    complexity_estimate,
)
from .rotation import (
    FixedPointValue,
    TaylorSpec,
    arcsin_angle,
    rotation_amplitudes,
    shift_add_multiply,
    taylor_eval,
)
from .lda import (
    ProjectionBasis,
    classical_lda_oracle,
    feature_map,
    fisher_criterion,
    project,
    quantum_lda,
)
from .qda import (
    ClassifierModel,
    DiscriminantResult,
    classify,
    discriminant,
    fit,
    invert_apply,
    lda_classify,
)
from .data_io import RunReport, SyntheticSpec, generate, load_csv, save_csv, synthetic_preset

__all__ = [
    "__version__",
    "DomainRejection",
    "NumericalFailure",
    "DensityOperator",
    "EigenSolution",
    "HermitianOperator",
    "SpectralFunction",
    "eig_hermitian",
    "matrix_function",
    "partial_trace",
    "trace_distance",
    "ClassStatistics",
    "LabeledDataset",
    "between_scatter",
    "class_covariance_operator",
    "class_statistics",
    "weighted_superposition",
    "within_scatter",
    "RegisteredState",
    "ShotResult",
    "density_exponentiation_step",
    "overlap_test_signed",
    "phase_estimation",
    "postselect_ancilla",
    "sample_eigenpairs",
    "swap_test",
    "ChainReport",
    "ChainSpec",
    "chain_apply",
    "chain_stage",
    "classical_chain_oracle",
    "complexity_estimate",
    "FixedPointValue",
    "TaylorSpec",
    "arcsin_angle",
    "rotation_amplitudes",
    "shift_add_multiply",
    "taylor_eval",
    "ProjectionBasis",
    "classical_lda_oracle",
    "feature_map",
    "fisher_criterion",
    "project",
    "quantum_lda",
    "ClassifierModel",
    "DiscriminantResult",
    "classify",
    "discriminant",
    "fit",
    "invert_apply",
    "lda_classify",
    "RunReport",
    "SyntheticSpec",
    "generate",
    "load_csv",
    "save_csv",
    "synthetic_preset",
]
