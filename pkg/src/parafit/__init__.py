"""Parametric rational fitting and compression of frequency response data.

Phase 1 fits one stable rational model per parameter sample and couples them
through a parametric basis by a (weighted) least-squares solve; the basis can
be fixed (monomial, Bernstein, rational) or adapted to the data by separable
nonlinear least squares. Phase 2 compresses the result into one small joint
realization that is optimal in the combined frequency-parameter norm.
"""

from __future__ import annotations

from .bench import (
    ChainSpec,
    ConvDiffSpec,
    PenzlSpec,
    chain_eval,
    convdiff_eval,
    penzl_eval,
    sample_model,
)
from .compress import (
    CompressInfo,
    IRKAConfig,
    IRKAInfo,
    assemble_simo,
    compress,
    gram_matrix,
    h2_norm_simo,
    h2l2_error,
    hinf_error_at_param,
    irka_simo,
)
from .coupled import (
    DesignMatrices,
    Phase1Config,
    Phase1Info,
    build_design,
    fit_fixed_basis,
    fit_local_models,
    project_real,
    solve_coupled,
)
from .exceptions import (
    BasisMismatchError,
    BasisPoleHitError,
    DuplicatePolesWarning,
    GuardViolationError,
    NoConvergenceError,
    NonFiniteError,
    NotConvergedWarning,
    NotPositiveDefiniteError,
    OutOfRangeError,
    ParafitError,
    ParameterPoleHitError,
    PoleEvaluationError,
    ProblemTooLargeError,
    RankDeficientWarning,
    ShapeMismatchError,
    SingularMatrixError,
    SingularResolventError,
    SingularSystemError,
    UnstableError,
    UnstableSystemError,
)
from .io import (
    parse_dataset,
    parse_model,
    read_dataset,
    read_model,
    serialize_dataset,
    serialize_model,
    write_dataset,
    write_model,
)
from .metrics import h2_rel, hinf_rel, rms_rel
from .models import (
    BarycentricModel,
    CompressedParametricModel,
    FrequencyResponseDataset,
    ParametricBasis,
    ParametricModel,
    PoleResidueModel,
    SIMORealization,
    basis_matrix,
    eval_basis,
    eval_compressed,
    eval_compressed_grid,
    eval_parametric,
    eval_parametric_grid,
    eval_pole_residue,
    pole_residue_matrix,
)
from .multiparam import (
    CompressedParametricModel2,
    FrequencyResponseDataset2,
    ParametricModel2,
    TwoParamConfig,
    compress_two_param,
    eval_two_param,
    eval_two_param_grid,
    fit_two_param,
    flatten_index,
)
from .varpro import (
    PoleCoordinates,
    VarproConfig,
    VarproInfo,
    default_initial_poles,
    fit_adaptive_basis,
    jacobian,
    residual,
)
from .vecfit import (
    VFConfig,
    VFInfo,
    flip_unstable,
    init_nodes,
    relocate_poles,
    sk_vf_step,
    vf_fit,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # models
    "FrequencyResponseDataset",
    "PoleResidueModel",
    "BarycentricModel",
    "ParametricBasis",
    "ParametricModel",
    "SIMORealization",
    "CompressedParametricModel",
    "basis_matrix",
    "eval_basis",
    "eval_pole_residue",
    "eval_parametric",
    "eval_parametric_grid",
    "eval_compressed",
    "eval_compressed_grid",
    "pole_residue_matrix",
    # local fits
    "VFConfig",
    "VFInfo",
    "init_nodes",
    "sk_vf_step",
    "relocate_poles",
    "flip_unstable",
    "vf_fit",
    # coupled fit
    "DesignMatrices",
    "Phase1Config",
    "Phase1Info",
    "build_design",
    "solve_coupled",
    "project_real",
    "fit_local_models",
    "fit_fixed_basis",
    # adaptive basis
    "PoleCoordinates",
    "VarproConfig",
    "VarproInfo",
    "default_initial_poles",
    "residual",
    "jacobian",
    "fit_adaptive_basis",
    # compression
    "IRKAConfig",
    "IRKAInfo",
    "CompressInfo",
    "assemble_simo",
    "gram_matrix",
    "h2_norm_simo",
    "irka_simo",
    "compress",
    "h2l2_error",
    "hinf_error_at_param",
    # two-parameter
    "FrequencyResponseDataset2",
    "ParametricModel2",
    "CompressedParametricModel2",
    "TwoParamConfig",
    "flatten_index",
    "fit_two_param",
    "eval_two_param",
    "eval_two_param_grid",
    "compress_two_param",
    # benchmarks
    "PenzlSpec",
    "penzl_eval",
    "ChainSpec",
    "chain_eval",
    "ConvDiffSpec",
    "convdiff_eval",
    "sample_model",
    # io
    "serialize_dataset",
    "parse_dataset",
    "write_dataset",
    "read_dataset",
    "serialize_model",
    "parse_model",
    "write_model",
    "read_model",
    # metrics
    "rms_rel",
    "h2_rel",
    "hinf_rel",
    # errors and warnings
    "ParafitError",
    "ShapeMismatchError",
    "NonFiniteError",
    "SingularMatrixError",
    "NotPositiveDefiniteError",
    "NoConvergenceError",
    "PoleEvaluationError",
    "BasisPoleHitError",
    "SingularResolventError",
    "UnstableError",
    "UnstableSystemError",
    "GuardViolationError",
    "ProblemTooLargeError",
    "BasisMismatchError",
    "SingularSystemError",
    "ParameterPoleHitError",
    "OutOfRangeError",
    "RankDeficientWarning",
    "NotConvergedWarning",
    "DuplicatePolesWarning",
]
