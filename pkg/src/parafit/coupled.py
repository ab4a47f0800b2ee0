"""Phase 1: couple per-parameter local rational models through a parametric basis.

One local model is fitted per sampled parameter value; the coupling solve
then finds coefficients X minimizing || A X B^T - H || over the whole grid,
where A holds local-model values at the sample frequencies and B holds basis
values at the sample parameters. The weighted variant solves the
column-stacked Kronecker form with a Hadamard weight on every grid entry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._threads import ordered_map
from .exceptions import ProblemTooLargeError, ShapeMismatchError
from .linalg import lstsq_minnorm
from .models import (
    FrequencyResponseDataset,
    ParametricBasis,
    ParametricModel,
    PoleResidueModel,
    basis_matrix,
    pole_residue_matrix,
)
from .vecfit import VFConfig, VFInfo, vf_fit

__all__ = [
    "DesignMatrices",
    "Phase1Config",
    "Phase1Info",
    "build_design",
    "solve_coupled",
    "project_real",
    "fit_local_models",
    "fit_fixed_basis",
]

# hard cap on rows of the materialized Kronecker system in the weighted solve
MAX_WEIGHTED_ROWS = 20000


@dataclass(frozen=True)
class DesignMatrices:
    """Frequency-side block A[i, k] = localmodel_k(freq_i) and parameter-side
    block B[j, l] = P_l(param_j)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.ndim != 2 or self.b.ndim != 2:
            raise ShapeMismatchError("design blocks must be matrices")


@dataclass(frozen=True)
class Phase1Config:
    """Configuration for fit_fixed_basis.

    basis : parametric basis coupling the local models.
    vf : local-fit configuration; vf.order is the uniform local order.
    local_orders : optional per-column orders overriding vf.order.
    weights : optional grid weights overriding the dataset's.
    enforce_real : apply the realness projection to the coefficients.
    """

    basis: ParametricBasis
    vf: VFConfig
    local_orders: tuple | None = None
    weights: np.ndarray | None = None
    enforce_real: bool = False


@dataclass
class Phase1Info:
    """Diagnostics for a fit_fixed_basis run."""

    column_info: list
    residual: float
    converged: bool


def build_design(local_models, freqs, basis: ParametricBasis, params) -> DesignMatrices:
    """Evaluate both design blocks on the sampling grid."""
    return DesignMatrices(
        a=pole_residue_matrix(local_models, freqs),
        b=basis_matrix(basis, params),
    )


def solve_coupled(
    design: DesignMatrices,
    samples: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Minimal-norm coefficients X for min || A X B^T - H || (optionally
    entrywise weighted).

    Unweighted, the solution separates into X = pinv(A) H pinv(B)^T. With
    weights, the column-stacked system diag(vec W)^(1/2) (B kron A) vec X is
    materialized, which is refused above MAX_WEIGHTED_ROWS rows.
    """
    a, b = design.a, design.b
    samples = np.asarray(samples, dtype=np.complex128)
    m_s, m_p = samples.shape
    if a.shape[0] != m_s or b.shape[0] != m_p:
        raise ShapeMismatchError(
            f"samples {samples.shape} inconsistent with design blocks "
            f"{a.shape}, {b.shape}"
        )
    if weights is None:
        # two lstsq passes apply the truncated SVD factors in a stable order;
        # forming pinv(a) explicitly loses accuracy when a is nearly rank
        # deficient (nearly collinear local models)
        x1, _ = lstsq_minnorm(a, samples, warn_deficient=True)
        x2, _ = lstsq_minnorm(b, x1.T)
        return x2.T
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != samples.shape:
        raise ShapeMismatchError("weights must match the sample grid")
    rows = m_s * m_p
    if rows > MAX_WEIGHTED_ROWS:
        raise ProblemTooLargeError(
            f"weighted solve would materialize {rows} rows (cap {MAX_WEIGHTED_ROWS})"
        )
    kron = np.kron(b, a)
    sqrt_w = np.sqrt(weights).flatten(order="F")
    vec_h = samples.flatten(order="F")
    x, _ = lstsq_minnorm(sqrt_w[:, None] * kron, sqrt_w * vec_h)
    return x.reshape((a.shape[1], b.shape[1]), order="F")


def project_real(coefficients: np.ndarray, basis: ParametricBasis) -> np.ndarray:
    """Symmetrize coefficients so the surrogate is conjugate-symmetric:
    x[k, l] <- (x[k, l] + conj(x[k, rho(l)])) / 2. Idempotent because the
    conjugation pairing is an involution."""
    if basis.conj_perm is None:
        raise ValueError("basis pole set is not conjugation closed")
    x = np.asarray(coefficients, dtype=np.complex128)
    return 0.5 * (x + np.conj(x[:, basis.conj_perm]))


def fit_local_models(
    dataset: FrequencyResponseDataset,
    config: Phase1Config,
) -> tuple[list[PoleResidueModel], list[VFInfo]]:
    """Fit one local model per parameter column (order-preserving parallel map)."""
    m_p = dataset.parameters.size
    orders = config.local_orders
    if orders is None:
        orders = (config.vf.order,) * m_p
    if len(orders) != m_p:
        raise ShapeMismatchError(f"need {m_p} local orders, got {len(orders)}")
    weights = config.weights if config.weights is not None else dataset.weights
    # the dataset flag is authoritative here: one-sided grids cannot
    # witness asymmetry, so autodetection would force the realified
    # path on genuinely complex responses
    force_real = bool(dataset.real_symmetric)

    def fit_column(j: int):
        col_weights = weights[:, j] if weights is not None else config.vf.freq_weights
        vf_config = VFConfig(
            order=int(orders[j]),
            max_iters=config.vf.max_iters,
            residue_tol=config.vf.residue_tol,
            node_move_tol=config.vf.node_move_tol,
            flip_unstable=config.vf.flip_unstable,
            freq_weights=col_weights,
        )
        return vf_fit(
            dataset.frequencies,
            dataset.samples[:, j],
            vf_config,
            real_symmetric=force_real,
            full_output=True,
        )

    results = ordered_map(fit_column, range(m_p))
    models = [model for model, _ in results]
    infos = [info for _, info in results]
    failed = [j for j, info in enumerate(infos) if not info.converged]
    if failed:
        warnings.warn(
            f"local fits did not converge for parameter columns {failed}",
            UserWarning,
            stacklevel=2,
        )
    return models, infos


def fit_fixed_basis(
    dataset: FrequencyResponseDataset,
    config: Phase1Config,
    full_output: bool = False,
):
    """Run the full phase-1 pipeline: local fits, design assembly, coupled solve.

    Returns a ParametricModel whose pole set is parameter independent (the
    union of local-model poles). With full_output, also returns Phase1Info.
    """
    local_models, infos = fit_local_models(dataset, config)
    design = build_design(local_models, dataset.frequencies, config.basis, dataset.parameters)
    weights = config.weights if config.weights is not None else dataset.weights
    coefficients = solve_coupled(design, dataset.samples, weights)
    real_flag = False
    if config.enforce_real:
        coefficients = project_real(coefficients, config.basis)
        real_flag = all(m.real_flag for m in local_models)
    model = ParametricModel(
        local_models=tuple(local_models),
        basis=config.basis,
        coefficients=coefficients,
        real_flag=real_flag,
    )
    if not full_output:
        return model
    fit = design.a @ coefficients @ design.b.T
    err = fit - dataset.samples
    if weights is not None:
        sqrt_w = np.sqrt(weights)
        err = err * sqrt_w
        ref = dataset.samples * sqrt_w
    else:
        ref = dataset.samples
    residual = float(
        np.linalg.norm(err) / max(np.linalg.norm(ref), np.finfo(float).tiny)
    )
    info = Phase1Info(
        column_info=infos,
        residual=residual,
        converged=all(i.converged for i in infos),
    )
    return model, info
