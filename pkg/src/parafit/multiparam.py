"""Two-parameter extension of the coupled fit.

The second parameter axis gets its own basis; the coupling solve treats the
pair of bases as one product basis through a Kronecker factorization, so the
pseudoinverse of the big parameter block is never formed directly. Columns
of the sample matrix run q-major: column of (j1, j2) is (j1 - 1) * m_q + j2
in 1-based terms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._threads import ordered_map
from .compress import (
    IRKAConfig,
    _distinct_poles,
    diagonalize_realization,
    gram_matrix,
    h2_norm_simo,
    irka_simo,
)
from .exceptions import (
    NonFiniteError,
    OutOfRangeError,
    ProblemTooLargeError,
    ShapeMismatchError,
)
from .linalg import cholesky_upper, lstsq_minnorm, pinv, solve_dense
from .models import (
    ParametricBasis,
    PoleResidueModel,
    SIMORealization,
    _as_complex_matrix,
    _as_complex_vector,
    _set,
    basis_matrix,
    eval_basis,
    eval_pole_residue,
    pole_residue_matrix,
)
from .vecfit import VFConfig, vf_fit

__all__ = [
    "FrequencyResponseDataset2",
    "ParametricModel2",
    "CompressedParametricModel2",
    "TwoParamConfig",
    "flatten_index",
    "fit_two_param",
    "eval_two_param",
    "eval_two_param_grid",
    "compress_two_param",
]

MAX_LOCAL_STATES = 5000


def flatten_index(j1: int, j2: int, m_q: int) -> int:
    """1-based q-major column index of grid point (j1, j2):
    (j1 - 1) * m_q + j2."""
    if m_q < 1:
        raise OutOfRangeError(f"m_q must be positive, got {m_q}")
    if j1 < 1:
        raise OutOfRangeError(f"j1 must be at least 1, got {j1}")
    if not 1 <= j2 <= m_q:
        raise OutOfRangeError(f"j2 must lie in [1, {m_q}], got {j2}")
    return (j1 - 1) * m_q + j2


@dataclass(frozen=True)
class FrequencyResponseDataset2:
    """Samples H(s, p, q) on a tensor grid, columns flattened q-major."""

    frequencies: np.ndarray
    parameters_p: np.ndarray
    parameters_q: np.ndarray
    samples: np.ndarray
    weights: np.ndarray | None = None
    real_symmetric: bool = False

    def __post_init__(self):
        freqs = _as_complex_vector("frequencies", self.frequencies)
        p = _as_complex_vector("parameters_p", self.parameters_p)
        q = _as_complex_vector("parameters_q", self.parameters_q)
        samples = _as_complex_matrix("samples", self.samples)
        if samples.shape != (freqs.size, p.size * q.size):
            raise ShapeMismatchError(
                f"samples shape {samples.shape} does not match grid "
                f"({freqs.size}, {p.size * q.size})"
            )
        for name, arr in (("frequencies", freqs), ("parameters_p", p), ("parameters_q", q)):
            if len(set(arr.tolist())) != arr.size:
                raise ValueError(f"{name} must be pairwise distinct")
        weights = self.weights
        if weights is not None:
            weights = np.array(weights, dtype=np.float64)
            if weights.shape != samples.shape:
                raise ShapeMismatchError("weights must match the sample grid")
            if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
                raise NonFiniteError("weights must be finite and nonnegative")
            weights.setflags(write=False)
        _set(
            self,
            frequencies=freqs,
            parameters_p=p,
            parameters_q=q,
            samples=samples,
            weights=weights,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape


@dataclass(frozen=True)
class ParametricModel2:
    """Two-parameter surrogate with q-major flattened coefficients."""

    local_models: tuple
    basis_p: ParametricBasis
    basis_q: ParametricBasis
    coefficients: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        locals_ = tuple(self.local_models)
        if not locals_:
            raise ValueError("at least one local model is required")
        for m in locals_:
            if not isinstance(m, PoleResidueModel):
                raise TypeError("local_models must be PoleResidueModel instances")
        coeff = _as_complex_matrix("coefficients", self.coefficients)
        r_p, r_q = self.basis_p.size, self.basis_q.size
        if coeff.shape != (len(locals_), r_p * r_q):
            raise ShapeMismatchError(
                f"coefficients shape {coeff.shape} does not match "
                f"({len(locals_)}, {r_p * r_q})"
            )
        _set(self, local_models=locals_, coefficients=coeff)

    def pole_set(self) -> np.ndarray:
        return np.concatenate([m.poles for m in self.local_models])

    def is_stable(self) -> bool:
        return all(m.is_stable() for m in self.local_models)

    def eval(self, s: complex, p: complex, q: complex) -> complex:
        return eval_two_param(self, s, p, q)


@dataclass(frozen=True)
class CompressedParametricModel2:
    """Reduced two-parameter surrogate over the product basis."""

    basis_p: ParametricBasis
    basis_q: ParametricBasis
    gram_chol: np.ndarray
    a_red: np.ndarray
    b_red: np.ndarray
    c_red_unweighted: np.ndarray

    def eval(self, s: complex, p: complex, q: complex) -> complex:
        v = np.kron(eval_basis(self.basis_p, p), eval_basis(self.basis_q, q))
        n = self.a_red.shape[0]
        x = solve_dense(complex(s) * np.eye(n) - self.a_red, self.b_red)
        return complex(v @ (self.c_red_unweighted @ x))


@dataclass(frozen=True)
class TwoParamConfig:
    """Configuration for fit_two_param; decimation subsamples the grid
    columns used for local models (stride over the flattened index)."""

    basis_p: ParametricBasis
    basis_q: ParametricBasis
    vf: VFConfig
    local_orders: tuple | None = None
    decimation: int = 1

    def __post_init__(self):
        if self.decimation < 1:
            raise ValueError("decimation stride must be at least 1")


def fit_two_param(
    dataset: FrequencyResponseDataset2,
    config: TwoParamConfig,
    full_output: bool = False,
):
    """Local models on (a decimated subset of) the flattened grid columns,
    then one coupled solve against the product basis using
    pinv(B_p kron B_q) = pinv(B_p) kron pinv(B_q)."""
    if dataset.weights is not None:
        warnings.warn(
            "two-parameter fitting ignores dataset weights",
            UserWarning,
            stacklevel=2,
        )
    m_total = dataset.samples.shape[1]
    columns = list(range(0, m_total, config.decimation))
    orders = config.local_orders
    if orders is None:
        orders = (config.vf.order,) * len(columns)
    if len(orders) != len(columns):
        raise ShapeMismatchError(
            f"need {len(columns)} local orders, got {len(orders)}"
        )
    states = int(sum(orders))
    if states > MAX_LOCAL_STATES:
        raise ProblemTooLargeError(
            f"local models would carry {states} states (cap {MAX_LOCAL_STATES}); "
            "increase the decimation stride or lower the local order"
        )
    # the dataset flag is authoritative here: one-sided grids cannot
    # witness asymmetry, so autodetection would force the realified
    # path on genuinely complex responses
    force_real = bool(dataset.real_symmetric)

    def fit_column(idx: int):
        col = columns[idx]
        vf_config = VFConfig(
            order=int(orders[idx]),
            max_iters=config.vf.max_iters,
            residue_tol=config.vf.residue_tol,
            node_move_tol=config.vf.node_move_tol,
            flip_unstable=config.vf.flip_unstable,
            freq_weights=config.vf.freq_weights,
        )
        return vf_fit(
            dataset.frequencies,
            dataset.samples[:, col],
            vf_config,
            real_symmetric=force_real,
            full_output=True,
        )

    results = ordered_map(fit_column, range(len(columns)))
    models = tuple(model for model, _ in results)
    infos = [info for _, info in results]

    a_block = pole_residue_matrix(models, dataset.frequencies)
    b_p = basis_matrix(config.basis_p, dataset.parameters_p)
    b_q = basis_matrix(config.basis_q, dataset.parameters_q)
    pinv_product = np.kron(pinv(b_p), pinv(b_q))
    # stable-order lstsq on the frequency side (a_block can be nearly rank
    # deficient); the parameter side stays the factored Kronecker inverse
    x1, _ = lstsq_minnorm(a_block, dataset.samples, warn_deficient=True)
    coefficients = x1 @ pinv_product.T
    model = ParametricModel2(
        local_models=models,
        basis_p=config.basis_p,
        basis_q=config.basis_q,
        coefficients=coefficients,
        real_flag=False,
    )
    if not full_output:
        return model
    fit = a_block @ coefficients @ np.kron(b_p, b_q).T
    residual = float(
        np.linalg.norm(fit - dataset.samples)
        / max(np.linalg.norm(dataset.samples), np.finfo(float).tiny)
    )
    return model, {"column_info": infos, "residual": residual,
                   "converged": all(i.converged for i in infos)}


def eval_two_param(model: ParametricModel2, s: complex, p: complex, q: complex) -> complex:
    """Evaluate a two-parameter surrogate at one (s, p, q) point."""
    h = np.array([eval_pole_residue(m, s) for m in model.local_models])
    v = np.kron(eval_basis(model.basis_p, p), eval_basis(model.basis_q, q))
    return complex(h @ model.coefficients @ v)


def eval_two_param_grid(model: ParametricModel2, freqs, params_p, params_q) -> np.ndarray:
    """Surrogate values on the full tensor grid, columns q-major."""
    a_block = pole_residue_matrix(model.local_models, freqs)
    b_p = basis_matrix(model.basis_p, params_p)
    b_q = basis_matrix(model.basis_q, params_q)
    return a_block @ model.coefficients @ np.kron(b_p, b_q).T


def compress_two_param(
    model: ParametricModel2,
    config: IRKAConfig,
    full_output: bool = False,
):
    """Phase 2 over the flattened product basis: the Gram matrix separates
    into kron(Gram_p, Gram_q), everything else is the single-parameter path."""
    gram = np.kron(gram_matrix(model.basis_p), gram_matrix(model.basis_q))
    chol = cholesky_upper(gram)
    poles = _distinct_poles(model.pole_set())
    n = poles.size
    c = np.empty((model.coefficients.shape[1], n), dtype=np.complex128)
    col = 0
    for k, local in enumerate(model.local_models):
        c[:, col : col + local.order] = np.outer(model.coefficients[k], local.residues)
        col += local.order
    weighted = SIMORealization(a_diag=poles, b=np.ones(n, dtype=np.complex128), c=chol @ c)
    (a_red, b_red, c_red), irka_info = irka_simo(weighted, config, full_output=True)
    c_red_unweighted = scipy.linalg.solve_triangular(chol, c_red, lower=False)
    compressed = CompressedParametricModel2(
        basis_p=model.basis_p,
        basis_q=model.basis_q,
        gram_chol=chol,
        a_red=a_red,
        b_red=b_red,
        c_red_unweighted=c_red_unweighted,
    )
    if not full_output:
        return compressed
    lam, b_diag, c_diag = diagonalize_realization(a_red, b_red, c_red)
    diff = SIMORealization(
        a_diag=np.concatenate([weighted.a_diag, lam]),
        b=np.concatenate([weighted.b, b_diag]),
        c=np.hstack([weighted.c, -c_diag]),
    )
    return compressed, {"irka": irka_info, "joint_error": h2_norm_simo(diff)}
