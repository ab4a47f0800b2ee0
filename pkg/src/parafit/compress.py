"""Phase 2: joint-norm optimal compression of a phase-1 surrogate.

The surrogate is rewritten as a single-input many-output realization whose
outputs are the coefficients of the parametric basis. Weighting the output
map by the upper Cholesky factor of the basis Gram matrix turns the joint
(frequency x parameter) L2 norm into a plain H2 norm of the weighted
realization, which an interpolatory fixed-point iteration (tangential, with
pole flipping) then reduces to a smaller order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import (
    BasisMismatchError,
    DuplicatePolesWarning,
    NotConvergedWarning,
    ShapeMismatchError,
    SingularMatrixError,
    UnstableSystemError,
)
from .linalg import cholesky_upper, eig_general, solve_dense
from .models import (
    CompressedParametricModel,
    ParametricBasis,
    ParametricModel,
    SIMORealization,
    basis_matrix,
)
from .vecfit import flip_unstable

__all__ = [
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
]

GRAM_QUAD_NODES = 200


@dataclass(frozen=True)
class IRKAConfig:
    """Knobs for irka_simo.

    n_red : reduced order.
    max_iters : shift-update sweeps.
    shift_tol : relative change of the canonically sorted shift multiset
        below which the iteration counts as converged.
    init : "dominant-poles" (mirror the n_red poles with the largest
        ||c_i|| |b_i| / |Re a_i|) or "log-spaced" (real shifts log-spaced
        across the pole-magnitude band, unit tangents).
    flip_unstable_reduced : mirror unstable reduced poles at the end.
    max_restarts : restarts with perturbed shifts on a singular projection.
    """

    n_red: int
    max_iters: int = 100
    shift_tol: float = 1e-6
    init: str = "dominant-poles"
    flip_unstable_reduced: bool = True
    max_restarts: int = 3

    def __post_init__(self):
        if self.n_red < 1:
            raise ValueError("n_red must be at least 1")
        if self.init not in ("dominant-poles", "log-spaced"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class IRKAInfo:
    converged: bool = False
    iterations: int = 0
    restarts: int = 0
    shift_delta: float = np.nan
    shifts: np.ndarray | None = None


@dataclass
class CompressInfo:
    """Diagnostics for a compress run."""

    irka: IRKAInfo
    joint_error: float
    joint_norm: float


def _distinct_poles(poles: np.ndarray) -> np.ndarray:
    """Nudge exact duplicates by 1e-10 relative so the diagonal realization
    is well defined."""
    seen: set = set()
    out = poles.copy()
    changed = False
    for i in range(out.size):
        v = complex(out[i])
        while v in seen:
            v = v * (1.0 + 1e-10)
            changed = True
        out[i] = v
        seen.add(v)
    if changed:
        warnings.warn(
            "duplicate poles across local models were perturbed by 1e-10 relative",
            DuplicatePolesWarning,
            stacklevel=3,
        )
    return out


def assemble_simo(model: ParametricModel) -> SIMORealization:
    """Stack the local models into one diagonal realization whose output row l
    carries the basis-l coefficient function: output l of C (sI - A)^-1 b
    equals sum_k X[k, l] * localmodel_k(s)."""
    poles = _distinct_poles(model.pole_set())
    n = poles.size
    b = np.ones(n, dtype=np.complex128)
    c = np.empty((model.basis.size, n), dtype=np.complex128)
    col = 0
    for k, local in enumerate(model.local_models):
        width = local.order
        c[:, col : col + width] = np.outer(model.coefficients[k], local.residues)
        col += width
    return SIMORealization(a_diag=poles, b=b, c=c)


def gram_matrix(basis: ParametricBasis, n_nodes: int = GRAM_QUAD_NODES) -> np.ndarray:
    """Basis Gram matrix G[i, j] = integral over [a, b] of conj(P_i) P_j,
    by Gauss-Legendre quadrature (exact for the polynomial kinds)."""
    a, b = basis.interval
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    pts = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    w = 0.5 * (b - a) * weights
    v = basis_matrix(basis, pts)
    gram = v.conj().T @ (w[:, None] * v)
    return 0.5 * (gram + gram.conj().T)


def h2_norm_simo(sys: SIMORealization) -> float:
    """H2 norm from the pole-residue double sum
    sum_ij (c_j^H c_i) b_i conj(b_j) / (-a_i - conj(a_j)); index i carries
    the unconjugated Cauchy factor."""
    if not sys.is_stable():
        raise UnstableSystemError("H2 norm requires a stable realization")
    a = sys.a_diag
    cross = sys.c.T @ sys.c.conj()  # cross[i, j] = c_j^H c_i
    denom = -a[:, None] - np.conj(a)[None, :]
    total = np.sum(cross * np.outer(sys.b, np.conj(sys.b)) / denom)
    return float(np.sqrt(max(total.real, 0.0)))


def _mirror_shifts(values: np.ndarray) -> np.ndarray:
    """Reflect eigenvalues into the right half-plane; imaginary-axis values
    are nudged off the axis like the pole-flip rule."""
    re = np.abs(values.real)
    on_axis = re == 0.0
    re[on_axis] = 1e-8 * np.maximum(1.0, np.abs(values.imag[on_axis]))
    return re + 1j * values.imag


def _canonical_order(shifts: np.ndarray) -> np.ndarray:
    return np.lexsort((shifts.real, shifts.imag))


def _separate_collisions(shifts: np.ndarray) -> np.ndarray:
    out = shifts.copy()
    for i in range(1, out.size):
        bump = 1
        while any(
            abs(out[i] - out[j]) <= 1e-8 * max(1.0, abs(out[j])) for j in range(i)
        ):
            out[i] = out[i] * (1.0 + 1e-8 * bump)
            bump += 1
    return out


def _unit_columns(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=0)
    return mat / np.where(norms > 0.0, norms, 1.0)


def _initial_shifts(sys: SIMORealization, config: IRKAConfig):
    r = config.n_red
    if config.init == "dominant-poles":
        dominance = (
            np.linalg.norm(sys.c, axis=0) * np.abs(sys.b) / np.abs(sys.a_diag.real)
        )
        top = np.argsort(dominance)[::-1][:r]
        shifts = _mirror_shifts(sys.a_diag[top].copy())
        tangents = sys.c[:, top].copy()
    else:
        mags = np.abs(sys.a_diag)
        shifts = np.geomspace(np.min(mags), np.max(mags), r).astype(np.complex128)
        tangents = np.ones((sys.n_outputs, r), dtype=np.complex128)
    order = _canonical_order(shifts)
    return _separate_collisions(shifts[order]), tangents[:, order]


def irka_simo(sys: SIMORealization, config: IRKAConfig, full_output: bool = False):
    """Interpolatory H2 fixed-point iteration for a diagonal SIMO realization.

    Returns (a_red, b_red, c_red) and, with full_output, an IRKAInfo. The
    reduced model tangentially Hermite-interpolates the full response at the
    mirrored reduced poles once the shift multiset has stopped moving.
    """
    if config.n_red > sys.order:
        raise ShapeMismatchError(
            f"n_red {config.n_red} exceeds system order {sys.order}"
        )
    if not sys.is_stable():
        raise UnstableSystemError("compression requires a stable realization")
    shifts, tangents = _initial_shifts(sys, config)
    info = IRKAInfo()
    a, b, c = sys.a_diag, sys.b, sys.c
    rom = None
    rng = np.random.default_rng(1799)

    while info.restarts <= config.max_restarts:
        failed = False
        for _ in range(config.max_iters):
            info.iterations += 1
            v = b[:, None] / (shifts[None, :] - a[:, None])
            w = (c.conj().T @ tangents) / (np.conj(shifts)[None, :] - np.conj(a)[:, None])
            # orthonormal bases for the same subspaces keep the projection
            # well conditioned; the reduced transfer function only sees the
            # spans, so interpolation is unaffected
            v, _ = np.linalg.qr(v)
            w, _ = np.linalg.qr(w)
            k = v.conj().T @ w
            try:
                w = np.linalg.solve(k.T, w.T).T  # biorthogonalize: W^H V = I
            except np.linalg.LinAlgError:
                failed = True
                break
            if not np.all(np.isfinite(w)):
                failed = True
                break
            a_red = w.conj().T @ (a[:, None] * v)
            b_red = w.conj().T @ b
            c_red = c @ v
            rom = (a_red, b_red, c_red)
            eigvals, eigvecs = eig_general(a_red)
            new_shifts = _mirror_shifts(eigvals)
            new_tangents = _unit_columns(c_red @ eigvecs)
            order = _canonical_order(new_shifts)
            new_shifts = _separate_collisions(new_shifts[order])
            new_tangents = new_tangents[:, order]
            delta = np.linalg.norm(new_shifts - shifts) / max(
                np.linalg.norm(shifts), np.finfo(float).tiny
            )
            info.shift_delta = float(delta)
            shifts, tangents = new_shifts, new_tangents
            if delta <= config.shift_tol:
                info.converged = True
                break
        if not failed:
            break
        info.restarts += 1
        if info.restarts > config.max_restarts:
            raise SingularMatrixError(
                "projection stayed singular after shift-perturbation restarts"
            )
        perturb = 1.0 + 1e-3 * rng.standard_normal(shifts.size)
        shifts = _separate_collisions(_mirror_shifts(shifts * perturb))

    if rom is None:
        raise SingularMatrixError("no reduced model could be formed")
    if not info.converged:
        warnings.warn(
            f"shift iteration did not settle in {config.max_iters} sweeps "
            f"(last relative change {info.shift_delta:.3e})",
            NotConvergedWarning,
            stacklevel=2,
        )
    a_red, b_red, c_red = rom
    if config.flip_unstable_reduced:
        a_red = _flip_reduced(a_red)
    info.shifts = shifts
    if full_output:
        return (a_red, b_red, c_red), info
    return a_red, b_red, c_red


def _flip_reduced(a_red: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = eig_general(a_red)
    if np.all(eigvals.real < 0.0):
        return a_red
    flipped = flip_unstable(eigvals)
    return (eigvecs * flipped) @ np.linalg.inv(eigvecs)


def diagonalize_realization(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Similarity-transform a dense realization to diagonal form."""
    eigvals, eigvecs = eig_general(a)
    b_diag = solve_dense(eigvecs, b)
    c_diag = c @ eigvecs
    return eigvals, b_diag, c_diag


def compress(
    model: ParametricModel,
    config: IRKAConfig,
    full_output: bool = False,
):
    """Reduce a phase-1 surrogate to n_red states, optimally in the joint
    frequency x parameter norm induced by the basis Gram matrix."""
    gram = gram_matrix(model.basis)
    chol = cholesky_upper(gram)
    sys = assemble_simo(model)
    weighted = SIMORealization(a_diag=sys.a_diag, b=sys.b, c=chol @ sys.c)
    (a_red, b_red, c_red), irka_info = irka_simo(weighted, config, full_output=True)
    c_red_unweighted = scipy.linalg.solve_triangular(chol, c_red, lower=False)
    compressed = CompressedParametricModel(
        basis=model.basis,
        gram_chol=chol,
        a_red=a_red,
        b_red=b_red,
        c_red_unweighted=c_red_unweighted,
        real_flag=False,
    )
    if not full_output:
        return compressed
    lam, b_diag, c_diag = diagonalize_realization(a_red, b_red, c_red)
    diff = SIMORealization(
        a_diag=np.concatenate([weighted.a_diag, lam]),
        b=np.concatenate([weighted.b, b_diag]),
        c=np.hstack([weighted.c, -c_diag]),
    )
    info = CompressInfo(
        irka=irka_info,
        joint_error=h2_norm_simo(diff),
        joint_norm=h2_norm_simo(weighted),
    )
    return compressed, info


def _same_basis(x: ParametricBasis, y: ParametricBasis) -> bool:
    if x.kind != y.kind or x.interval != y.interval:
        return False
    if x.kind == "rational":
        return x.poles.shape == y.poles.shape and bool(np.all(x.poles == y.poles))
    return x.degree == y.degree


def _weighted_diagonal_triple(model, chol: np.ndarray):
    if isinstance(model, ParametricModel):
        sys = assemble_simo(model)
        return sys.a_diag, sys.b, chol @ sys.c
    if isinstance(model, CompressedParametricModel):
        lam, b_diag, c_diag = diagonalize_realization(
            model.a_red, model.b_red, model.c_red_unweighted
        )
        return lam, b_diag, chol @ c_diag
    raise TypeError(f"unsupported model type {type(model).__name__}")


def h2l2_error(model_a, model_b=None) -> float:
    """Joint-norm distance between two surrogates sharing a basis (model_b
    None means the zero model, giving the joint norm of model_a)."""
    basis = model_a.basis
    if model_b is not None and not _same_basis(basis, model_b.basis):
        raise BasisMismatchError("models do not share the same parametric basis")
    chol = cholesky_upper(gram_matrix(basis))
    a1, b1, c1 = _weighted_diagonal_triple(model_a, chol)
    if model_b is None:
        return h2_norm_simo(SIMORealization(a_diag=a1, b=b1, c=c1))
    a2, b2, c2 = _weighted_diagonal_triple(model_b, chol)
    diff = SIMORealization(
        a_diag=np.concatenate([a1, a2]),
        b=np.concatenate([b1, b2]),
        c=np.hstack([c1, -c2]),
    )
    return h2_norm_simo(diff)


def _golden_max(fun, lo: float, hi: float, iters: int = 60) -> float:
    """Golden-section maximization of a unimodal-ish bracket; returns the
    best value found (a lower bound on the true maximum)."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    best = max(f1, f2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = fun(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = fun(x1)
        best = max(best, f1, f2)
    return best


def hinf_error_at_param(model, reference, p: complex, omega_grid) -> float:
    """Largest pointwise deviation |model(i w, p) - reference(i w, p)| over
    the grid, sharpened by one golden-section pass around the grid maximizer.
    This is a lower bound on the true supremum over all frequencies."""
    omega = np.sort(np.asarray(omega_grid, dtype=np.float64))
    if omega.size < 2:
        raise ShapeMismatchError("omega_grid needs at least two points")
    ref = reference.eval if hasattr(reference, "eval") else reference

    def err(w: float) -> float:
        s = 1j * w
        return abs(model.eval(s, p) - ref(s, p))

    values = np.array([err(w) for w in omega])
    i_best = int(np.argmax(values))
    lo = omega[max(i_best - 1, 0)]
    hi = omega[min(i_best + 1, omega.size - 1)]
    refined = _golden_max(err, lo, hi) if hi > lo else 0.0
    return float(max(values[i_best], refined))
