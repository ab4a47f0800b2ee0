"""Rational approximation of one frequency-response column.

Implements the barycentric iteration with moving nodes: each sweep solves a
linearized least-squares problem for numerator and denominator residues on
the current nodes, relocates the nodes to the denominator zeros, and flips
unstable relocations into the left half-plane. When the data is consistent
with a real underlying system, every solve runs in a realified coordinate
system so conjugate symmetry of the result is exact rather than approximate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    NonFiniteError,
    NotConvergedWarning,
    ShapeMismatchError,
    UnstableError,
)
from .linalg import lstsq_minnorm
from .models import PoleResidueModel

__all__ = [
    "VFConfig",
    "VFInfo",
    "init_nodes",
    "sk_vf_step",
    "relocate_poles",
    "flip_unstable",
    "vf_fit",
]


@dataclass(frozen=True)
class VFConfig:
    """Knobs for vf_fit.

    order : number of nodes (= model order).
    max_iters : relocation sweeps before giving up.
    residue_tol : stop when max |denominator residue| falls below this
        (denominator is then numerically 1 and the nodes are the poles).
    node_move_tol : stop when the relative node displacement falls below this.
    flip_unstable : mirror unstable relocations into the left half-plane;
        disabling it raises UnstableError if unstable nodes survive.
    freq_weights : optional per-frequency least-squares weights.
    """

    order: int
    max_iters: int = 50
    residue_tol: float = 1e-8
    node_move_tol: float = 1e-10
    flip_unstable: bool = True
    freq_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class VFInfo:
    """Diagnostics attached to a vf_fit run."""

    converged: bool = False
    iterations: int = 0
    sk_residuals: list = field(default_factory=list)
    final_residual: float = np.nan
    real_symmetric: bool = False


def init_nodes(freq_min: float, freq_max: float, order: int) -> np.ndarray:
    """Starting nodes for a frequency band [freq_min, freq_max] (moduli).

    floor(order / 2) conjugate pairs with imaginary parts log-spaced across
    the band and real parts -Im/100; an odd order adds one real node at
    -sqrt(freq_min * freq_max).
    """
    if not (0.0 < freq_min <= freq_max) or not np.isfinite(freq_max):
        raise ValueError(f"need 0 < freq_min <= freq_max, got [{freq_min}, {freq_max}]")
    if order < 1:
        raise ValueError("order must be at least 1")
    n_pairs = order // 2
    reals = []
    if order % 2:
        reals.append(-np.sqrt(freq_min * freq_max))
    if n_pairs == 0:
        pairs = np.zeros(0, dtype=np.complex128)
    else:
        ims = np.geomspace(freq_min, freq_max, n_pairs)
        # degenerate bands collapse the spacing; keep the nodes distinct
        for k in range(1, n_pairs):
            if ims[k] <= ims[k - 1]:
                ims[k] = ims[k - 1] * (1.0 + 1e-6)
        pairs = -ims / 100.0 + 1j * ims
    return _merge_nodes(np.asarray(reals, dtype=np.float64), pairs)


def _merge_nodes(reals: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Canonical layout: real nodes, then each pair as (lambda, conj lambda)."""
    out = np.empty(reals.size + 2 * pairs.size, dtype=np.complex128)
    out[: reals.size] = reals
    out[reals.size::2] = pairs
    out[reals.size + 1 :: 2] = np.conj(pairs)
    return out


def _split_nodes(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Invert _merge_nodes, validating conjugation closure."""
    nodes = np.asarray(nodes, dtype=np.complex128)
    reals = nodes[nodes.imag == 0.0].real
    upper = nodes[nodes.imag > 0.0]
    lower = nodes[nodes.imag < 0.0]
    if upper.size != lower.size or not np.array_equal(
        np.sort_complex(np.conj(upper)), np.sort_complex(lower)
    ):
        raise ShapeMismatchError("node set is not conjugation closed")
    return reals, upper


def _pair_columns(freqs: np.ndarray, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inv_up = 1.0 / (freqs[:, None] - pairs[None, :])
    inv_down = 1.0 / (freqs[:, None] - np.conj(pairs)[None, :])
    return inv_up + inv_down, 1j * inv_up - 1j * inv_down


def _real_basis_columns(freqs: np.ndarray, reals: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Complex Cauchy columns whose coefficients are real in realified mode:
    one column per real node, two per conjugate pair."""
    blocks = []
    if reals.size:
        blocks.append(1.0 / (freqs[:, None] - reals[None, :]))
    if pairs.size:
        col1, col2 = _pair_columns(freqs, pairs)
        stacked = np.empty((freqs.size, 2 * pairs.size), dtype=np.complex128)
        stacked[:, 0::2] = col1
        stacked[:, 1::2] = col2
        blocks.append(stacked)
    return np.hstack(blocks)


def _real_coeffs_to_complex(x: np.ndarray, n_reals: int) -> np.ndarray:
    """Map realified coefficients back to the merged complex node layout."""
    n_pairs = (x.size - n_reals) // 2
    out = np.empty(n_reals + 2 * n_pairs, dtype=np.complex128)
    out[:n_reals] = x[:n_reals]
    re = x[n_reals::2]
    im = x[n_reals + 1 :: 2]
    out[n_reals::2] = re + 1j * im
    out[n_reals + 1 :: 2] = re - 1j * im
    return out


def _weight_rows(weights: np.ndarray | None, m: int) -> np.ndarray | None:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (m,):
        raise ShapeMismatchError(f"weights shape {w.shape} does not match {m} samples")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise NonFiniteError("weights must be finite and nonnegative")
    return np.sqrt(w)


def _solve_step(
    freqs: np.ndarray,
    data: np.ndarray,
    weights: np.ndarray | None,
    nodes: np.ndarray,
    real_symmetric: bool,
    numerator_only: bool,
):
    """One linearized solve. Returns (psi, phi, relative residual, rank)."""
    m = freqs.size
    sqrt_w = _weight_rows(weights, m)
    if real_symmetric:
        reals, pairs = _split_nodes(nodes)
        basis = _real_basis_columns(freqs, reals, pairs)
        blocks = [basis] if numerator_only else [basis, -data[:, None] * basis]
        design_c = np.hstack(blocks)
        design = np.vstack([design_c.real, design_c.imag])
        rhs = np.concatenate([data.real, data.imag])
        if sqrt_w is not None:
            full_w = np.concatenate([sqrt_w, sqrt_w])
            design = design * full_w[:, None]
            rhs = rhs * full_w
        x, rank = lstsq_minnorm(design, rhs, warn_deficient=True)
        nu = nodes.size
        psi = _real_coeffs_to_complex(x[:nu], reals.size)
        phi = (
            np.zeros(nu, dtype=np.complex128)
            if numerator_only
            else _real_coeffs_to_complex(x[nu:], reals.size)
        )
    else:
        basis = 1.0 / (freqs[:, None] - nodes[None, :])
        if not np.all(np.isfinite(basis)):
            raise NonFiniteError("a frequency coincides with a node")
        blocks = [basis] if numerator_only else [basis, -data[:, None] * basis]
        design = np.hstack(blocks)
        rhs = data.astype(np.complex128)
        if sqrt_w is not None:
            design = design * sqrt_w[:, None]
            rhs = rhs * sqrt_w
        x, rank = lstsq_minnorm(design, rhs, warn_deficient=True)
        nu = nodes.size
        psi = x[:nu]
        phi = np.zeros(nu, dtype=np.complex128) if numerator_only else x[nu:]
    residual = float(np.linalg.norm(design @ x - rhs))
    scale = float(np.linalg.norm(rhs))
    return psi, phi, residual / max(scale, np.finfo(float).tiny), rank


def sk_vf_step(
    freqs,
    data,
    weights,
    nodes,
    real_symmetric: bool = False,
):
    """Solve the linearized (weighted) problem on fixed nodes.

    Returns the numerator residues psi and the denominator residues phi of
    d(s) = 1 + sum(phi / (s - nodes)); the fit asserts
    sum(psi / (s - nodes)) ~= d(s) * data in the weighted least-squares sense.
    """
    freqs = np.asarray(freqs, dtype=np.complex128)
    data = np.asarray(data, dtype=np.complex128)
    nodes = np.asarray(nodes, dtype=np.complex128)
    if freqs.shape != data.shape or freqs.ndim != 1:
        raise ShapeMismatchError("freqs and data must be matching vectors")
    psi, phi, _, _ = _solve_step(freqs, data, weights, nodes, real_symmetric, False)
    return psi, phi


def relocate_poles(nodes, phi, real_symmetric: bool = False) -> np.ndarray:
    """Zeros of d(s) = 1 + sum(phi / (s - nodes)).

    Computed as eigenvalues of diag(nodes) - outer(ones, phi). In realified
    mode the eigenproblem is assembled as a real matrix (2x2 rotation blocks
    per conjugate pair) so the zeros come out conjugation closed exactly.
    """
    nodes = np.asarray(nodes, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    if nodes.shape != phi.shape:
        raise ShapeMismatchError("nodes and phi must have matching shapes")
    if not real_symmetric:
        mat = np.diag(nodes) - np.outer(np.ones(nodes.size), phi)
        return np.linalg.eigvals(mat)
    reals, pairs = _split_nodes(nodes)
    n = nodes.size
    mat = np.zeros((n, n), dtype=np.float64)
    b = np.zeros(n)
    c = np.zeros(n)
    nr = reals.size
    mat[:nr, :nr] = np.diag(reals)
    b[:nr] = 1.0
    # residues follow the merged layout: phi[nr::2] are the upper-half members
    c[:nr] = phi[:nr].real
    for k, lam in enumerate(pairs):
        i = nr + 2 * k
        x, y = lam.real, lam.imag
        mat[i : i + 2, i : i + 2] = [[x, y], [-y, x]]
        b[i] = 2.0
        c[i] = phi[nr + 2 * k].real
        c[i + 1] = phi[nr + 2 * k].imag
    eigs = np.linalg.eigvals(mat - np.outer(b, c))
    new_reals = np.sort(eigs[eigs.imag == 0.0].real)
    new_pairs = eigs[eigs.imag > 0.0]
    if new_reals.size + 2 * new_pairs.size != n:
        raise NonFiniteError("realified relocation lost conjugation closure")
    return _merge_nodes(new_reals, new_pairs[np.argsort(new_pairs.imag)])


def flip_unstable(poles) -> np.ndarray:
    """Mirror right-half-plane poles across the imaginary axis; poles exactly
    on the axis are nudged to real part -1e-8 * max(1, |imag|)."""
    poles = np.asarray(poles, dtype=np.complex128)
    re = poles.real.copy()
    im = poles.imag
    re[re > 0.0] *= -1.0
    on_axis = re == 0.0
    re[on_axis] = -1e-8 * np.maximum(1.0, np.abs(im[on_axis]))
    return re + 1j * im


def _detect_real_symmetric(freqs: np.ndarray, data: np.ndarray) -> bool:
    """True when every conjugate frequency pair present carries conjugate data
    (vacuously true for one-sided sampling, the usual real-system case)."""
    index = {complex(s): i for i, s in enumerate(freqs)}
    for s, i in index.items():
        j = index.get(s.conjugate())
        if j is None:
            continue
        if abs(data[j] - np.conj(data[i])) > 1e-12 * max(1.0, abs(data[i])):
            return False
    return True


def _frequency_band(freqs: np.ndarray) -> tuple[float, float]:
    mags = np.abs(freqs.imag)
    if not np.any(mags > 0.0):
        mags = np.abs(freqs)
    mags = mags[mags > 0.0]
    if mags.size == 0:
        raise ValueError("cannot infer a frequency band from all-zero frequencies")
    return float(np.min(mags)), float(np.max(mags))


def vf_fit(
    freqs,
    data,
    config: VFConfig,
    real_symmetric: bool | None = None,
    full_output: bool = False,
):
    """Fit one stable pole-residue model to sampled values of one column.

    Parameters
    ----------
    freqs, data : matching complex vectors of sample points and values.
    config : VFConfig.
    real_symmetric : force or forbid the realified (conjugate-exact) path;
        None autodetects from the data.
    full_output : also return a VFInfo with convergence diagnostics.

    Returns
    -------
    PoleResidueModel (and VFInfo when full_output is set). Non-convergence
    emits NotConvergedWarning and returns the best iterate; it is not fatal.
    """
    freqs = np.asarray(freqs, dtype=np.complex128)
    data = np.asarray(data, dtype=np.complex128)
    if freqs.ndim != 1 or freqs.shape != data.shape:
        raise ShapeMismatchError("freqs and data must be matching vectors")
    if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(data))):
        raise NonFiniteError("freqs and data must be finite")
    nu = config.order
    if freqs.size < 2 * nu:
        warnings.warn(
            f"{freqs.size} samples for order {nu}; at least {2 * nu} are recommended",
            UserWarning,
            stacklevel=2,
        )
    rs = _detect_real_symmetric(freqs, data) if real_symmetric is None else bool(real_symmetric)

    info = VFInfo(real_symmetric=rs)
    nodes = init_nodes(*_frequency_band(freqs), nu)
    weights = config.freq_weights
    best_res = np.inf
    best_nodes = nodes

    for _ in range(config.max_iters):
        nodes = _avoid_sample_collisions(nodes, freqs)
        psi, phi, res, _ = _solve_step(freqs, data, weights, nodes, rs, False)
        info.iterations += 1
        info.sk_residuals.append(res)
        if float(np.max(np.abs(phi))) <= config.residue_tol:
            best_nodes = nodes
            info.converged = True
            break
        new_nodes = relocate_poles(nodes, phi, real_symmetric=rs)
        if config.flip_unstable:
            new_nodes = _flip_canonical(new_nodes, rs)
        new_nodes = _avoid_sample_collisions(new_nodes, freqs)
        # the iteration can wander off an already good pole set when the
        # data is not exactly representable at this order, so keep the
        # relocation with the smallest true fit residual
        _, _, true_res, _ = _solve_step(freqs, data, weights, new_nodes, rs, True)
        if true_res < best_res:
            best_res = true_res
            best_nodes = new_nodes
        move = _node_displacement(nodes, new_nodes)
        nodes = new_nodes
        if move <= config.node_move_tol:
            info.converged = True
            break

    if info.converged and nodes is not best_nodes:
        _, _, last_res, _ = _solve_step(freqs, data, weights, nodes, rs, True)
        if last_res <= best_res:
            best_nodes = nodes
    nodes = best_nodes
    if not config.flip_unstable and np.any(nodes.real >= 0.0):
        raise UnstableError("final nodes are unstable and flipping is disabled")
    psi, _, final_res, _ = _solve_step(freqs, data, weights, nodes, rs, True)
    info.final_residual = final_res
    if not info.converged:
        warnings.warn(
            f"no convergence in {config.max_iters} iterations "
            f"(final residual {final_res:.3e})",
            NotConvergedWarning,
            stacklevel=2,
        )
    model = PoleResidueModel(poles=nodes, residues=psi, real_flag=rs)
    return (model, info) if full_output else model


def _flip_canonical(nodes: np.ndarray, real_symmetric: bool) -> np.ndarray:
    if not real_symmetric:
        return flip_unstable(nodes)
    reals, pairs = _split_nodes(nodes)
    flipped_reals = flip_unstable(reals).real
    flipped_pairs = flip_unstable(pairs)
    return _merge_nodes(np.sort(flipped_reals), flipped_pairs)


def _node_displacement(old: np.ndarray, new: np.ndarray) -> float:
    a = np.sort_complex(old)
    b = np.sort_complex(new)
    return float(np.linalg.norm(b - a) / max(np.linalg.norm(a), np.finfo(float).tiny))


def _avoid_sample_collisions(nodes: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """Nudge any node that exactly hits a sample frequency (rare; keeps the
    Cauchy matrix finite without changing the fit measurably)."""
    dists = np.min(np.abs(freqs[:, None] - nodes[None, :]), axis=0)
    if not np.any(dists == 0.0):
        return nodes
    nodes = nodes.copy()
    hit = dists == 0.0
    nodes[hit] -= 1e-8 * np.maximum(1.0, np.abs(nodes[hit]))
    return nodes
