"""Adaptive rational parameter bases by variable projection.

The basis poles are the only free variables: for fixed poles the optimal
coupling coefficients are eliminated through orthogonal projectors onto the
column spans of both design blocks, leaving a small nonlinear least-squares
problem over the poles. A damped Gauss-Newton iteration with an exact
projector derivative (or its Kaufman simplification, or finite differences)
drives it, with a guard margin keeping poles away from the parameter interval.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .coupled import build_design, project_real, solve_coupled
from .exceptions import GuardViolationError, NotConvergedWarning, ShapeMismatchError
from .linalg import lstsq_minnorm, pinv
from .models import (
    FrequencyResponseDataset,
    ParametricBasis,
    ParametricModel,
    _interval_distance,
    pole_residue_matrix,
)

__all__ = [
    "PoleCoordinates",
    "VarproConfig",
    "VarproInfo",
    "default_initial_poles",
    "residual",
    "jacobian",
    "fit_adaptive_basis",
]

ARMIJO_SLOPE = 1e-4
MAX_HALVINGS = 30
FD_STEP = 1e-6


@dataclass(frozen=True)
class PoleCoordinates:
    """Real coordinates of a conjugation-closed pole set.

    real_poles holds the real members; pair_poles holds one member (positive
    imaginary part) of each conjugate pair. The coordinate vector is
    [real_poles..., Re(pair_0), Im(pair_0), ...], so Gauss-Newton steps stay
    in the space of conjugation-closed sets by construction.
    """

    real_poles: np.ndarray
    pair_poles: np.ndarray

    def __post_init__(self):
        reals = np.atleast_1d(np.asarray(self.real_poles, dtype=np.float64))
        pairs = np.atleast_1d(np.asarray(self.pair_poles, dtype=np.complex128))
        if np.any(pairs.imag <= 0.0):
            raise ValueError("pair_poles must have positive imaginary parts")
        object.__setattr__(self, "real_poles", reals)
        object.__setattr__(self, "pair_poles", pairs)

    @classmethod
    def from_poles(cls, poles) -> "PoleCoordinates":
        poles = np.atleast_1d(np.asarray(poles, dtype=np.complex128))
        reals = poles[poles.imag == 0.0].real
        upper = poles[poles.imag > 0.0]
        lower = poles[poles.imag < 0.0]
        if upper.size != lower.size or not np.allclose(
            np.sort_complex(np.conj(upper)), np.sort_complex(lower)
        ):
            raise ValueError("pole set is not conjugation closed")
        return cls(real_poles=reals, pair_poles=upper)

    def to_poles(self) -> np.ndarray:
        out = np.empty(self.size, dtype=np.complex128)
        nr = self.real_poles.size
        out[:nr] = self.real_poles
        out[nr::2] = self.pair_poles
        out[nr + 1 :: 2] = np.conj(self.pair_poles)
        return out

    def to_vector(self) -> np.ndarray:
        nr = self.real_poles.size
        vec = np.empty(nr + 2 * self.pair_poles.size)
        vec[:nr] = self.real_poles
        vec[nr::2] = self.pair_poles.real
        vec[nr + 1 :: 2] = self.pair_poles.imag
        return vec

    def with_vector(self, vec: np.ndarray) -> "PoleCoordinates":
        nr = self.real_poles.size
        return PoleCoordinates(
            real_poles=vec[:nr],
            pair_poles=vec[nr::2] + 1j * vec[nr + 1 :: 2],
        )

    @property
    def size(self) -> int:
        return self.real_poles.size + 2 * self.pair_poles.size

    @property
    def n_coords(self) -> int:
        return self.real_poles.size + 2 * self.pair_poles.size


@dataclass(frozen=True)
class VarproConfig:
    max_iters: int = 100
    grad_tol: float = 1e-8
    mode: str = "golub-pereyra"
    guard_margin: float | None = None  # None: 0.05 * interval width

    def __post_init__(self):
        if self.mode not in ("golub-pereyra", "kaufman", "finite-difference"):
            raise ValueError(f"unknown jacobian mode {self.mode!r}")
        if self.guard_margin is not None and self.guard_margin <= 0.0:
            raise ValueError("guard_margin must be positive")


@dataclass
class VarproInfo:
    converged: bool = False
    iterations: int = 0
    objective_history: list = field(default_factory=list)
    grad_norm: float = np.nan


def default_initial_poles(r_p: int, interval: tuple[float, float]) -> np.ndarray:
    """Real starting poles straddling [a, b] alternately on both sides, the
    k-th pair of sides at offset (k + 1/2)(b - a)/r_p (clamped to clear the
    guard margin when r_p is large)."""
    a, b = interval
    width = b - a
    guard = 0.05 * width
    poles = np.empty(r_p, dtype=np.complex128)
    for i in range(r_p):
        offset = max((i // 2 + 0.5) * width / r_p, 1.01 * guard)
        poles[i] = a - offset if i % 2 == 0 else b + offset
    return poles


def _rational_block(params: np.ndarray, poles: np.ndarray) -> np.ndarray:
    return 1.0 / (params[:, None] - poles[None, :])


def _projector(mat: np.ndarray) -> np.ndarray:
    return mat @ pinv(mat)


def _check_guard(poles: np.ndarray, params: np.ndarray) -> None:
    """Default-margin guard for the standalone entry points; the fitter
    enforces its configurable margin through the line search instead."""
    p_real = params.real
    lo, hi = float(np.min(p_real)), float(np.max(p_real))
    guard = 0.05 * (hi - lo)
    if np.any(_interval_distance(poles, lo, hi) < guard):
        raise GuardViolationError(
            f"basis poles must stay at least {guard:.3g} from [{lo:.3g}, {hi:.3g}]"
        )


def residual(poles, a_block: np.ndarray, samples: np.ndarray, params) -> np.ndarray:
    """Projected residual vec(H - P H conj(Q)) with P, Q the orthogonal
    projectors onto the column spans of the frequency-side block and of the
    rational parameter block for the given poles (column-stacked)."""
    poles = np.atleast_1d(np.asarray(poles, dtype=np.complex128))
    params = np.atleast_1d(np.asarray(params, dtype=np.complex128))
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.shape != (a_block.shape[0], params.size):
        raise ShapeMismatchError("samples shape inconsistent with design blocks")
    _check_guard(poles, params)
    p_proj = _projector(a_block)
    q_proj = _projector(_rational_block(params, poles))
    r_mat = samples - p_proj @ samples @ np.conj(q_proj)
    return r_mat.flatten(order="F")


class _Problem:
    """Caches the frequency-side projector across Gauss-Newton iterations."""

    def __init__(self, a_block: np.ndarray, samples: np.ndarray, params: np.ndarray):
        self.samples = samples
        self.params = params
        self.p_proj = _projector(a_block)
        self.ph = self.p_proj @ samples

    def residual_vec(self, coords: PoleCoordinates) -> np.ndarray:
        q_proj = _projector(_rational_block(self.params, coords.to_poles()))
        r_mat = self.samples - self.ph @ np.conj(q_proj)
        return r_mat.flatten(order="F")

    def objective(self, coords: PoleCoordinates) -> float:
        r = self.residual_vec(coords)
        return 0.5 * float(np.real(np.vdot(r, r)))

    def jacobian_mat(self, coords: PoleCoordinates, mode: str) -> np.ndarray:
        if mode == "finite-difference":
            return self._jacobian_fd(coords)
        poles = coords.to_poles()
        b = _rational_block(self.params, poles)
        b_pinv = pinv(b)
        q_proj = b @ b_pinv
        q_perp = np.eye(b.shape[0]) - q_proj
        nr = coords.real_poles.size
        cols = []
        db_single = _rational_block(self.params, poles) ** 2  # 1/(mu - pi)^2
        for t in range(coords.n_coords):
            db = np.zeros_like(b)
            if t < nr:
                db[:, t] = db_single[:, t]
            else:
                pair_idx = (t - nr) // 2
                l1 = nr + 2 * pair_idx
                l2 = l1 + 1
                if (t - nr) % 2 == 0:  # d / d Re
                    db[:, l1] = db_single[:, l1]
                    db[:, l2] = db_single[:, l2]
                else:  # d / d Im
                    db[:, l1] = 1j * db_single[:, l1]
                    db[:, l2] = -1j * db_single[:, l2]
            m = q_perp @ db @ b_pinv
            dq = m if mode == "kaufman" else m + m.conj().T
            cols.append(-(self.ph @ np.conj(dq)).flatten(order="F"))
        return np.column_stack(cols)

    def _jacobian_fd(self, coords: PoleCoordinates) -> np.ndarray:
        vec = coords.to_vector()
        cols = []
        for t in range(vec.size):
            h = FD_STEP * max(1.0, abs(vec[t]))
            up, down = vec.copy(), vec.copy()
            up[t] += h
            down[t] -= h
            r_up = self.residual_vec(coords.with_vector(up))
            r_down = self.residual_vec(coords.with_vector(down))
            cols.append((r_up - r_down) / (2.0 * h))
        return np.column_stack(cols)


def jacobian(
    coords: PoleCoordinates,
    a_block: np.ndarray,
    samples: np.ndarray,
    params,
    mode: str = "golub-pereyra",
) -> np.ndarray:
    """Derivative of the projected residual with respect to the real pole
    coordinates. golub-pereyra uses the exact projector derivative
    dQ = Q_perp B' B^+ + (Q_perp B' B^+)^H; kaufman drops the second term;
    finite-difference uses central differences."""
    if mode not in ("golub-pereyra", "kaufman", "finite-difference"):
        raise ValueError(f"unknown jacobian mode {mode!r}")
    params = np.atleast_1d(np.asarray(params, dtype=np.complex128))
    samples = np.asarray(samples, dtype=np.complex128)
    _check_guard(coords.to_poles(), params)
    problem = _Problem(a_block, samples, params)
    return problem.jacobian_mat(coords, mode)


def _realify(mat: np.ndarray) -> np.ndarray:
    return np.vstack([mat.real, mat.imag])


def _feasible(coords: PoleCoordinates, interval: tuple[float, float], guard: float) -> bool:
    if np.any(coords.pair_poles.imag <= 0.0):
        return False
    dist = _interval_distance(coords.to_poles(), interval[0], interval[1])
    return bool(np.all(dist >= guard))


def fit_adaptive_basis(
    dataset: FrequencyResponseDataset,
    local_models,
    r_p: int,
    initial_poles=None,
    config: VarproConfig | None = None,
    enforce_real: bool = False,
    full_output: bool = False,
):
    """Optimize rational basis poles for the given local models, then solve
    the coupled problem once on the optimized basis.

    Returns (ParametricModel, poles); with full_output also a VarproInfo.
    Candidate steps that would put a pole inside the guard margin
    (config.guard_margin, default 0.05 * interval width) or collapse a
    conjugate pair are rejected during the line search. Grid weights, if
    any, are ignored on this path.
    """
    if dataset.weights is not None:
        warnings.warn(
            "adaptive-basis fitting ignores dataset weights",
            UserWarning,
            stacklevel=2,
        )
    config = config or VarproConfig()
    p_real = dataset.parameters.real
    interval = (float(np.min(p_real)), float(np.max(p_real)))
    guard = config.guard_margin
    if guard is None:
        guard = 0.05 * (interval[1] - interval[0])
    if initial_poles is None:
        initial_poles = default_initial_poles(r_p, interval)
    coords = PoleCoordinates.from_poles(initial_poles)
    if coords.size != r_p:
        raise ShapeMismatchError(f"initial poles have size {coords.size}, expected {r_p}")
    if not _feasible(coords, interval, guard):
        raise GuardViolationError("initial poles violate the guard margin")

    a_block = pole_residue_matrix(local_models, dataset.frequencies)
    problem = _Problem(a_block, dataset.samples, dataset.parameters)
    info = VarproInfo()
    f_val = problem.objective(coords)
    info.objective_history.append(f_val)

    for _ in range(config.max_iters):
        info.iterations += 1
        jac = problem.jacobian_mat(coords, config.mode)
        res = problem.residual_vec(coords)
        jac_r = _realify(jac)
        res_r = np.concatenate([res.real, res.imag])
        grad = jac_r.T @ res_r
        info.grad_norm = float(np.linalg.norm(grad))
        if info.grad_norm <= config.grad_tol:
            info.converged = True
            break
        step, _ = lstsq_minnorm(jac_r, -res_r)
        slope = float(grad @ step)
        if slope >= 0.0:
            info.converged = True  # no descent direction left
            break
        vec = coords.to_vector()
        nr = coords.real_poles.size
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = vec + t * step
            if np.any(trial[nr + 1 :: 2] <= 0.0):
                # a conjugate pair would cross the real axis; shrink instead
                t *= 0.5
                continue
            candidate = coords.with_vector(trial)
            if _feasible(candidate, interval, guard):
                f_new = problem.objective(candidate)
                if f_new <= f_val + ARMIJO_SLOPE * t * slope:
                    coords = candidate
                    f_val = f_new
                    accepted = True
                    break
            t *= 0.5
        info.objective_history.append(f_val)
        if not accepted:
            info.converged = True  # stalled: no feasible descent step left
            break
    if not info.converged:
        warnings.warn(
            f"pole optimization hit the {config.max_iters}-iteration budget",
            NotConvergedWarning,
            stacklevel=2,
        )

    poles = coords.to_poles()
    basis = ParametricBasis.rational(poles, interval, guard=guard)
    design = build_design(local_models, dataset.frequencies, basis, dataset.parameters)
    coefficients = solve_coupled(design, dataset.samples)
    real_flag = False
    if enforce_real:
        coefficients = project_real(coefficients, basis)
        real_flag = all(m.real_flag for m in local_models)
    model = ParametricModel(
        local_models=tuple(local_models),
        basis=basis,
        coefficients=coefficients,
        real_flag=real_flag,
    )
    if full_output:
        return model, poles, info
    return model, poles
