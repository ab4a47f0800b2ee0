"""Core data types and pointwise evaluation.

Everything downstream (local fitting, coupled least squares, adaptive bases,
compression) consumes and produces the types defined here. All types are
immutable after construction; array fields are copied in and marked read-only
so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    BasisPoleHitError,
    GuardViolationError,
    NonFiniteError,
    PoleEvaluationError,
    ShapeMismatchError,
    SingularResolventError,
)
from .linalg import solve_dense

__all__ = [
    "FrequencyResponseDataset",
    "PoleResidueModel",
    "BarycentricModel",
    "ParametricBasis",
    "ParametricModel",
    "SIMORealization",
    "CompressedParametricModel",
    "eval_pole_residue",
    "eval_basis",
    "basis_matrix",
    "eval_parametric",
    "eval_compressed",
    "pole_residue_matrix",
    "eval_parametric_grid",
    "eval_compressed_grid",
]

_POLE_GUARD = 1e-300  # evaluation treated as a pole hit below this distance


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_complex_vector(name: str, values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return _freeze(arr)


def _as_complex_matrix(name: str, values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return _freeze(arr)


def _set(obj, **fields) -> None:
    for key, value in fields.items():
        object.__setattr__(obj, key, value)


@dataclass(frozen=True)
class FrequencyResponseDataset:
    """Sampled transfer-function values on a frequency x parameter grid.

    Attributes
    ----------
    frequencies : (m_s,) complex, pairwise distinct evaluation points.
    parameters : (m_p,) complex, pairwise distinct parameter samples.
    samples : (m_s, m_p) complex values H(frequencies[i], parameters[j]).
    weights : optional (m_s, m_p) nonnegative real least-squares weights.
    real_symmetric : declares the underlying system real, i.e. values at
        conjugated points are conjugates. Checked on construction for every
        conjugate pair actually present in the grid.
    """

    frequencies: np.ndarray
    parameters: np.ndarray
    samples: np.ndarray
    weights: np.ndarray | None = None
    real_symmetric: bool = False

    def __post_init__(self):
        freqs = _as_complex_vector("frequencies", self.frequencies)
        params = _as_complex_vector("parameters", self.parameters)
        samples = _as_complex_matrix("samples", self.samples)
        if samples.shape != (freqs.size, params.size):
            raise ShapeMismatchError(
                f"samples shape {samples.shape} does not match grid "
                f"({freqs.size}, {params.size})"
            )
        if len(set(freqs.tolist())) != freqs.size:
            raise ValueError("frequencies must be pairwise distinct")
        if len(set(params.tolist())) != params.size:
            raise ValueError("parameters must be pairwise distinct")
        weights = self.weights
        if weights is not None:
            weights = np.array(weights, dtype=np.float64)
            if weights.shape != samples.shape:
                raise ShapeMismatchError(
                    f"weights shape {weights.shape} does not match samples {samples.shape}"
                )
            if not np.all(np.isfinite(weights)):
                raise NonFiniteError("weights contain non-finite entries")
            if np.any(weights < 0.0):
                raise ValueError("weights must be nonnegative")
            weights = _freeze(weights)
        _set(self, frequencies=freqs, parameters=params, samples=samples, weights=weights)
        if self.real_symmetric:
            self._check_conjugate_consistency()

    def _check_conjugate_consistency(self) -> None:
        freq_index = {complex(v): i for i, v in enumerate(self.frequencies)}
        param_index = {complex(v): j for j, v in enumerate(self.parameters)}
        for s, i in freq_index.items():
            i2 = freq_index.get(s.conjugate())
            if i2 is None:
                continue
            for p, j in param_index.items():
                j2 = param_index.get(p.conjugate())
                if j2 is None:
                    continue
                lhs = self.samples[i2, j2]
                rhs = np.conj(self.samples[i, j])
                if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
                    raise ValueError(
                        "real_symmetric set but samples are not conjugate-consistent "
                        f"at frequency {s}, parameter {p}"
                    )

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape


@dataclass(frozen=True)
class PoleResidueModel:
    """Rational function sum(residues[k] / (s - poles[k]))."""

    poles: np.ndarray
    residues: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        poles = _as_complex_vector("poles", self.poles)
        residues = _as_complex_vector("residues", self.residues)
        if poles.size != residues.size:
            raise ShapeMismatchError(
                f"poles ({poles.size}) and residues ({residues.size}) differ in length"
            )
        _set(self, poles=poles, residues=residues)

    @property
    def order(self) -> int:
        return self.poles.size

    def is_stable(self) -> bool:
        return bool(np.all(self.poles.real < 0.0))

    def eval(self, s: complex) -> complex:
        return eval_pole_residue(self, s)


@dataclass(frozen=True)
class BarycentricModel:
    """Ratio of pole-residue sums sharing nodes: n(s) / (1 + d(s)) with
    n(s) = sum(num_residues / (s - nodes)), d(s) = sum(den_residues / (s - nodes))."""

    nodes: np.ndarray
    num_residues: np.ndarray
    den_residues: np.ndarray

    def __post_init__(self):
        nodes = _as_complex_vector("nodes", self.nodes)
        num = _as_complex_vector("num_residues", self.num_residues)
        den = _as_complex_vector("den_residues", self.den_residues)
        if not (nodes.size == num.size == den.size):
            raise ShapeMismatchError("nodes, num_residues, den_residues must share length")
        _set(self, nodes=nodes, num_residues=num, den_residues=den)

    def eval(self, s: complex) -> complex:
        diffs = complex(s) - self.nodes
        if np.min(np.abs(diffs)) < _POLE_GUARD:
            raise PoleEvaluationError(f"evaluation point {s} coincides with a node")
        cauchy = 1.0 / diffs
        return complex((self.num_residues @ cauchy) / (1.0 + self.den_residues @ cauchy))


def _conjugation_permutation(poles: np.ndarray) -> np.ndarray | None:
    """Pairing rho with poles[rho[l]] == conj(poles[l]), or None if not closed."""
    n = poles.size
    scale = max(1.0, float(np.max(np.abs(poles))) if n else 1.0)
    perm = np.full(n, -1, dtype=np.intp)
    used = np.zeros(n, dtype=bool)
    for l in range(n):
        target = np.conj(poles[l])
        best, best_dist = -1, np.inf
        for m in range(n):
            if used[m]:
                continue
            dist = abs(poles[m] - target)
            if dist < best_dist:
                best, best_dist = m, dist
        if best < 0 or best_dist > 1e-12 * scale:
            return None
        perm[l] = best
        used[best] = True
    return _freeze(perm)


@dataclass(frozen=True)
class ParametricBasis:
    """Scalar basis functions of the parameter on an interval [a, b].

    kind is one of:
      "monomial"  : p^l for l = 0..degree
      "bernstein" : Bernstein polynomials of the given degree on [a, b]
      "rational"  : 1 / (p - poles[l]) with poles outside the guard margin

    conj_perm is the index permutation rho with
    P_l(conj p) == conj(P_rho[l](p)); None when the rational pole set is not
    conjugation closed (realness operations are then unavailable).
    """

    kind: str
    interval: tuple[float, float]
    degree: int | None = None
    poles: np.ndarray | None = None
    conj_perm: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        a, b = float(self.interval[0]), float(self.interval[1])
        if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
            raise ValueError(f"interval must satisfy a < b, got ({a}, {b})")
        _set(self, interval=(a, b))
        if self.kind in ("monomial", "bernstein"):
            if self.degree is None or int(self.degree) < 0:
                raise ValueError(f"{self.kind} basis needs a nonnegative degree")
            _set(self, degree=int(self.degree), poles=None)
            _set(self, conj_perm=_freeze(np.arange(self.degree + 1, dtype=np.intp)))
        elif self.kind == "rational":
            if self.poles is None:
                raise ValueError("rational basis needs poles")
            poles = _as_complex_vector("poles", self.poles)
            if len(set(poles.tolist())) != poles.size:
                raise ValueError("basis poles must be pairwise distinct")
            _set(self, degree=None, poles=poles)
            _set(self, conj_perm=_conjugation_permutation(poles))
        else:
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @classmethod
    def monomial(cls, degree: int, interval: tuple[float, float]) -> "ParametricBasis":
        return cls(kind="monomial", interval=interval, degree=degree)

    @classmethod
    def bernstein(cls, degree: int, interval: tuple[float, float]) -> "ParametricBasis":
        return cls(kind="bernstein", interval=interval, degree=degree)

    @classmethod
    def rational(
        cls,
        poles,
        interval: tuple[float, float],
        guard: float | None = None,
    ) -> "ParametricBasis":
        """Rational basis; poles must clear the guard margin around the interval
        (default 0.05 * (b - a))."""
        basis = cls(kind="rational", interval=interval, poles=poles)
        a, b = basis.interval
        margin = 0.05 * (b - a) if guard is None else float(guard)
        dist = _interval_distance(basis.poles, a, b)
        if np.any(dist < margin):
            raise GuardViolationError(
                f"basis poles come within {float(np.min(dist)):.3g} of [{a}, {b}]; "
                f"guard margin is {margin:.3g}"
            )
        return basis

    @property
    def size(self) -> int:
        if self.kind == "rational":
            return self.poles.size
        return self.degree + 1

    def eval(self, p: complex) -> np.ndarray:
        return eval_basis(self, p)


def _interval_distance(points: np.ndarray, a: float, b: float) -> np.ndarray:
    dx = np.maximum.reduce([a - points.real, np.zeros_like(points.real), points.real - b])
    return np.hypot(dx, points.imag)


@dataclass(frozen=True)
class ParametricModel:
    """Phase-1 surrogate: sum_k sum_l X[k, l] * localmodel_k(s) * basis_l(p)."""

    local_models: tuple
    basis: ParametricBasis
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
        if coeff.shape != (len(locals_), self.basis.size):
            raise ShapeMismatchError(
                f"coefficients shape {coeff.shape} does not match "
                f"({len(locals_)}, {self.basis.size})"
            )
        _set(self, local_models=locals_, coefficients=coeff)

    @property
    def order(self) -> int:
        return sum(m.order for m in self.local_models)

    def pole_set(self) -> np.ndarray:
        return np.concatenate([m.poles for m in self.local_models])

    def is_stable(self) -> bool:
        # pole locations do not depend on the parameter, so neither does this
        return all(m.is_stable() for m in self.local_models)

    def eval(self, s: complex, p: complex) -> complex:
        return eval_parametric(self, s, p)


@dataclass(frozen=True)
class SIMORealization:
    """Diagonal single-input many-output realization C (sI - diag(a))^-1 b."""

    a_diag: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = _as_complex_vector("a_diag", self.a_diag)
        b = _as_complex_vector("b", self.b)
        c = _as_complex_matrix("c", self.c)
        if b.size != a.size or c.shape[1] != a.size:
            raise ShapeMismatchError(
                f"inconsistent realization shapes a={a.shape}, b={b.shape}, c={c.shape}"
            )
        _set(self, a_diag=a, b=b, c=c)

    @property
    def order(self) -> int:
        return self.a_diag.size

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    def is_stable(self) -> bool:
        return bool(np.all(self.a_diag.real < 0.0))

    def eval(self, s: complex) -> np.ndarray:
        diffs = complex(s) - self.a_diag
        if np.min(np.abs(diffs)) < _POLE_GUARD:
            raise PoleEvaluationError(f"evaluation point {s} coincides with a pole")
        return self.c @ (self.b / diffs)


@dataclass(frozen=True)
class CompressedParametricModel:
    """Phase-2 surrogate: basis(p)^T c_red_unweighted (sI - a_red)^-1 b_red."""

    basis: ParametricBasis
    gram_chol: np.ndarray
    a_red: np.ndarray
    b_red: np.ndarray
    c_red_unweighted: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        gram_chol = _as_complex_matrix("gram_chol", self.gram_chol)
        a_red = _as_complex_matrix("a_red", self.a_red)
        b_red = _as_complex_vector("b_red", self.b_red)
        c_red = _as_complex_matrix("c_red_unweighted", self.c_red_unweighted)
        r_p = self.basis.size
        n_red = a_red.shape[0]
        if gram_chol.shape != (r_p, r_p):
            raise ShapeMismatchError(f"gram_chol shape {gram_chol.shape} != ({r_p}, {r_p})")
        if a_red.shape != (n_red, n_red) or b_red.size != n_red or c_red.shape != (r_p, n_red):
            raise ShapeMismatchError("reduced realization shapes are inconsistent")
        _set(self, gram_chol=gram_chol, a_red=a_red, b_red=b_red, c_red_unweighted=c_red)

    @property
    def order(self) -> int:
        return self.a_red.shape[0]

    def is_stable(self) -> bool:
        return bool(np.all(np.linalg.eigvals(self.a_red).real < 0.0))

    def eval(self, s: complex, p: complex) -> complex:
        return eval_compressed(self, s, p)


def eval_pole_residue(model: PoleResidueModel, s: complex) -> complex:
    """Evaluate sum(residues / (s - poles)) at one point."""
    diffs = complex(s) - model.poles
    if model.poles.size and np.min(np.abs(diffs)) < _POLE_GUARD:
        raise PoleEvaluationError(f"evaluation point {s} coincides with a pole")
    return complex(np.sum(model.residues / diffs))


def _bernstein_rows(t: np.ndarray, degree: int) -> np.ndarray:
    """All Bernstein basis values at normalized coordinates t, by the
    de Casteljau style triangular recurrence (stable on [0, 1])."""
    vals = np.zeros((t.size, degree + 1), dtype=np.complex128)
    vals[:, 0] = 1.0
    one_minus = 1.0 - t
    for k in range(1, degree + 1):
        vals[:, k] = t * vals[:, k - 1]
        for j in range(k - 1, 0, -1):
            vals[:, j] = t * vals[:, j - 1] + one_minus * vals[:, j]
        vals[:, 0] = one_minus * vals[:, 0]
    return vals


def basis_matrix(basis: ParametricBasis, params) -> np.ndarray:
    """Stacked basis rows: out[i, l] = P_l(params[i])."""
    p = np.atleast_1d(np.asarray(params, dtype=np.complex128))
    if basis.kind == "monomial":
        out = p[:, None] ** np.arange(basis.degree + 1)
    elif basis.kind == "bernstein":
        a, b = basis.interval
        out = _bernstein_rows((p - a) / (b - a), basis.degree)
    else:
        denom = p[:, None] - basis.poles[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.0 / denom
    if not np.all(np.isfinite(out)):
        raise BasisPoleHitError("parameter value hits a basis pole")
    return out


def eval_basis(basis: ParametricBasis, p: complex) -> np.ndarray:
    """Basis values (P_0(p), ..., P_{r_p - 1}(p))."""
    return basis_matrix(basis, [p])[0]


def eval_parametric(model: ParametricModel, s: complex, p: complex) -> complex:
    """Evaluate a phase-1 surrogate at one (s, p) point."""
    h = np.array([eval_pole_residue(m, s) for m in model.local_models])
    v = eval_basis(model.basis, p)
    return complex(h @ model.coefficients @ v)


def eval_compressed(model: CompressedParametricModel, s: complex, p: complex) -> complex:
    """Evaluate a phase-2 surrogate at one (s, p) point."""
    v = eval_basis(model.basis, p)
    n = model.order
    try:
        x = solve_dense(complex(s) * np.eye(n) - model.a_red, model.b_red)
    except Exception as exc:
        raise SingularResolventError(f"resolvent singular at s = {s}") from exc
    return complex(v @ (model.c_red_unweighted @ x))


def pole_residue_matrix(models, freqs) -> np.ndarray:
    """Design block A[i, k] = localmodel_k(freqs[i]), vectorized over the grid."""
    freqs = np.asarray(freqs, dtype=np.complex128)
    cols = []
    for m in models:
        cauchy = 1.0 / (freqs[:, None] - m.poles[None, :])
        cols.append(cauchy @ m.residues)
    out = np.column_stack(cols) if cols else np.zeros((freqs.size, 0), dtype=np.complex128)
    if not np.all(np.isfinite(out)):
        raise PoleEvaluationError("a frequency coincides with a local-model pole")
    return out


def eval_parametric_grid(model: ParametricModel, freqs, params) -> np.ndarray:
    """Surrogate values on a full frequency x parameter grid."""
    a = pole_residue_matrix(model.local_models, freqs)
    b = basis_matrix(model.basis, params)
    return a @ model.coefficients @ b.T


def eval_compressed_grid(model: CompressedParametricModel, freqs, params) -> np.ndarray:
    """Phase-2 surrogate values on a full frequency x parameter grid."""
    freqs = np.asarray(freqs, dtype=np.complex128)
    n = model.order
    eye = np.eye(n)
    cols = np.empty((freqs.size, model.basis.size), dtype=np.complex128)
    for i, s in enumerate(freqs):
        try:
            x = solve_dense(s * eye - model.a_red, model.b_red)
        except Exception as exc:
            raise SingularResolventError(f"resolvent singular at s = {s}") from exc
        cols[i] = model.c_red_unweighted @ x
    v = basis_matrix(model.basis, params)
    return cols @ v.T
