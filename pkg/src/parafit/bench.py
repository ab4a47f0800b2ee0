"""Benchmark transfer functions used for data generation and validation.

Three families:

* a 26-state block-diagonal system whose parameter enters through a rational
  mixture of subsystem responses,
* a mass-spring chain with a stiffness scale parameter,
* a convection-diffusion plate with two convection parameters.

Each family is a frozen spec object plus an evaluator; `sample_model` turns
an evaluator into a dataset on a frequency/parameter grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ._threads import ordered_map
from .exceptions import ParameterPoleHitError, ShapeMismatchError, SingularSystemError
from .models import FrequencyResponseDataset, _as_complex_vector
from .multiparam import FrequencyResponseDataset2

__all__ = [
    "PenzlSpec",
    "penzl_eval",
    "ChainSpec",
    "chain_eval",
    "ConvDiffSpec",
    "convdiff_eval",
    "sample_model",
]

_PENZL_ZETAS = (0.0, 2.0 / 7.0, 4.0 / 7.0, 6.0 / 7.0, 8.0 / 7.0, 10.0 / 7.0)
_PENZL_PARAM_POLES = (0.4, 2.0 + 1.5j, 2.0 - 1.5j, 4.0 + 0.8j, 4.0 - 0.8j, 5.1)


def _penzl_matrices(zeta: float) -> tuple[np.ndarray, np.ndarray]:
    rot = np.array([[-1.0, 100.0], [-100.0, -1.0]])
    a = np.zeros((26, 26))
    a[0:2, 0:2] = (zeta + 1.0) ** 2 * rot
    a[2:4, 2:4] = np.array([[-1.0, 200.0], [-200.0, -1.0]])
    a[4:6, 4:6] = np.array([[-1.0, 400.0], [-400.0, -1.0]])
    a[6:26, 6:26] = zeta * np.diag(-np.arange(1.0, 21.0))
    b = np.zeros(26)
    b[0:6] = 10.0
    b[25] = zeta + 1.0
    return a, b


@dataclass(frozen=True)
class PenzlSpec:
    """Mixture of block-diagonal subsystems, rational in the parameter.

    H(s, p) = sum_k mixing[k] / (p - param_poles[k]) * G_k(s) where G_k is
    the transfer function of the 26-state subsystem built from zetas[k].
    The subsystem with zeta = 0 has an eigenvalue at the origin, so s = 0
    is not evaluable.
    """

    zetas: tuple = _PENZL_ZETAS
    param_poles: tuple = _PENZL_PARAM_POLES
    mixing: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    real_system = True

    def __post_init__(self):
        if len(self.zetas) != len(self.param_poles):
            raise ShapeMismatchError("zetas and param_poles must have equal length")
        mixing = self.mixing
        if mixing is None:
            mixing = (1.0,) * len(self.zetas)
        elif len(mixing) != len(self.zetas):
            raise ShapeMismatchError("mixing must match zetas in length")
        object.__setattr__(self, "mixing", tuple(complex(m) for m in mixing))

    def subsystem_value(self, k: int, s: complex) -> complex:
        key = (k, complex(s))
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        a, b = _penzl_matrices(self.zetas[k])
        try:
            x = scipy.linalg.solve(complex(s) * np.eye(26) - a, b.astype(np.complex128))
        except scipy.linalg.LinAlgError as exc:
            raise SingularSystemError(f"resolvent is singular at s = {s}") from exc
        if not np.all(np.isfinite(x)):
            raise SingularSystemError(f"resolvent is singular at s = {s}")
        value = complex(b @ x)
        self._cache[key] = value
        return value

    def eval(self, s: complex, p: complex) -> complex:
        return penzl_eval(self, s, p)


def penzl_eval(spec: PenzlSpec, s: complex, p: complex) -> complex:
    """H(s, p) of the block-diagonal mixture benchmark."""
    total = 0.0 + 0.0j
    for k, pole in enumerate(spec.param_poles):
        gap = complex(p) - complex(pole)
        if abs(gap) < 1e-12:
            raise ParameterPoleHitError(f"parameter {p} hits the model pole {pole}")
        total += spec.mixing[k] / gap * spec.subsystem_value(k, s)
    return total


@dataclass(frozen=True)
class ChainSpec:
    """Mass-spring chain, n masses, stiffness scaled by the parameter.

    M = I/n, K = n * tridiag(-1, 2, -1), damping M/2 + pK,
    H(s, p) = e_n^T (s^2 M + s (M/2 + pK) + K)^{-1} e_n.
    """

    n: int = 200

    real_system = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chain needs at least two masses")

    def eval(self, s: complex, p: complex) -> complex:
        return chain_eval(self, s, p)


def chain_eval(spec: ChainSpec, s: complex, p: complex) -> complex:
    """Transfer function of the chain via one tridiagonal solve."""
    n = spec.n
    s = complex(s)
    p = complex(p)
    m_diag = 1.0 / n
    # s^2 M + s (M/2 + p K) + K, tridiagonal with constant bands
    diag = s * s * m_diag + s * (0.5 * m_diag + p * 2.0 * n) + 2.0 * n
    off = s * p * (-float(n)) + (-float(n))
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = off
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[-1] = 1.0
    try:
        x = scipy.linalg.solve_banded((1, 1), ab, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"chain resolvent is singular at s = {s}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"chain resolvent is singular at s = {s}")
    return complex(x[-1])


@dataclass(frozen=True)
class ConvDiffSpec:
    """Convection-diffusion on the unit square, Dirichlet boundary.

    State matrix A(p, q) = A0 + p A1 + q A2 on an N-by-N interior grid:
    A0 the 5-point Laplacian, A1 and A2 centered first differences in the
    two coordinates. The input is an indicator of the strip z1 <= 0.2, the
    output integrates the strip z1 >= 0.8 (weight h^2 per cell).
    """

    grid_n: int = 20
    _built: dict = field(default_factory=dict, repr=False, compare=False)

    real_system = True

    def __post_init__(self):
        # the stencils need two interior nodes per direction
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")

    def matrices(self):
        built = self._built.get("ops")
        if built is not None:
            return built
        n = self.grid_n
        h = 1.0 / (n + 1)
        size = n * n
        eye = scipy.sparse.identity(n, format="csr")
        d2 = scipy.sparse.diags(
            [np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]
        ) / h**2
        d1 = scipy.sparse.diags(
            [-np.ones(n - 1), np.ones(n - 1)], [-1, 1]
        ) / (2.0 * h)
        # index = (i - 1) * n + (j - 1), i along z1, j along z2
        a0 = (scipy.sparse.kron(d2, eye) + scipy.sparse.kron(eye, d2)).tocsc()
        a1 = scipy.sparse.kron(d1, eye).tocsc()
        a2 = scipy.sparse.kron(eye, d1).tocsc()
        z1 = h * np.arange(1.0, n + 1.0)
        b = np.repeat((z1 <= 0.2).astype(np.float64), n)
        c = np.repeat((z1 >= 0.8).astype(np.float64), n) * h**2
        built = (a0, a1, a2, b, c, scipy.sparse.identity(size, format="csc"))
        self._built["ops"] = built
        return built

    def eval(self, s: complex, p: complex, q: complex) -> complex:
        return convdiff_eval(self, s, p, q)


def convdiff_eval(spec: ConvDiffSpec, s: complex, p: complex, q: complex) -> complex:
    """Transfer function of the convection-diffusion plate, one sparse solve."""
    a0, a1, a2, b, c, eye = spec.matrices()
    mat = (complex(s) * eye - (a0 + complex(p) * a1 + complex(q) * a2)).tocsc()
    try:
        lu = scipy.sparse.linalg.splu(mat)
        x = lu.solve(b.astype(np.complex128))
    except RuntimeError as exc:
        raise SingularSystemError(f"resolvent is singular at s = {s}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"resolvent is singular at s = {s}")
    return complex(c @ x)


def sample_model(evaluator, freqs, params, params_q=None):
    """Evaluate a benchmark on a grid and wrap the values as a dataset.

    evaluator : object with .eval(s, p) (or .eval(s, p, q) when params_q is
        given); a real_system attribute marks real state-space data.
    Returns FrequencyResponseDataset, or FrequencyResponseDataset2 with
    q-major columns when params_q is not None.
    """
    freqs = _as_complex_vector("frequencies", freqs)
    params = _as_complex_vector("parameters", params)
    real_symmetric = bool(
        getattr(evaluator, "real_system", False)
        and np.allclose(params.imag, 0.0)
    )
    if params_q is None:

        def column(j):
            return np.array([evaluator.eval(s, params[j]) for s in freqs])

        samples = np.column_stack(ordered_map(column, range(params.size)))
        return FrequencyResponseDataset(
            frequencies=freqs,
            parameters=params,
            samples=samples,
            real_symmetric=real_symmetric,
        )

    params_q = _as_complex_vector("parameters_q", params_q)
    real_symmetric = real_symmetric and bool(np.allclose(params_q.imag, 0.0))
    grid = [(p, q) for p in params for q in params_q]

    def column2(idx):
        p, q = grid[idx]
        return np.array([evaluator.eval(s, p, q) for s in freqs])

    samples = np.column_stack(ordered_map(column2, range(len(grid))))
    return FrequencyResponseDataset2(
        frequencies=freqs,
        parameters_p=params,
        parameters_q=params_q,
        samples=samples,
        real_symmetric=real_symmetric,
    )
