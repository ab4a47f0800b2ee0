"""Relative error metrics on a sampled frequency grid.

All three take surrogate and reference values on a common grid; the H2
variant integrates over the imaginary axis with the trapezoid rule on the
sampled angular frequencies, so it measures the band covered by the grid.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeMismatchError

__all__ = ["rms_rel", "h2_rel", "hinf_rel"]

_TINY = np.finfo(np.float64).tiny


def _pair(fit, ref) -> tuple[np.ndarray, np.ndarray]:
    fit = np.asarray(fit, dtype=np.complex128).ravel()
    ref = np.asarray(ref, dtype=np.complex128).ravel()
    if fit.shape != ref.shape:
        raise ShapeMismatchError("surrogate and reference grids differ in size")
    return fit, ref


def rms_rel(fit, ref) -> float:
    """Root-mean-square error over the grid, relative to the reference rms."""
    fit, ref = _pair(fit, ref)
    return float(np.linalg.norm(fit - ref) / max(np.linalg.norm(ref), _TINY))


def h2_rel(fit, ref, omega) -> float:
    """Relative L2 error in frequency, trapezoid rule over the sampled band."""
    fit, ref = _pair(fit, ref)
    omega = np.asarray(omega, dtype=np.float64).ravel()
    if omega.size != fit.size:
        raise ShapeMismatchError("omega grid does not match the sample count")
    if omega.size < 2 or np.any(np.diff(omega) <= 0.0):
        raise ValueError("omega must be strictly increasing with at least 2 points")
    err = np.trapezoid(np.abs(fit - ref) ** 2, omega)
    ref_energy = np.trapezoid(np.abs(ref) ** 2, omega)
    return float(np.sqrt(err / max(ref_energy, _TINY)))


def hinf_rel(fit, ref) -> float:
    """Peak error over the grid, relative to the reference peak."""
    fit, ref = _pair(fit, ref)
    return float(np.max(np.abs(fit - ref)) / max(np.max(np.abs(ref)), _TINY))
