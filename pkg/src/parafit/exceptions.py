"""Error and warning taxonomy shared by all parafit modules."""

from __future__ import annotations


class ParafitError(Exception):
    """Base class for all parafit errors."""


class ShapeMismatchError(ParafitError, ValueError):
    """Array arguments have inconsistent or invalid shapes."""


class NonFiniteError(ParafitError, ValueError):
    """An input or computed quantity contains NaN or Inf."""


class SingularMatrixError(ParafitError):
    """A square solve met a numerically singular matrix."""


class NotPositiveDefiniteError(ParafitError):
    """Cholesky factorization failed; matrix is not positive definite."""


class NoConvergenceError(ParafitError):
    """An eigenvalue iteration failed to converge."""


class PoleEvaluationError(ParafitError):
    """Evaluation point coincides with a model pole."""


class BasisPoleHitError(ParafitError):
    """Parameter value coincides with a basis pole."""


class SingularResolventError(ParafitError):
    """(sI - A) was numerically singular at the requested point."""


class UnstableError(ParafitError):
    """Final poles are unstable and pole flipping was disabled."""


class UnstableSystemError(ParafitError):
    """Operation requires a stable system but unstable poles are present."""


class GuardViolationError(ParafitError):
    """Basis poles violate the guard margin around the parameter interval."""


class ProblemTooLargeError(ParafitError):
    """Problem size exceeds a hard materialization or state-count guard."""


class BasisMismatchError(ParafitError):
    """Two models do not share the same parametric basis."""


class SingularSystemError(ParafitError):
    """Benchmark system matrix was singular at the evaluation point."""


class ParameterPoleHitError(ParafitError):
    """Benchmark parameter coincides with one of its parameter poles."""


class OutOfRangeError(ParafitError, ValueError):
    """Index argument lies outside its admissible range."""


class RankDeficientWarning(UserWarning):
    """Least-squares system had numerically deficient rank."""


class NotConvergedWarning(UserWarning):
    """Iteration hit its budget before meeting its tolerance."""


class DuplicatePolesWarning(UserWarning):
    """Duplicate poles were perturbed to make a diagonal realization valid."""
