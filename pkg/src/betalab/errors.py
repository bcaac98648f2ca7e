"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): domain /
validation problems with the input, and numerical precision or mixing
problems that a bigger budget might fix.
"""


class BetalabError(Exception):
    """Base class for all package errors."""


class DomainError(BetalabError, ValueError):
    """Argument outside the domain of an operation."""


class ParseError(DomainError):
    """Malformed configuration or coefficient list."""


class NotOneCutError(DomainError):
    """Equilibrium support is not a single interval (condition C1)."""


class ConditionViolation(DomainError):
    """An equilibrium condition (C1/C2) failed; ``report`` holds the details."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class ContourError(DomainError):
    """A zero of P lies inside the requested contour."""


class PathError(DomainError):
    """One-cut property lost along the interpolation V_t."""


class UnsupportedSizeError(DomainError):
    """Exact quadrature requested for too many eigenvalues."""


class StructuralError(BetalabError):
    """A matrix identity (band structure, skew-symmetry, T_n agreement) failed."""


class PrecisionError(BetalabError):
    """Quadrature or orthogonality did not reach the requested accuracy."""


class InconsistencyError(PrecisionError):
    """Normalization of the equilibrium density is inconsistent."""


class AccuracyError(PrecisionError):
    """Contour quadrature did not converge under node doubling."""


class InvertibilityError(PrecisionError):
    """A small correction matrix is numerically singular."""


class MixingError(BetalabError):
    """Metropolis acceptance could not be tuned into a usable range."""
