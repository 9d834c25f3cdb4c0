"""Exception taxonomy shared by all ccr_lab modules.

Two exit-relevant base classes: ValidationError means the inputs violate a
documented precondition (CLI exit 2); NumericalCheckError means the inputs
were admissible but a numerical consistency check failed (CLI exit 3).
"""


class CcrLabError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CcrLabError):
    """Input violates a documented precondition or schema."""


class NumericalCheckError(CcrLabError):
    """A numerical consistency check failed on admissible input."""


# symbolic algebra

class ScalarModeMismatchError(ValidationError):
    """Exact-rational and floating scalars mixed in one computation."""


class InvalidSymmetryError(ValidationError):
    """Map neither preserves nor flips the pairing form within tolerance."""


class ArityError(ValidationError):
    """Probe count does not match the top degree of the element."""


# quasifree states

class ParityError(ValidationError):
    """Pairing enumeration requested for an odd number of slots."""


class IncompleteKernelError(ValidationError):
    """Two-point kernel has no entry for a requested index pair."""


class KernelInconsistencyError(NumericalCheckError):
    """Kernel violates the antisymmetric-part constraints (non-hermitian Gram)."""


# phase space

class InvalidCovarianceError(ValidationError):
    """Covariance/symplectic pair fails positivity or the norm bound."""


class InternalInconsistencyError(NumericalCheckError):
    """Two independent purity checks disagree."""


class SpectrumNotGappedError(ValidationError):
    """Mode frequencies are not bounded away from zero."""


class TruncationInsufficientError(ValidationError):
    """Fock cutoff too small for the requested check."""


# lattice propagator

class CausalContaminationError(ValidationError):
    """Support's influence cone reaches the grid boundary."""


class InvalidSliceError(ValidationError):
    """Surface-form slice intersects a source support."""


class WindowTooThinError(ValidationError):
    """Compression window narrower than four time steps."""


# Minkowski kernels

class OnLightconeSingularError(ValidationError):
    """Two-point kernel requested exactly on the light cone at eps = 0."""


class QuadratureFailureError(NumericalCheckError):
    """Oscillatory quadrature did not converge; carries a residual estimate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OrderGuardError(ValidationError):
    """Parametrix order above the supported maximum."""


class TailTruncationError(NumericalCheckError):
    """Momentum profile does not decay inside the sampled window."""


# Wick / Hadamard ordering

class OrderingKernelInvalidError(ValidationError):
    """Ordering kernel's antisymmetric part disagrees with (i/2)E."""


class InvalidDifferenceError(ValidationError):
    """Difference kernel is not symmetric."""


class DegreeGuardError(ValidationError):
    """Operation requested above its documented degree guard."""


class ResolutionError(ValidationError):
    """Grid too coarse for the requested derivative accuracy."""
