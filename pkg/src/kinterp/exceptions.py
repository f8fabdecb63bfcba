"""Exception hierarchy shared by all kinterp modules."""


class KInterpError(Exception):
    """Base class for every error raised by kinterp."""


class DimensionError(KInterpError, ValueError):
    """Raised when vectors, matrices or norms live on different spaces."""


class DomainError(KInterpError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class SpecError(KInterpError, ValueError):
    """Raised for malformed norm, operator or run specifications."""


class UnsupportedError(KInterpError):
    """Raised when an exact method is requested for a non-polyhedral norm."""


class PrecisionError(KInterpError):
    """Raised when a numerical procedure fails to reach its tolerance.

    The ``partial`` attribute carries whatever was computed before giving up.
    """

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class InputError(KInterpError, ValueError):
    """Raised when a caller-supplied decomposition violates its precondition."""


class VerificationError(KInterpError):
    """Raised when a post-hoc verification of a result fails."""


class InconsistencyError(KInterpError):
    """Raised when checks that must agree return a mixed verdict."""
