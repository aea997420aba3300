"""Exception types shared across the package."""


class FracHardyError(Exception):
    """Base class for all package-specific errors."""


class DomainValidationError(FracHardyError, ValueError):
    """Invalid parameter or domain specification."""


class ShapeMismatchError(FracHardyError, ValueError):
    """Operands built on different grids or with incompatible shapes."""


class AssemblyError(FracHardyError):
    """Assembled operator violates a structural guarantee (signals a quadrature defect)."""


class IrreducibilityError(AssemblyError):
    """Ground state came out with mixed signs beyond tolerance."""


class ConditioningError(FracHardyError):
    """Matrix numerically singular or too ill-conditioned to invert reliably."""

    def __init__(self, message: str, cond_estimate: float | None = None):
        super().__init__(message)
        self.cond_estimate = cond_estimate


class InsufficientDataError(FracHardyError, ValueError):
    """Too few sample points in the requested window."""


class UnderflowError(FracHardyError):
    """Requested evaluation underflows double precision (e.g. heat kernel at huge t)."""


class ResourceLimitError(FracHardyError):
    """Operation would exceed the configured memory budget."""
