"""Exception types raised across the package."""


class SqueezeTrapError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SqueezeTrapError, ValueError):
    pass


class DomainError(SqueezeTrapError, ValueError):
    """A point lies outside the open unit disk."""


class InvalidStateError(SqueezeTrapError, ValueError):
    """A (xi, eta, sigma) triple violates sigma**2 == xi*eta - 1."""


class UnsupportedOrderError(SqueezeTrapError, ValueError):
    pass


class TruncationError(SqueezeTrapError, RuntimeError):
    """The Fock-space truncation is too small for the requested state."""


class NumericalError(SqueezeTrapError, RuntimeError):
    pass


class DivergenceError(NumericalError):
    """Integration approached the disk boundary or the step size underflowed.

    Attributes:
        partial: Whatever was integrated before the failure (may be ``None``).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UndefinedSpectrumError(SqueezeTrapError, ValueError):
    """A quasienergy was requested for an unstable mode."""


class ConfigError(SqueezeTrapError, ValueError):
    """Configuration failed validation.

    Attributes:
        violations: list of ``(field_path, message)`` pairs, one per problem.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{path}: {msg}" for path, msg in self.violations]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
