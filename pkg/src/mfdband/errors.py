"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A scalar or structural parameter is out of its legal range."""


class ShapeError(ValueError):
    """An array argument has the wrong length or shape."""


class SpaceMismatchError(ValueError):
    """A field carries the wrong space tag for the requested operator."""


class DegenerateInputError(ValueError):
    """An input vector is numerically degenerate (e.g. zero norm)."""


class SingularPreconditionerError(RuntimeError):
    """The direct preconditioner solve hit a zero frequency denominator."""


class FactorizationError(RuntimeError):
    """An incomplete or complete factorization broke down."""


class SolverFailureError(RuntimeError):
    """The eigensolver failed to deliver a usable result."""


class ConfigError(ValueError):
    """A run configuration is malformed or inconsistent."""
