"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid mesh, arrangement or run configuration."""


class DivergentMomentError(ValueError):
    """A kernel moment does not exist on the requested interval."""


class SingularSystemError(ArithmeticError):
    """Banded factorization hit a numerically zero pivot."""
