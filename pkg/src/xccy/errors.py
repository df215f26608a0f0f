"""Exception types shared across the engine."""


class XccyError(Exception):
    """Base class for all engine errors."""


class DomainError(XccyError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class StateError(XccyError, RuntimeError):
    """A regime-dependent formula was called without its required observables."""


class SingularityError(XccyError, ArithmeticError):
    """A linear solve or inversion hit a zero pivot (e.g. at settlement)."""


class NumericsError(XccyError, ArithmeticError):
    """A numerical routine produced an unusable result (e.g. non-PSD covariance)."""


class ConfigError(XccyError, ValueError):
    """A run configuration violates an invariant or contains unknown keys."""
