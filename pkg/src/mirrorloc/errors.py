"""Exception types raised by the simulation and analysis layers."""


class MirrorLocError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(MirrorLocError, ValueError):
    pass


class IntegrationDivergedError(MirrorLocError, ArithmeticError):
    """A classical trajectory left the finite domain.

    ``last_tau`` is the last time at which every state was still finite.
    """

    def __init__(self, last_tau, message=None):
        self.last_tau = float(last_tau)
        super().__init__(message or f"integration diverged after tau={self.last_tau:.6g}")


class PacketOutsideGridError(MirrorLocError, ValueError):
    pass


class FitDomainError(MirrorLocError, ValueError):
    pass


class InsufficientTailError(MirrorLocError, ValueError):
    pass


class ConfigError(MirrorLocError, ValueError):
    """Bad configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(message if key is None else f"{key}: {message}")


class InvalidRunError(MirrorLocError, RuntimeError):
    """A run finished but failed its physics diagnostics (e.g. grid leakage)."""
