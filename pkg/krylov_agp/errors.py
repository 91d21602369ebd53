"""
Exception hierarchy.

Library code raises these; only the command-line entry point turns them
into exit codes (see ``EXIT_CODES``).
"""

from __future__ import annotations

__all__ = [
    "BoundViolation",
    "ConfigError",
    "DimensionError",
    "DivergenceError",
    "DomainError",
    "EXIT_CODES",
    "KrylovAgpError",
    "ModelError",
    "QuadratureError",
    "ResourceError",
    "exit_code_for",
]


class KrylovAgpError(Exception):
    """Base class for every error raised by krylov_agp."""


class DimensionError(KrylovAgpError, ValueError):
    """Operands disagree on site count, backend or matrix shape."""


class DomainError(KrylovAgpError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DivergenceError(DomainError):
    """A regulated quantity diverges, typically μ = 0 on a degenerate spectrum."""


class QuadratureError(KrylovAgpError):
    """An integral failed to converge to the requested tolerance."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (partial value {value:.6g}, error estimate {error:.3g})")
        self.value = value
        self.error = error


class BoundViolation(KrylovAgpError):
    """A computed norm exceeds the M/μ² bound."""


class ResourceError(KrylovAgpError):
    """A dense-representation or memory cap was exceeded."""


class ConfigError(KrylovAgpError, ValueError):
    """Invalid experiment configuration."""


class ModelError(ConfigError):
    """Unknown model or invalid model parameters."""


# Checked in order; subclasses must precede their bases.
EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (ConfigError, 2),
    (ResourceError, 4),
    (KrylovAgpError, 3),
)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the command-line exit code, 1 if unknown."""
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1
