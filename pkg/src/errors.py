"""
Exception hierarchy

Every error carries the process exit code the CLI reports for it and
serializes to the machine-readable error JSON written next to the manifest.
"""

from typing import Any, Dict, Optional


class RadialWaveError(Exception):
    """Base class for all radialwave-lab errors"""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


# Validation failures (exit 2)

class ValidationError(RadialWaveError):
    exit_code = 2


class InvalidParams(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class RegionError(ValidationError):
    pass


class CausalityError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class InvalidExponents(ValidationError):
    pass


class RangeError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


# Numerical failures (exit 3)

class NumericalFailure(RadialWaveError):
    exit_code = 3


class IllConditioned(NumericalFailure):
    pass


class SourceError(NumericalFailure):
    pass


class EmptyBlock(NumericalFailure):
    pass


class ShootFailure(NumericalFailure):
    pass


# Acceptance checks (exit 4)

class AcceptanceFailure(RadialWaveError):
    exit_code = 4
