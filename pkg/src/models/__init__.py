"""
Pydantic Models and Schemas
"""

from .schemas import (
    ExperimentTag,
    RunOutcome,
    ExperimentConfig,
    ChannelReport,
    RunReport,
    EnvelopeReport,
    TailsReport,
    StationaryReport,
    CheckResult,
    Manifest,
)

__all__ = [
    "ExperimentTag",
    "RunOutcome",
    "ExperimentConfig",
    "ChannelReport",
    "RunReport",
    "EnvelopeReport",
    "TailsReport",
    "StationaryReport",
    "CheckResult",
    "Manifest",
]
