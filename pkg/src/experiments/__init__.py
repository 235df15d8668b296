"""
Experiment Runners

Each runner turns an ExperimentConfig into artifacts and acceptance checks;
the orchestrator sequences them for single runs and verify-all.
"""

from .orchestrator import ExperimentOrchestrator
from .channels_experiment import ChannelsExperiment
from .stationary_experiment import StationaryExperiment
from .evolve_experiment import EvolveExperiment
from .levine_experiment import LevineExperiment
from .envelope_experiment import EnvelopeExperiment

__all__ = [
    "ExperimentOrchestrator",
    "ChannelsExperiment",
    "StationaryExperiment",
    "EvolveExperiment",
    "LevineExperiment",
    "EnvelopeExperiment",
]
