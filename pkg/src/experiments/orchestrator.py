"""
Experiment Orchestrator

Coordinates the experiment runners
Tracks step progress and collects acceptance checks
Compiles the final run summary
"""

from typing import Any, Dict, List, Optional
import logging
import time

import pandas as pd

from src.config import settings
from src.experiments.channels_experiment import ChannelsExperiment
from src.experiments.checks import failed, raise_on_failure
from src.experiments.envelope_experiment import EnvelopeExperiment
from src.experiments.evolve_experiment import EvolveExperiment
from src.experiments.levine_experiment import LevineExperiment
from src.experiments.stationary_experiment import StationaryExperiment
from src.models.schemas import CheckResult, ExperimentConfig, ExperimentTag
from src.services import ArtifactService, BasisService

logger = logging.getLogger(__name__)

SUITE_ORDER = [
    ExperimentTag.CHANNELS,
    ExperimentTag.STATIONARY,
    ExperimentTag.EVOLVE,
    ExperimentTag.LEVINE,
    ExperimentTag.ENVELOPE,
]


class ExperimentOrchestrator:
    """
    Runs one experiment, or the whole suite for verify-all, against a shared
    basis service and a single artifact writer.
    """

    def __init__(self, config: ExperimentConfig, basis_service: Optional[BasisService] = None):
        self.config = config
        self.basis_service = basis_service or BasisService(settings.basis_cache_dir)

        self.experiments = {
            ExperimentTag.CHANNELS: ChannelsExperiment(config, self.basis_service),
            ExperimentTag.STATIONARY: StationaryExperiment(config, self.basis_service),
            ExperimentTag.EVOLVE: EvolveExperiment(config, self.basis_service),
            ExperimentTag.LEVINE: LevineExperiment(config, self.basis_service),
            ExperimentTag.ENVELOPE: EnvelopeExperiment(config, self.basis_service),
        }

    def selected(self) -> List[ExperimentTag]:
        if self.config.experiment == ExperimentTag.VERIFY_ALL:
            return list(SUITE_ORDER)
        return [self.config.experiment]

    def run(self, artifacts: ArtifactService) -> Dict[str, Any]:
        """
        Validate, run the selected experiments in order and write checks.csv.

        Raises AcceptanceFailure after all outputs are written when any check failed.
        """
        self.config.check_causality()
        start_time = time.time()
        tags = self.selected()
        logger.info("Starting %s (d=%d, p=%d, N=%d)", self.config.experiment.value,
                    self.config.d, self.config.p, self.config.grid.N)

        checks: List[CheckResult] = []
        summaries: Dict[str, Any] = {}
        for i, tag in enumerate(tags, start=1):
            logger.info("[%d/%d] %s ...", i, len(tags), tag.value)
            result = self.experiments[tag].run(artifacts)
            for check in result["checks"]:
                check.name = f"{tag.value}.{check.name}"
            checks.extend(result["checks"])
            summaries[tag.value] = result["summary"]
            bad = failed(result["checks"])
            logger.info("  ✓ %d checks, %d failed", len(result["checks"]), len(bad))
            for check in bad:
                logger.warning("  ✗ %s: value=%s threshold=%s", check.name, check.value, check.threshold)

        artifacts.write_csv("checks.csv", pd.DataFrame({
            "name": [c.name for c in checks],
            "passed": [int(c.passed) for c in checks],
            "value": [c.value for c in checks],
            "threshold": [c.threshold for c in checks],
        }), schema="checks")
        artifacts.write_json("summary.json", summaries)

        total_time = time.time() - start_time
        logger.info("Finished in %.2fs: %d/%d checks passed", total_time,
                    len(checks) - len(failed(checks)), len(checks))
        raise_on_failure(self.config.experiment.value, checks)

        return {
            "experiment": self.config.experiment.value,
            "checks": checks,
            "summaries": summaries,
            "metadata": {
                "total_time": round(total_time, 2),
                "experiments": [t.value for t in tags],
            },
        }
