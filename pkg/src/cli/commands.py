"""
Command-line entry: radialwave <experiment> [--config FILE] [flags]

Configuration precedence is model defaults < TOML file < command-line flags.
Every run writes manifest.json into its output directory, also on failure.
"""

import argparse
import json
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError as PydanticValidationError

from src.config import settings
from src.errors import ConfigError, RadialWaveError
from src.experiments import ExperimentOrchestrator
from src.models.schemas import ExperimentConfig
from src.services import ArtifactService

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
    """Single stream handler on the root logger."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    value = logging.getLevelName(level.upper())
    root.setLevel(value if isinstance(value, int) else logging.INFO)
    logging.captureWarnings(True)


# flag name -> dotted config path
COMMON_FLAGS: Dict[str, str] = {
    "d": "d",
    "p": "p",
    "N": "grid.N",
    "R_max": "grid.R_max",
    "seed": "seed",
    "workers": "workers",
    "output_dir": "output_dir",
}

EXPERIMENT_FLAGS: Dict[str, Dict[str, str]] = {
    "channels": {"R": "channels.R", "R1": "channels.R1", "T": "channels.T",
                 "samples": "channels.samples"},
    "stationary": {"x0": "stationary.x0", "s0": "stationary.s0", "s_min": "stationary.s_min"},
    "evolve": {"amplitude": "evolve.amplitude", "dt": "evolve.run.dt", "T": "evolve.run.T"},
    "levine": {"amplitude": "levine.amplitude", "dt": "levine.run.dt", "T": "levine.run.T"},
    "envelope": {"eta": "envelope.etas", "support": "envelope.support"},
    "verify-all": {},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radialwave",
                                     description="Radial focusing wave equation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENT_FLAGS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", type=Path, help="TOML configuration file")
        cmd.add_argument("--log-level", default=None, help="logging level (default from settings)")
        cmd.add_argument("--d", type=int, help="odd spatial dimension")
        cmd.add_argument("--p", type=int, help="odd nonlinearity exponent")
        cmd.add_argument("--N", type=int, help="grid nodes")
        cmd.add_argument("--R-max", dest="R_max", type=float, help="outer radius")
        cmd.add_argument("--seed", type=int, help="rng seed")
        cmd.add_argument("--workers", type=int, help="worker threads for sample sweeps")
        cmd.add_argument("--output-dir", dest="output_dir", help="artifact directory")

        if name == "channels":
            cmd.add_argument("--R", type=float, help="exterior cutoff radius")
            cmd.add_argument("--R1", type=float, help="data support radius")
            cmd.add_argument("--T", type=float, help="horizon")
            cmd.add_argument("--samples", type=int, help="random data count")
        elif name == "stationary":
            cmd.add_argument("--x0", type=float, help="stable-manifold seed (limit ℓ)")
            cmd.add_argument("--s0", type=float, help="seed log-radius")
            cmd.add_argument("--s-min", dest="s_min", type=float, help="smallest log-radius")
        elif name in ("evolve", "levine"):
            cmd.add_argument("--amplitude", type=float, help="plateau height")
            cmd.add_argument("--dt", type=float, help="time step")
            cmd.add_argument("--T", type=float, help="horizon")
        elif name == "envelope":
            cmd.add_argument("--eta", type=float, action="append", help="tail level (repeatable)")
            cmd.add_argument("--support", type=float, help="random data support radius")
    return parser


def _set_dotted(data: Dict[str, Any], path: str, value: Any) -> None:
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"config key {key} is not a table", {"path": path})
    node[keys[-1]] = value


def read_toml(path: Path) -> Dict[str, Any]:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("config file not found", {"path": str(path)}) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file is not valid TOML: {exc}", {"path": str(path)}) from exc


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: Dict[str, Any] = {"seed": settings.seed, "workers": settings.workers}
    if args.config is not None:
        data.update(read_toml(args.config))
    data["experiment"] = args.command

    flags = dict(COMMON_FLAGS)
    flags.update(EXPERIMENT_FLAGS[args.command])
    for attr, path in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            _set_dotted(data, path, value)

    try:
        return ExperimentConfig.model_validate(data)
    except PydanticValidationError as exc:
        raise ConfigError("invalid configuration",
                          {"errors": json.loads(exc.json(include_url=False))}) from exc


def output_dir_for(command: str, config: Optional[ExperimentConfig]) -> Path:
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(settings.output_root) / command


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or settings.log_level)

    config: Optional[ExperimentConfig] = None
    artifacts: Optional[ArtifactService] = None
    exit_code = 1
    error: Optional[Dict[str, Any]] = None
    try:
        config = load_config(args)
        artifacts = ArtifactService(output_dir_for(args.command, config))
        ExperimentOrchestrator(config).run(artifacts)
        exit_code = 0
    except RadialWaveError as exc:
        exit_code = exc.exit_code
        error = exc.to_dict()
        logger.error("%s: %s", type(exc).__name__, exc.message)
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
    finally:
        if artifacts is None:
            artifacts = ArtifactService(output_dir_for(args.command, config))
        if error is not None:
            artifacts.write_json("error.json", error)
        echo = config.model_dump(mode="json") if config is not None else {"command": args.command}
        artifacts.write_manifest(args.command, echo, exit_code, error)
    return exit_code


def main() -> None:
    sys.exit(run())
