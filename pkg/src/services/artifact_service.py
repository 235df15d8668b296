import hashlib
import json
import logging
import platform
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
import pydantic
import scipy
from pydantic import BaseModel

import src
from src.models.schemas import Manifest

logger = logging.getLogger(__name__)

Payload = Union[BaseModel, Dict[str, Any], list]


def _jsonable(payload: Payload) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, list):
        return [_jsonable(item) for item in payload]
    if isinstance(payload, dict):
        return {str(k): _jsonable(v) for k, v in payload.items()}
    return payload


def dumps(payload: Payload) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


class ArtifactService:
    """Writes one run's CSV/JSON outputs and the manifest that indexes them"""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: Dict[str, str] = {}

    def _record(self, path: Path) -> Path:
        self.artifacts[path.name] = self.checksum(path)
        logger.debug("wrote %s", path)
        return path

    @staticmethod
    def checksum(path: Path) -> str:
        return hashlib.sha256(path.read_bytes()).hexdigest()

    def write_csv(self, name: str, frame: pd.DataFrame, schema: str, version: int = 1) -> Path:
        """CSV with a `# schema=<name>/<version>` header and 17-digit floats."""
        path = self.output_dir / name
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(f"# schema={schema}/{version}\n")
            frame.to_csv(fh, float_format="%.17g", lineterminator="\n", index=False)
        return self._record(path)

    def write_json(self, name: str, payload: Payload) -> Path:
        path = self.output_dir / name
        path.write_text(dumps(payload), encoding="utf-8")
        return self._record(path)

    @staticmethod
    def versions() -> Dict[str, str]:
        return {
            "radialwave-lab": src.__version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "pydantic": pydantic.VERSION,
        }

    def write_manifest(self, experiment: str, config: Dict[str, Any], exit_code: int,
                       error: Optional[Dict[str, Any]] = None) -> Path:
        manifest = Manifest(
            experiment=experiment,
            status="ok" if exit_code == 0 else "failed",
            exit_code=exit_code,
            config=config,
            versions=self.versions(),
            artifacts=dict(sorted(self.artifacts.items())),
            error=error,
        )
        path = self.output_dir / "manifest.json"
        path.write_text(dumps(manifest), encoding="utf-8")
        return path
