import logging
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from src.core import RadialGrid
from src.errors import NumericalFailure
from src.solvers.spectral import BOUNDARY_CONDITION, SpectralBasis, assemble_operator, build_basis

logger = logging.getLogger(__name__)

MAGIC = b"RWLBASIS"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sIIIId")


class BasisService:
    """Spectral bases per grid, memoized in-process and optionally cached on disk"""

    def __init__(self, cache_dir: Optional[str] = None):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._memo: Dict[Tuple[int, int, float], SpectralBasis] = {}

    def path_for(self, grid: RadialGrid) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"basis_d{grid.d}_N{grid.N}_R{grid.R_max:g}_{BOUNDARY_CONDITION}.bin"

    def get(self, grid: RadialGrid) -> SpectralBasis:
        key = (grid.d, grid.N, float(grid.R_max))
        if key in self._memo:
            return self._memo[key]

        path = self.path_for(grid)
        basis = None
        if path is not None and path.exists():
            try:
                basis = load_basis(path, grid)
                logger.debug("basis cache hit %s", path)
            except NumericalFailure as exc:
                logger.warning("ignoring unreadable basis cache %s: %s", path, exc.message)
        if basis is None:
            basis = build_basis(grid)
            if path is not None:
                save_basis(basis, path)
        self._memo[key] = basis
        return basis


def save_basis(basis: SpectralBasis, path: Path) -> None:
    grid = basis.grid
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, grid.d, grid.N, basis.size, float(grid.R_max)))
        fh.write(basis.eigenvalues.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.vectors, dtype="<f8").tobytes())


def load_basis(path: Path, grid: RadialGrid) -> SpectralBasis:
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise NumericalFailure("truncated basis cache", {"path": str(path)})
    magic, version, d, N, M, R_max = HEADER.unpack_from(raw)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise NumericalFailure("not a basis cache file", {"path": str(path)})
    if (d, N, R_max) != (grid.d, grid.N, float(grid.R_max)):
        raise NumericalFailure("basis cache belongs to another grid",
                               {"path": str(path), "d": d, "N": N, "R_max": R_max})
    expected = HEADER.size + 8 * (M + M * N)
    if len(raw) != expected:
        raise NumericalFailure("basis cache has the wrong length", {"path": str(path)})
    eigenvalues = np.frombuffer(raw, dtype="<f8", count=M, offset=HEADER.size).astype(float)
    vectors = np.frombuffer(raw, dtype="<f8", count=M * N,
                            offset=HEADER.size + 8 * M).reshape(M, N).astype(float)
    weights, diag, off = assemble_operator(grid)
    return SpectralBasis(grid=grid, eigenvalues=eigenvalues, vectors=vectors, weights=weights,
                         stiffness_diag=diag, stiffness_off=off)
