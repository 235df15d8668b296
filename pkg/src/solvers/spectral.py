"""
Discrete functional calculus of the radial Laplacian

The operator is the P1 finite-element stiffness of ∫ f' g' r^{d-1} dr over
the lumped mass w_i = ∫ hat_i r^{d-1} dr, with a natural (regularity)
condition at r = 0 and Dirichlet at R_max. Symmetrizing with w^{-1/2} gives a
tridiagonal matrix whose eigenvectors are orthonormal for the lumped L²
pairing used by core.weighted_l2. The frequency variable is √λ_k.
"""

from dataclasses import dataclass
from typing import Optional, Tuple
import logging
import math

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from src.core import RadialField, RadialGrid
from src.errors import EmptyBlock, IllConditioned, InvalidParams, NumericalFailure

logger = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-12
BOUNDARY_CONDITION = "dirichlet"


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    grid: RadialGrid
    eigenvalues: np.ndarray
    vectors: np.ndarray          # (M, N): one eigenvector per row, zero at R_max
    weights: np.ndarray          # lumped mass, length N
    stiffness_diag: np.ndarray   # length N-1
    stiffness_off: np.ndarray    # length N-2
    bc: str = BOUNDARY_CONDITION

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """⟨f, e_k⟩ in the lumped L²(r^{d-1}dr) pairing."""
        return self.vectors @ (self.weights * values)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.vectors

    def apply_operator(self, values: np.ndarray) -> np.ndarray:
        """The discrete -Δ_rad that this basis diagonalizes (zero at R_max)."""
        u = values[:-1]
        ku = self.stiffness_diag * u
        ku[:-1] += self.stiffness_off * u[1:]
        ku[1:] += self.stiffness_off * u[:-1]
        out = np.zeros_like(values, dtype=float)
        out[:-1] = ku / self.weights[:-1]
        return out

    def multiplier(self, f: RadialField, symbol: np.ndarray) -> RadialField:
        """Apply the spectral multiplier symbol(λ_k)."""
        return f.with_values(self.synthesize(symbol * self.coefficients(f.values)))


@dataclass(frozen=True)
class LPProfile:
    """Bump φ = 1 on [0, 1], 0 on [b, ∞), C³ polynomial transition in between."""

    b: float = 2.0

    def __post_init__(self):
        if not (1.0 < self.b <= 2.0):
            raise InvalidParams("bump transition end must lie in (1, 2]", {"b": self.b})

    @staticmethod
    def smoothstep(t: np.ndarray) -> np.ndarray:
        t = np.clip(t, 0.0, 1.0)
        return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return 1.0 - self.smoothstep((xi - 1.0) / (self.b - 1.0))

    def block(self, xi: np.ndarray, N: float) -> np.ndarray:
        """ψ_N(ξ) = φ(ξ/N) - φ(2ξ/N)."""
        xi = np.asarray(xi, dtype=float)
        return self(xi / N) - self(2.0 * xi / N)


def assemble_operator(grid: RadialGrid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lumped mass and the stiffness tridiagonal on the N-1 free nodes."""
    _, _, r, w = grid.cell_samples(0.0)
    cell_mass = np.sum(w * r ** (grid.d - 1), axis=1)
    cell_coeff = cell_mass / np.diff(grid.r) ** 2

    weights = grid.node_weights(0.0)
    free = grid.N - 1

    diag = np.empty(free)
    diag[0] = cell_coeff[0]
    diag[1:] = cell_coeff[:free - 1] + cell_coeff[1:free]
    off = -cell_coeff[:free - 1]
    return weights, diag, off


def build_basis(grid: RadialGrid) -> SpectralBasis:
    """Diagonalize the discrete radial Laplacian on the grid."""
    if grid.N < 64:
        raise InvalidParams("spectral basis needs N >= 64", {"N": grid.N})

    weights, diag, off = assemble_operator(grid)
    free = grid.N - 1
    scale = 1.0 / np.sqrt(weights[:free])
    try:
        eigenvalues, eigvecs = eigh_tridiagonal(
            diag * scale ** 2, off * scale[:-1] * scale[1:], lapack_driver="stemr"
        )
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigen-solver failed: {exc}") from exc

    if not np.all(np.isfinite(eigenvalues)) or eigenvalues[0] <= 0:
        raise NumericalFailure(
            "discrete Laplacian is not positive definite",
            {"lambda_min": float(eigenvalues[0])},
        )

    vectors = np.zeros((free, grid.N))
    vectors[:, :free] = (eigvecs * scale[:, None]).T
    signs = np.where(vectors[:, 0] < 0, -1.0, 1.0)
    vectors *= signs[:, None]

    logger.debug(
        "basis d=%d N=%d: λ in [%.4g, %.4g]", grid.d, grid.N, eigenvalues[0], eigenvalues[-1]
    )
    return SpectralBasis(
        grid=grid,
        eigenvalues=eigenvalues,
        vectors=vectors,
        weights=weights,
        stiffness_diag=diag,
        stiffness_off=off,
    )


def eigen_powers(basis: SpectralBasis, exponent: float, floor: Optional[float]) -> np.ndarray:
    lam = basis.eigenvalues
    if exponent < 0 and np.any(lam < LAMBDA_FLOOR):
        if floor is None:
            raise IllConditioned(
                "negative power of a near-zero eigenvalue without a floor",
                {"lambda_min": float(lam.min())},
            )
        lam = np.maximum(lam, floor)
    return lam ** exponent


def fractional_derivative(f: RadialField, s: float, basis: SpectralBasis,
                          floor: Optional[float] = LAMBDA_FLOOR) -> RadialField:
    """D^s f = Σ λ_k^{s/2} ⟨f, e_k⟩ e_k."""
    if s == 0:
        return f.with_values(basis.synthesize(basis.coefficients(f.values)))
    return basis.multiplier(f, eigen_powers(basis, s / 2.0, floor))


def sobolev_norm(f: RadialField, s: float, basis: SpectralBasis) -> float:
    """‖f‖_{Ḣ^s} = (Σ λ_k^s |⟨f, e_k⟩|²)^{1/2}."""
    coeffs = basis.coefficients(f.values)
    return float(np.sqrt(np.sum(eigen_powers(basis, s, LAMBDA_FLOOR) * coeffs ** 2)))


def resolved_band(basis: SpectralBasis) -> Tuple[int, int]:
    """Dyadic exponents [j_min, j_max] whose blocks tile the grid spectrum."""
    freqs = basis.frequencies
    return int(math.floor(math.log2(freqs[0]))), int(math.ceil(math.log2(freqs[-1])))


def _check_dyadic(N: float) -> None:
    if N <= 0 or abs(math.log2(N) - round(math.log2(N))) > 1e-12:
        raise InvalidParams("Littlewood-Paley index must be a power of two", {"N": N})


def lp_project(f: RadialField, N: float, basis: SpectralBasis, profile: LPProfile) -> RadialField:
    """P_N f with symbol φ(ξ/N) - φ(2ξ/N) at ξ = √λ_k."""
    _check_dyadic(N)
    return basis.multiplier(f, profile.block(basis.frequencies, N))


def lp_block_coefficients(coeffs: np.ndarray, N: float, basis: SpectralBasis,
                          profile: LPProfile) -> np.ndarray:
    return profile.block(basis.frequencies, N) * coeffs


def besov_norm(f: RadialField, s: float, basis: SpectralBasis, profile: LPProfile,
               r_exp: float = 2.0) -> float:
    """(Σ_N (N^s ‖P_N f‖_{L^r})²)^{1/2} over the resolved band."""
    j_min, j_max = resolved_band(basis)
    coeffs = basis.coefficients(f.values)
    total = 0.0
    for j in range(j_min, j_max + 1):
        N = 2.0 ** j
        block = lp_block_coefficients(coeffs, N, basis, profile)
        if r_exp == 2.0:
            block_norm = float(np.linalg.norm(block))
        else:
            block_norm = f.grid.lq_norm(basis.synthesize(block), r_exp)
        total += (N ** s * block_norm) ** 2
    return float(np.sqrt(total))


@dataclass(frozen=True)
class BernsteinReport:
    N: float
    s: float
    ratio: float
    lower: float
    upper: float

    @property
    def within_bounds(self) -> bool:
        return self.lower * (1 - 1e-12) <= self.ratio <= self.upper * (1 + 1e-12)


def bernstein_check(f: RadialField, N: float, s: float, basis: SpectralBasis,
                    profile: LPProfile) -> BernsteinReport:
    """‖D^s P_N f‖ / (N^s ‖P_N f‖) against the bounds set by the block's support."""
    _check_dyadic(N)
    coeffs = basis.coefficients(f.values)
    block = lp_block_coefficients(coeffs, N, basis, profile)
    block_norm = float(np.linalg.norm(block))
    if block_norm == 0.0 or block_norm <= 1e-14 * float(np.linalg.norm(coeffs)):
        raise EmptyBlock("Littlewood-Paley block is empty", {"N": N})

    if s == 0:
        ratio = 1.0
    else:
        ratio = float(np.linalg.norm(eigen_powers(basis, s / 2.0, LAMBDA_FLOOR) * block)) / (N ** s * block_norm)

    # The block symbol lives on N/2 < ξ < bN.
    edges = (0.5 ** s, profile.b ** s)
    return BernsteinReport(N=N, s=s, ratio=ratio, lower=min(edges), upper=max(edges))
