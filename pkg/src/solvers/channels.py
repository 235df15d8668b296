"""
Orthogonal projection onto the plane P(R) in Ḣ¹ × L²(r >= R, r^{d-1}dr)

P(R) = span{(r^{2i-d}, 0) : i <= k̃} ⊕ span{(0, r^{2j-d}) : j <= k} with
k = ⌊d/4⌋, k̃ = ⌊(d+2)/4⌋. Coefficients come from the Cauchy-matrix closed
forms applied to moments of the grid interpolant; moment integrals stop at
R_max because every datum is compactly supported inside the grid.

Exterior states are carried as a grid part plus plane coefficients, so the
projection, its complement and their inner products are exact up to roundoff.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy.integrate import trapezoid

from src.core import ModelParams, RadialGrid, StatePair, make_params
from src.core.profiles import taper
from src.errors import CausalityError, InvalidParams, RegionError
from src.models.schemas import ChannelReport
from src.solvers.linear_wave import exterior_energy, free_flow
from src.solvers.spectral import SpectralBasis

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlaneSpec:
    d: int
    k: int
    k_tilde: int

    @property
    def position_exponents(self) -> Tuple[int, ...]:
        return tuple(2 * i - self.d for i in range(1, self.k_tilde + 1))

    @property
    def velocity_exponents(self) -> Tuple[int, ...]:
        return tuple(2 * j - self.d for j in range(1, self.k + 1))

    @property
    def dimension(self) -> int:
        return self.k + self.k_tilde


@dataclass(frozen=True)
class CauchyCoeffs:
    c: np.ndarray
    dcoef: np.ndarray


@dataclass(frozen=True)
class ChannelCoeffs:
    lam: np.ndarray
    mu: np.ndarray
    R: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.lam, self.mu])


def plane_spec(d: int) -> PlaneSpec:
    if d < 1 or d % 2 == 0:
        raise InvalidParams("plane P(R) needs an odd dimension", {"d": d})
    return PlaneSpec(d=d, k=d // 4, k_tilde=(d + 2) // 4)


def _cauchy_vector(top: int, count: int) -> np.ndarray:
    out = np.empty(count)
    for j in range(1, count + 1):
        num = np.prod([top - 2 * j - 2 * l for l in range(1, count + 1)])
        den = np.prod([2 * l - 2 * j for l in range(1, count + 1) if l != j])
        out[j - 1] = num / den
    return out


def cauchy_coeffs(d: int) -> CauchyCoeffs:
    spec = plane_spec(d)
    return CauchyCoeffs(c=_cauchy_vector(d, spec.k), dcoef=_cauchy_vector(d + 2, spec.k_tilde))


# Closed-form kernels (1-based indices i, j)

def _idx(n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float)


def position_coeff_matrix(d: int, R: float) -> np.ndarray:
    """λ = A(R) M with M_i = ∫_R^∞ u_r r^{2i-2} dr."""
    spec, cc = plane_spec(d), cauchy_coeffs(d)
    j, i = np.meshgrid(_idx(spec.k_tilde), _idx(spec.k_tilde), indexing="ij")
    return (-R ** (d + 2 - 2 * i - 2 * j) / ((d - 2 * j) * (d + 2 - 2 * i - 2 * j))
            * cc.dcoef[None, :] * cc.dcoef[:, None])


def velocity_coeff_matrix(d: int, R: float) -> np.ndarray:
    """μ = B(R) N with N_i = ∫_R^∞ u_t r^{2i-1} dr."""
    spec, cc = plane_spec(d), cauchy_coeffs(d)
    j, i = np.meshgrid(_idx(spec.k), _idx(spec.k), indexing="ij")
    return R ** (d - 2 * i - 2 * j) / (d - 2 * i - 2 * j) * cc.c[None, :] * cc.c[:, None]


def position_moment_matrix(d: int, R: float) -> np.ndarray:
    """M = P(R) λ: moments of u_r carried by the position plane."""
    spec = plane_spec(d)
    i, j = np.meshgrid(_idx(spec.k_tilde), _idx(spec.k_tilde), indexing="ij")
    return -R ** (2 * i + 2 * j - d - 2) * (d - 2 * j) / (d + 2 - 2 * i - 2 * j)


def velocity_moment_matrix(d: int, R: float) -> np.ndarray:
    """N = Q(R) μ; also the L²(r >= R) Gram matrix of the velocity plane."""
    spec = plane_spec(d)
    i, j = np.meshgrid(_idx(spec.k), _idx(spec.k), indexing="ij")
    return R ** (2 * i + 2 * j - d) / (d - 2 * i - 2 * j)


def position_gram(d: int, R: float) -> np.ndarray:
    """Ḣ¹(r >= R) Gram matrix of the position plane."""
    spec = plane_spec(d)
    i, j = np.meshgrid(_idx(spec.k_tilde), _idx(spec.k_tilde), indexing="ij")
    return (d - 2 * i) * (d - 2 * j) * R ** (2 * i + 2 * j - d - 2) / (d + 2 - 2 * i - 2 * j)


@dataclass(frozen=True, eq=False)
class ExteriorState:
    """Grid part plus plane part, defined on r >= R only."""

    R: float
    grid: RadialGrid
    pos: np.ndarray
    vel: np.ndarray
    lam: np.ndarray
    mu: np.ndarray

    @classmethod
    def from_state(cls, s: StatePair, R: float) -> "ExteriorState":
        _check_cutoff(s.grid, R)
        spec = plane_spec(s.grid.d)
        return cls(R, s.grid, s.pos.values, s.vel.values, np.zeros(spec.k_tilde), np.zeros(spec.k))

    @classmethod
    def plane_element(cls, grid: RadialGrid, R: float, lam: Sequence[float],
                      mu: Sequence[float]) -> "ExteriorState":
        zeros = np.zeros(grid.N)
        return cls(R, grid, zeros, zeros, np.asarray(lam, dtype=float), np.asarray(mu, dtype=float))

    @property
    def d(self) -> int:
        return self.grid.d

    def grid_moments(self) -> Tuple[np.ndarray, np.ndarray]:
        spec = plane_spec(self.d)
        m = np.array([self.grid.slope_moment(self.pos, 2 * i - 2, self.R)
                      for i in range(1, spec.k_tilde + 1)])
        n = np.array([self.grid.interp_moment(self.vel, 2 * i - 1, self.R)
                      for i in range(1, spec.k + 1)])
        return m, n

    def moments(self) -> Tuple[np.ndarray, np.ndarray]:
        """(∫_R u_r r^{2i-2} dr, ∫_R u_t r^{2i-1} dr) of the whole exterior state."""
        m, n = self.grid_moments()
        return (m + position_moment_matrix(self.d, self.R) @ self.lam,
                n + velocity_moment_matrix(self.d, self.R) @ self.mu)

    def inner(self, other: "ExteriorState") -> float:
        """⟨·,·⟩ in Ḣ¹ × L²(r >= R, r^{d-1}dr)."""
        if other.R != self.R or not other.grid.same_as(self.grid):
            raise InvalidParams("exterior states live on different regions")
        d, R = self.d, self.R
        value = (self.grid.slope_product(self.pos, other.pos, d - 1, R)
                 + self.grid.interp_product(self.vel, other.vel, d - 1, R))
        exps = -(d - 2 * _idx(self.lam.size))
        ma, na = self.grid_moments()
        mb, nb = other.grid_moments()
        value += float(np.sum(other.lam * exps * ma) + np.sum(other.mu * na))
        value += float(np.sum(self.lam * exps * mb) + np.sum(self.mu * nb))
        value += float(self.lam @ position_gram(d, R) @ other.lam)
        value += float(self.mu @ velocity_moment_matrix(d, R) @ other.mu)
        return value

    def norm_sq(self) -> float:
        return self.inner(self)

    def minus_plane(self, lam: np.ndarray, mu: np.ndarray) -> "ExteriorState":
        return ExteriorState(self.R, self.grid, self.pos, self.vel, self.lam - lam, self.mu - mu)

    def position_values(self) -> np.ndarray:
        """Position component at grid nodes r >= R (NaN inside)."""
        r = self.grid.r
        out = np.full(self.grid.N, np.nan)
        mask = r >= self.R
        out[mask] = self.pos[mask] + sum(
            l * r[mask] ** e for l, e in zip(self.lam, plane_spec(self.d).position_exponents))
        return out


def _check_cutoff(grid: RadialGrid, R: float) -> None:
    if not (0.0 < R < grid.R_max):
        raise RegionError("cutoff R outside grid range", {"R": R, "R_max": grid.R_max})


def _as_exterior(s: Union[StatePair, ExteriorState], R: float) -> ExteriorState:
    if isinstance(s, ExteriorState):
        if s.R != R:
            raise RegionError("exterior state defined for another cutoff", {"R": R, "state_R": s.R})
        return s
    return ExteriorState.from_state(s, R)


def projection_coeffs(s: Union[StatePair, ExteriorState], R: float) -> ChannelCoeffs:
    """λ_j, μ_j of the orthogonal projection onto P(R)."""
    ext = _as_exterior(s, R)
    m, n = ext.moments()
    return ChannelCoeffs(
        lam=position_coeff_matrix(ext.d, R) @ m,
        mu=velocity_coeff_matrix(ext.d, R) @ n,
        R=R,
    )


def project(s: Union[StatePair, ExteriorState], R: float) -> Tuple[ExteriorState, ExteriorState]:
    """(π_R s, π_R^⊥ s) on r >= R."""
    ext = _as_exterior(s, R)
    coeffs = projection_coeffs(ext, R)
    pi = ExteriorState.plane_element(ext.grid, R, coeffs.lam, coeffs.mu)
    return pi, ext.minus_plane(coeffs.lam, coeffs.mu)


def gram_projection_coeffs(s: Union[StatePair, ExteriorState], R: float) -> ChannelCoeffs:
    """λ_j, μ_j from the normal equations G c = (⟨s, e_i⟩), e_i the plane basis elements."""
    ext = _as_exterior(s, R)
    spec = plane_spec(ext.d)
    rhs = []
    for i in range(spec.dimension):
        unit = np.zeros(spec.dimension)
        unit[i] = 1.0
        element = ExteriorState.plane_element(ext.grid, R, unit[:spec.k_tilde], unit[spec.k_tilde:])
        rhs.append(ext.inner(element))
    rhs = np.asarray(rhs)
    lam, mu = rhs[:spec.k_tilde], rhs[spec.k_tilde:]
    return ChannelCoeffs(
        lam=np.linalg.solve(position_gram(ext.d, R), lam) if lam.size else lam,
        mu=np.linalg.solve(velocity_moment_matrix(ext.d, R), mu) if mu.size else mu,
        R=R,
    )


def coefficient_discrepancy(s: Union[StatePair, ExteriorState], R: float) -> float:
    """Relative gap between the closed-form and normal-equation projection coefficients."""
    closed = projection_coeffs(s, R).as_vector()
    normal = gram_projection_coeffs(s, R).as_vector()
    scale = max(float(np.max(np.abs(closed), initial=0.0)), float(np.max(np.abs(normal), initial=0.0)))
    return float(np.max(np.abs(closed - normal), initial=0.0)) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class MomentResiduals:
    position: np.ndarray
    velocity: np.ndarray
    integration_by_parts: np.ndarray

    @property
    def max_residual(self) -> float:
        parts = [a for a in (self.position, self.velocity, self.integration_by_parts) if a.size]
        return float(max((np.max(a) for a in parts), default=0.0))


def _relative(lhs: np.ndarray, rhs: np.ndarray, scale: np.ndarray) -> np.ndarray:
    scale = np.maximum(scale, np.maximum(np.abs(lhs), np.abs(rhs)))
    out = np.zeros_like(lhs)
    nz = scale > 0
    out[nz] = np.abs(lhs[nz] - rhs[nz]) / scale[nz]
    return out


def moment_identities_check(s: Union[StatePair, ExteriorState], R: float) -> MomentResiduals:
    """Residuals of the moment identities and the integrated-by-parts form of λ_j."""
    ext = _as_exterior(s, R)
    d = ext.d
    spec = plane_spec(d)
    cc = cauchy_coeffs(d)
    coeffs = projection_coeffs(ext, R)
    m, n = ext.moments()

    pmat = position_moment_matrix(d, R)
    vmat = velocity_moment_matrix(d, R)
    pos_res = _relative(m, pmat @ coeffs.lam, np.abs(pmat) @ np.abs(coeffs.lam))
    vel_res = _relative(n, vmat @ coeffs.mu, np.abs(vmat) @ np.abs(coeffs.mu))

    # λ_j through u(R) and ∫_R u r^{2i-1} dr; exact for the continuous interpolant.
    u_R = float(np.interp(R, ext.grid.r, ext.pos))
    plane_u = sum(l * R ** e for l, e in zip(ext.lam, spec.position_exponents))
    u_R += plane_u
    u_moments = {}
    for i in range(1, spec.k_tilde):
        # plane part: ∫_R r^{2l-d} r^{2i-1} dr = R^{2l+2i-d}/(d-2l-2i)
        u_moments[i] = ext.grid.interp_moment(ext.pos, 2 * i - 1, R) + sum(
            l_c * R ** (2 * l + 2 * i - d) / (d - 2 * l - 2 * i)
            for l, l_c in enumerate(ext.lam, start=1))

    ibp = np.empty(spec.k_tilde)
    ibp_scale = np.empty(spec.k_tilde)
    for j in range(1, spec.k_tilde + 1):
        terms = [u_R * R ** (d - 2 * j)]
        for i in range(1, spec.k_tilde):
            terms.append(2 * i * cc.dcoef[i] * R ** (d - 2 * i - 2 * j) / (d - 2 * i - 2 * j)
                         * u_moments[i])
        factor = cc.dcoef[j - 1] / (d - 2 * j)
        ibp[j - 1] = factor * sum(terms)
        ibp_scale[j - 1] = abs(factor) * sum(abs(t) for t in terms)
    ibp_res = _relative(coeffs.lam, ibp, ibp_scale)
    return MomentResiduals(position=pos_res, velocity=vel_res, integration_by_parts=ibp_res)


@dataclass(frozen=True)
class NormFormulas:
    pi_proxy: float
    pi_perp_proxy: float
    pi_norm_sq: float
    pi_perp_norm_sq: float

    @staticmethod
    def _ratio(true: float, proxy: float) -> Optional[float]:
        return true / proxy if proxy > 0 else None

    @property
    def pi_ratio(self) -> Optional[float]:
        return self._ratio(self.pi_norm_sq, self.pi_proxy)

    @property
    def pi_perp_ratio(self) -> Optional[float]:
        return self._ratio(self.pi_perp_norm_sq, self.pi_perp_proxy)


def cutoff_coefficients(s: StatePair, R: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """λ_i(r), μ_i(r) for every cutoff r in {R} ∪ {grid nodes > R}."""
    grid = s.grid
    d = grid.d
    spec = plane_spec(d)
    _check_cutoff(grid, R)
    j_cells, t_s, r_s, w = grid.cell_samples(0.0)
    slopes = grid.cell_slopes(s.pos.values)
    vel_interp = grid.interpolate_on_cells(s.vel.values, j_cells, t_s)

    def right_cumulative(cell_values: np.ndarray) -> np.ndarray:
        # value at node n = ∫_{r_n}^{R_max}
        out = np.zeros(grid.N)
        out[:-1] = np.cumsum(cell_values[::-1])[::-1]
        return out

    start = int(np.searchsorted(grid.r, R, side="right"))
    radii = np.concatenate([[R], grid.r[start:]])

    m_nodes = np.zeros((spec.k_tilde, grid.N - start))
    for i in range(1, spec.k_tilde + 1):
        cells = np.sum(w * slopes[:, None] * r_s ** (2 * i - 2), axis=1)
        m_nodes[i - 1] = right_cumulative(cells)[start:]
    n_nodes = np.zeros((spec.k, grid.N - start))
    for i in range(1, spec.k + 1):
        cells = np.sum(w * vel_interp * r_s ** (2 * i - 1), axis=1)
        n_nodes[i - 1] = right_cumulative(cells)[start:]

    head = projection_coeffs(s, R)
    lam = np.empty((spec.k_tilde, radii.size))
    mu = np.empty((spec.k, radii.size))
    lam[:, 0], mu[:, 0] = head.lam, head.mu
    for col, r in enumerate(radii[1:], start=1):
        if r >= grid.R_max:
            lam[:, col] = 0.0
            mu[:, col] = 0.0
            continue
        lam[:, col] = position_coeff_matrix(d, r) @ m_nodes[:, col - 1]
        mu[:, col] = velocity_coeff_matrix(d, r) @ n_nodes[:, col - 1]
    return radii, lam, mu


def norm_formulas(s: StatePair, R: float) -> NormFormulas:
    """Coefficient proxies for ‖π_R s‖² and ‖π_R^⊥ s‖² next to the true norms."""
    d = s.grid.d
    radii, lam, mu = cutoff_coefficients(s, R)
    i_pos = _idx(lam.shape[0])
    i_vel = _idx(mu.shape[0])

    pi_proxy = float(np.sum((lam[:, 0] * R ** (2 * i_pos - (d + 2) / 2.0)) ** 2)
                     + np.sum((mu[:, 0] * R ** (2 * i_vel - d / 2.0)) ** 2))

    integrand = np.zeros(radii.size)
    for row, i in zip(lam, i_pos):
        integrand += (np.gradient(row, radii) * radii ** (2 * i - (d + 1) / 2.0)) ** 2
    for row, i in zip(mu, i_vel):
        integrand += (np.gradient(row, radii) * radii ** (2 * i - (d - 1) / 2.0)) ** 2
    pi_perp_proxy = float(trapezoid(integrand, radii)) if radii.size > 1 else 0.0

    pi, pi_perp = project(s, R)
    return NormFormulas(
        pi_proxy=pi_proxy,
        pi_perp_proxy=pi_perp_proxy,
        pi_norm_sq=pi.norm_sq(),
        pi_perp_norm_sq=pi_perp.norm_sq(),
    )


def truncate_state(s: StatePair, R: float) -> StatePair:
    """u0 frozen at u0(R) inside R, u1 set to zero inside R."""
    r = s.grid.r
    pos = np.where(r <= R, np.interp(R, r, s.pos.values), s.pos.values)
    vel = np.where(r < R, 0.0, s.vel.values)
    return StatePair.from_arrays(s.grid, pos, vel, s.t)


def p_r_element(grid: RadialGrid, R: float, lam: Sequence[float], mu: Sequence[float],
                taper_start: float, taper_end: float) -> StatePair:
    """Truncated P(R) datum: plane profile on [R, taper_start], smooth cutoff to taper_end."""
    if not (R < taper_start < taper_end <= grid.R_max):
        raise InvalidParams("taper must sit between R and R_max",
                            {"R": R, "taper": (taper_start, taper_end)})
    spec = plane_spec(grid.d)
    r = grid.r
    clamp = np.maximum(r, R)
    chi = taper(r, taper_start, taper_end)
    pos = sum(l * clamp ** e for l, e in zip(lam, spec.position_exponents)) * chi
    vel = sum(m * clamp ** e for m, e in zip(mu, spec.velocity_exponents)) * chi
    vel = np.where(r < R, 0.0, vel)
    return StatePair.from_arrays(grid, np.asarray(pos, dtype=float) * np.ones(grid.N),
                                 np.asarray(vel, dtype=float) * np.ones(grid.N))


def support_radius(s: StatePair) -> float:
    nz = np.nonzero((s.pos.values != 0) | (s.vel.values != 0))[0]
    return float(s.grid.r[nz[-1] + 1]) if nz.size and nz[-1] + 1 < s.grid.N else s.grid.R_max


def channel_verify(data: StatePair, R: float, T: float, basis: SpectralBasis,
                   params: Optional[ModelParams] = None, R1: Optional[float] = None,
                   tol: float = 1e-3) -> ChannelReport:
    """Exterior energy at ±T against ½‖π_R^⊥ data‖² for the free flow."""
    grid = data.grid
    R1 = support_radius(data) if R1 is None else R1
    if T > grid.R_max - R1:
        raise CausalityError(
            "horizon exceeds the causality budget R_max - R1",
            {"T": T, "R_max": grid.R_max, "R1": R1},
        )
    params = params or make_params(grid.d, 3)

    _, pi_perp = project(data, R)
    bound = 0.5 * pi_perp.norm_sq()
    data_norm_sq = ExteriorState.from_state(data, R).norm_sq()

    energies = {}
    for label, t in (("plus", T), ("minus", -T), ("plus_half", T / 2), ("minus_half", -T / 2)):
        energies[label] = exterior_energy(free_flow(data, t, basis), R, t)

    best = max(energies["plus"], energies["minus"])
    margin = best - bound
    report = ChannelReport(
        d=grid.d,
        p=params.p,
        R=R,
        T=T,
        exterior_plus=energies["plus"],
        exterior_minus=energies["minus"],
        exterior_plus_half=energies["plus_half"],
        exterior_minus_half=energies["minus_half"],
        bound=bound,
        margin=margin,
        verdict=bool(margin >= -tol * data_norm_sq),
        data_norm_sq=data_norm_sq,
    )
    logger.debug("channel R=%.3g T=%.3g: max=%.6g bound=%.6g", R, T, best, bound)
    return report


def saturation_estimate(report: ChannelReport) -> float:
    """Limit of the larger exterior branch, extrapolating from T/2 and T in 1/t."""
    if report.exterior_plus >= report.exterior_minus:
        at_t, at_half = report.exterior_plus, report.exterior_plus_half
    else:
        at_t, at_half = report.exterior_minus, report.exterior_minus_half
    if at_half <= at_t:
        return at_t
    return max(2.0 * at_t - at_half, 0.0)


def equality_gap(report: ChannelReport) -> float:
    """Relative distance of the exterior energy at ±T from the bound."""
    if report.bound <= 0:
        return 0.0 if report.exterior_max <= 0 else float("inf")
    return abs(report.exterior_max - report.bound) / report.bound


def extrapolated_gap(report: ChannelReport) -> float:
    """Same distance for the t -> ∞ extrapolation of the exterior energy."""
    if report.bound <= 0:
        return 0.0 if saturation_estimate(report) <= 0 else float("inf")
    return abs(saturation_estimate(report) - report.bound) / report.bound
