"""
Frequency envelopes, uniformly small tails and radial Sobolev diagnostics

Block norms use the Littlewood-Paley symbols of solvers.spectral on the
grid-resolved dyadic band; every report carries that band.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple
import logging
import math

import numpy as np

from src.core import ModelParams, RadialField, StatePair, h1_seminorm_sq
from src.errors import GridMismatch, InvalidExponents, InvalidParams
from src.models.schemas import EnvelopeReport, TailsReport
from src.solvers.linear_wave import DecayCurve, Trajectory, classify_trend
from src.solvers.spectral import (
    LAMBDA_FLOOR,
    LPProfile,
    SpectralBasis,
    eigen_powers,
    lp_block_coefficients,
    resolved_band,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ComplexField:
    re: RadialField
    im: RadialField

    def __post_init__(self):
        if not self.re.grid.same_as(self.im.grid):
            raise GridMismatch("real and imaginary parts live on different grids")

    @property
    def grid(self):
        return self.re.grid

    @property
    def values(self) -> np.ndarray:
        return self.re.values + 1j * self.im.values


def make_v(s: StatePair, basis: SpectralBasis) -> ComplexField:
    """v = u + i D^{-1} u_t."""
    b = basis.coefficients(s.vel.values)
    im = basis.synthesize(eigen_powers(basis, -0.5, LAMBDA_FLOOR) * b)
    return ComplexField(s.pos, s.vel.with_values(im))


def v_norm(v: ComplexField, s_exp: float, basis: SpectralBasis) -> float:
    """‖v‖_{Ḣ^s} of the complex field."""
    weight = eigen_powers(basis, s_exp, LAMBDA_FLOOR)
    re = basis.coefficients(v.re.values)
    im = basis.coefficients(v.im.values)
    return float(np.sqrt(np.sum(weight * (re ** 2 + im ** 2))))


def state_norm(s: StatePair, s_exp: float, basis: SpectralBasis) -> float:
    """‖(u, u_t)‖ in Ḣ^s × Ḣ^{s-1}."""
    a = basis.coefficients(s.pos.values)
    b = basis.coefficients(s.vel.values)
    return float(np.sqrt(np.sum(eigen_powers(basis, s_exp, LAMBDA_FLOOR) * a ** 2)
                         + np.sum(eigen_powers(basis, s_exp - 1.0, LAMBDA_FLOOR) * b ** 2)))


# ---------------------------------------------------------------- envelopes

def block_norms(s: StatePair, params: ModelParams, basis: SpectralBasis,
                profile: LPProfile) -> Dict[int, float]:
    """a_j = 2^{s_p j}‖P_j u‖ + 2^{(s_p-1)j}‖P_j u_t‖ over the resolved band."""
    j_min, j_max = resolved_band(basis)
    a = basis.coefficients(s.pos.values)
    b = basis.coefficients(s.vel.values)
    out = {}
    for j in range(j_min, j_max + 1):
        N = 2.0 ** j
        pu = float(np.linalg.norm(lp_block_coefficients(a, N, basis, profile)))
        pv = float(np.linalg.norm(lp_block_coefficients(b, N, basis, profile)))
        out[j] = 2.0 ** (params.s_p * j) * pu + 2.0 ** ((params.s_p - 1.0) * j) * pv
    return out


def envelope_beta(a: Dict[int, float], band: Tuple[int, int]) -> Dict[int, float]:
    """β_k = Σ_j 2^{-|j-k|} a_j for k < 0 and 1 for k >= 0."""
    beta = {}
    for k in range(band[0], band[1] + 1):
        if k >= 0:
            beta[k] = 1.0
        else:
            beta[k] = float(sum(2.0 ** (-abs(j - k)) * a_j for j, a_j in a.items()))
    return beta


def _report(a: Dict[int, float], band: Tuple[int, int]) -> EnvelopeReport:
    beta = envelope_beta(a, band)
    weighted = math.sqrt(sum((2.0 ** (-0.75 * k) * b_k) ** 2 for k, b_k in beta.items()))
    return EnvelopeReport(a=a, beta=beta, resolved_band=band, l2_weighted=weighted)


def envelope(s: StatePair, params: ModelParams, basis: SpectralBasis,
             profile: Optional[LPProfile] = None) -> EnvelopeReport:
    profile = profile or LPProfile()
    band = resolved_band(basis)
    if band[1] < band[0]:
        raise InvalidParams("empty resolved band", {"band": band})
    return _report(block_norms(s, params, basis, profile), band)


def trajectory_envelope(traj: Trajectory, params: ModelParams, basis: SpectralBasis,
                        profile: Optional[LPProfile] = None) -> EnvelopeReport:
    """Envelope built from a_j = sup over the trajectory snapshots."""
    profile = profile or LPProfile()
    band = resolved_band(basis)
    sup: Dict[int, float] = {j: 0.0 for j in range(band[0], band[1] + 1)}
    for state in traj.states:
        for j, value in block_norms(state, params, basis, profile).items():
            sup[j] = max(sup[j], value)
    return _report(sup, band)


# ---------------------------------------------------------------- small tails

def tails_report(s: StatePair, params: ModelParams, basis: SpectralBasis, eta: float,
                 iterations: int = 80) -> TailsReport:
    """Cutoffs c(η) < C(η) from the four small-tail inequalities with λ ≡ 1."""
    if eta <= 0:
        raise InvalidParams("eta must be positive", {"eta": eta})
    if eta >= state_norm(s, params.s_p, basis):
        return TailsReport(eta=eta, c_eta=1.0, C_eta=1.0, degenerate=True)
    grid = s.grid
    node_w = grid.node_weights()
    freqs = basis.frequencies
    pieces = []
    for field, order in ((s.pos, params.s_p), (s.vel, params.s_p - 1.0)):
        coeffs = basis.coefficients(field.values)
        scaled = eigen_powers(basis, order / 2.0, LAMBDA_FLOOR) * coeffs
        pieces.append((node_w * basis.synthesize(scaled) ** 2, scaled ** 2))

    def high(C: float) -> float:
        return max(float(np.sum(sp[grid.r >= C]) + np.sum(fr[freqs >= C])) for sp, fr in pieces)

    def low(c: float) -> float:
        return max(float(np.sum(sp[grid.r <= c]) + np.sum(fr[freqs <= c])) for sp, fr in pieces)

    target = eta ** 2
    if high(0.0) <= target:
        return TailsReport(eta=eta, c_eta=1.0, C_eta=1.0, degenerate=True)

    top = max(grid.R_max, float(freqs[-1])) * (1.0 + 1e-12)
    lo, hi = 0.0, top
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if high(mid) <= target:
            hi = mid
        else:
            lo = mid
    C_eta = hi

    lo, hi = 0.0, top
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if low(mid) <= target:
            lo = mid
        else:
            hi = mid
    c_eta = lo
    logger.debug("tails eta=%.3g: c=%.4g C=%.4g", eta, c_eta, C_eta)
    return TailsReport(eta=eta, c_eta=c_eta, C_eta=C_eta)


# ---------------------------------------------------------------- radial Sobolev

@dataclass(frozen=True)
class SobolevExponents:
    d: int
    s: float
    beta: float
    p: float
    q: float

    @property
    def q_prime(self) -> float:
        return _conjugate(self.q)

    @property
    def p_prime(self) -> float:
        return _conjugate(self.p)


def _conjugate(x: float) -> float:
    if x == 1.0:
        return math.inf
    if math.isinf(x):
        return 1.0
    return x / (x - 1.0)


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def sobolev_scaling_exponent(d: int, s: float, beta: float, p_exp: float) -> float:
    """The q solving d - β - s = d/p' + d/q'."""
    inv_q_prime = (d - beta - s - d * _inv(_conjugate(p_exp))) / d
    if inv_q_prime <= 0 or inv_q_prime > 1:
        raise InvalidExponents("no admissible q for these exponents",
                               {"d": d, "s": s, "beta": beta, "p": p_exp})
    return _conjugate(1.0 / inv_q_prime)


def validate_sobolev_exponents(d: int, s: float, beta: float, p_exp: float,
                               q_exp: float) -> SobolevExponents:
    ex = SobolevExponents(d=d, s=s, beta=beta, p=p_exp, q=q_exp)
    details = {"d": d, "s": s, "beta": beta, "p": p_exp, "q": q_exp}
    if not (1.0 <= p_exp <= math.inf and 1.0 <= q_exp <= math.inf):
        raise InvalidExponents("p and q must lie in [1, ∞]", details)
    if not 0 < s < d:
        raise InvalidExponents("need 0 < s < d", details)
    if not beta > -d * _inv(ex.q_prime):
        raise InvalidExponents("need β > -d/q'", details)
    total = _inv(p_exp) + _inv(q_exp)
    if not 1.0 - 1e-12 <= total <= 1.0 + s + 1e-12:
        raise InvalidExponents("need 1 <= 1/p + 1/q <= 1 + s", details)
    if abs(d - beta - s - d * _inv(ex.p_prime) - d * _inv(ex.q_prime)) > 1e-10:
        raise InvalidExponents("scaling condition d - β - s = d/p' + d/q' fails", details)
    endpoints = [p_exp == 1.0, math.isinf(p_exp), q_exp == 1.0, math.isinf(q_exp),
                 abs(total - (1.0 + s)) <= 1e-12]
    if sum(endpoints) > 1:
        raise InvalidExponents("at most one endpoint equality may hold", details)
    return ex


def _weighted_lq(f: RadialField, beta: float, q: float) -> float:
    grid = f.grid
    if math.isinf(q):
        mask = grid.r > 0
        return float(np.max(np.abs(grid.r[mask] ** beta * f.values[mask])))
    integral = grid.integrate(
        lambda j, t, r: np.abs(r ** beta * grid.interpolate_on_cells(f.values, j, t)) ** q
        * r ** (grid.d - 1)
    )
    return integral ** (1.0 / q)


def radial_sobolev_check(f: RadialField, s: float, beta_w: float, p_exp: float,
                         q_exp: float, basis: SpectralBasis) -> float:
    """‖|x|^β f‖_{L^{q'}} / ‖D^s f‖_{L^p} for admissible exponents."""
    ex = validate_sobolev_exponents(f.grid.d, s, beta_w, p_exp, q_exp)
    coeffs = basis.coefficients(f.values)
    ds = basis.synthesize(eigen_powers(basis, s / 2.0, LAMBDA_FLOOR) * coeffs)
    denom = f.grid.lq_norm(ds, p_exp)
    if denom == 0.0:
        raise InvalidParams("D^s f vanishes on the grid")
    return _weighted_lq(f, beta_w, ex.q_prime) / denom


def endpoint_sobolev_ratio(f: RadialField) -> float:
    """‖r^{(d-2)/2} f‖_∞ / ‖f‖_{Ḣ¹}."""
    grad = math.sqrt(h1_seminorm_sq(f))
    if grad == 0.0:
        raise InvalidParams("field has zero Ḣ¹ seminorm")
    return float(np.max(np.abs(f.grid.r ** ((f.grid.d - 2) / 2.0) * f.values))) / grad


def decay_norm_curve(traj: Trajectory, basis: SpectralBasis) -> DecayCurve:
    """t ↦ ‖(u, u_t)(t)‖ in Ḣ^{3/4} × Ḣ^{-1/4}."""
    values = np.array([state_norm(state, 0.75, basis) for state in traj.states])
    return DecayCurve(np.asarray(traj.times, dtype=float), values, classify_trend(values))
