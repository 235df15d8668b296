"""
Focusing radial wave equation u_tt - Δu = |u|^{p-1}u

Time stepping is Strang splitting: a half kick of the velocity by the
nonlinearity, the exact modal free flow over dt, and a second half kick.
The kick solves its own sub-problem exactly, so the scheme is symplectic and
second order in dt.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import trapezoid

from src.core import ModelParams, RadialField, RadialGrid, StatePair, h1_seminorm_sq, weighted_l2
from src.core.profiles import taper
from src.errors import InvalidParams, PreconditionError
from src.models.schemas import EvolveConfig, RunOutcome, RunReport
from src.solvers.linear_wave import Trajectory, free_flow, rotate_modes
from src.solvers.spectral import SpectralBasis, sobolev_norm

logger = logging.getLogger(__name__)


def nonlinearity(u: np.ndarray, p: int) -> np.ndarray:
    return np.abs(u) ** (p - 1) * u


def _energy_terms(s: StatePair, params: ModelParams) -> Tuple[float, float, float]:
    """(∫u_t², ∫u_r², ∫|u|^{p+1}) with r^{d-1} weights."""
    kinetic = weighted_l2(s.vel, s.vel)
    gradient = h1_seminorm_sq(s.pos)
    potential = float(np.sum(s.grid.node_weights() * np.abs(s.pos.values) ** (params.p + 1)))
    return kinetic, gradient, potential


def conserved_energy(s: StatePair, params: ModelParams) -> float:
    """E = ∫ ½u_t² + ½u_r² - |u|^{p+1}/(p+1)."""
    kinetic, gradient, potential = _energy_terms(s, params)
    return 0.5 * kinetic + 0.5 * gradient - potential / (params.p + 1)


def energy_scale(s: StatePair, params: ModelParams) -> float:
    kinetic, gradient, potential = _energy_terms(s, params)
    return 0.5 * kinetic + 0.5 * gradient + potential / (params.p + 1)


def virial(s: StatePair, params: ModelParams) -> Tuple[float, float, float]:
    """(y, y', y'') with y = ∫u²."""
    kinetic, gradient, potential = _energy_terms(s, params)
    y = weighted_l2(s.pos, s.pos)
    y_prime = 2.0 * weighted_l2(s.pos, s.vel)
    y_second = 2.0 * kinetic - 2.0 * gradient + 2.0 * potential
    return y, y_prime, y_second


def tune_zero_energy(s: StatePair, params: ModelParams) -> StatePair:
    """Rescale the amplitude so the conserved energy vanishes."""
    kinetic, gradient, potential = _energy_terms(s, params)
    if potential <= 0:
        raise PreconditionError("zero-energy tuning needs a nonzero position")
    amplitude = ((params.p + 1) * (kinetic + gradient) / (2.0 * potential)) ** (1.0 / (params.p - 1))
    return s.scaled(amplitude)


def cauchy_schwarz_check(s: StatePair, params: ModelParams, energy_tol: float = 1e-8) -> float:
    """(4/(p+3)) y y'' - (y')² for a zero-energy state."""
    energy = conserved_energy(s, params)
    scale = energy_scale(s, params)
    if abs(energy) > energy_tol * scale:
        raise PreconditionError(
            "convexity margin needs a zero-energy state",
            {"energy": energy, "scale": scale},
        )
    y, y_prime, y_second = virial(s, params)
    return 4.0 / (params.p + 3) * y * y_second - y_prime ** 2


def critical_norm(s: StatePair, params: ModelParams, basis: SpectralBasis) -> float:
    """‖(u, u_t)‖ in Ḣ^{s_p} × Ḣ^{s_p - 1}."""
    return float(math.hypot(sobolev_norm(s.pos, params.s_p, basis),
                            sobolev_norm(s.vel, params.s_p - 1.0, basis)))


def rescale_state(s: StatePair, lam: float, params: ModelParams) -> StatePair:
    """(λ^{-2/(p-1)} u(r/λ), λ^{-1-2/(p-1)} u_t(r/λ)) resampled on the same grid."""
    if lam <= 0:
        raise InvalidParams("scaling parameter must be positive", {"lam": lam})
    grid = s.grid
    a = params.scaling_exponent
    x = grid.r / lam
    inside = x <= grid.R_max

    def resample(values: np.ndarray) -> np.ndarray:
        out = np.zeros(grid.N)
        out[inside] = CubicSpline(grid.r, values)(x[inside])
        return out

    return StatePair.from_arrays(grid, lam ** (-a) * resample(s.pos.values),
                                 lam ** (-1.0 - a) * resample(s.vel.values), s.t / lam)


@dataclass(frozen=True)
class AdmissibleTriple:
    q: float
    r: float
    gamma: float
    d: int

    @property
    def is_admissible(self) -> bool:
        gap = 1.0 / self.q + self.d / self.r - (self.d / 2.0 - self.gamma)
        return (self.q >= 2 and self.r >= 2
                and 1.0 / self.q <= (self.d - 1) / 2.0 * (0.5 - 1.0 / self.r) + 1e-14
                and abs(gap) < 1e-12)


def admissible_triple(q: float, r: float, gamma: float, d: int) -> AdmissibleTriple:
    triple = AdmissibleTriple(q=q, r=r, gamma=gamma, d=d)
    if not triple.is_admissible:
        raise InvalidParams("inadmissible Strichartz triple", {"q": q, "r": r, "gamma": gamma, "d": d})
    return triple


def sp_triple(params: ModelParams) -> AdmissibleTriple:
    """The (q, r) pair of the S_p norm with its regularity γ."""
    q = 2.0 * (params.p - 1)
    r = 2.0 * params.d * (params.p - 1) / 3.0
    return admissible_triple(q, r, params.d / 2.0 - 1.0 / q - params.d / r, params.d)


def sp_norm(traj: Trajectory, params: ModelParams, stride: int = 1) -> float:
    """(∫ ‖u(t)‖_{L^r}^q dt)^{1/q} with (q, r) = (2(p-1), 2d(p-1)/3), snapshot trapezoid."""
    if len(traj) == 0:
        return 0.0
    q_t = 2.0 * (params.p - 1)
    q_x = 2.0 * params.d * (params.p - 1) / 3.0
    idx = list(range(0, len(traj), stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    times = np.asarray(traj.times)[idx]
    values = np.array([traj.states[i].grid.lq_norm(traj.states[i].pos.values, q_x) for i in idx])
    if times.size < 2:
        return 0.0
    return float(abs(trapezoid(values ** q_t, times)) ** (1.0 / q_t))


def sp_norm_stability(traj: Trajectory, params: ModelParams) -> float:
    """Relative change of sp_norm when every other snapshot is dropped."""
    full = sp_norm(traj, params)
    half = sp_norm(traj, params, stride=2)
    return abs(full - half) / full if full > 0 else 0.0


def _run_histories() -> Dict[str, List[float]]:
    return {key: [] for key in ("t", "energy", "critical_norm", "y", "y_prime", "sup_norm")}


def evolve(s0: StatePair, params: ModelParams, cfg: EvolveConfig, basis: SpectralBasis,
           reverse: bool = False) -> Tuple[Trajectory, RunReport]:
    """Strang-split evolution of the focusing equation; reverse runs toward negative time."""
    grid = s0.grid
    p = params.p
    step = -cfg.dt if reverse else cfg.dt
    n_steps = max(1, int(math.ceil(cfg.T / cfg.dt - 1e-9)))
    boundary = grid.r >= grid.R_max - max(1.0, 0.02 * grid.R_max)

    histories = _run_histories()
    saved: List[StatePair] = []
    e0 = conserved_energy(s0, params)
    scale0 = energy_scale(s0, params)

    def record(state: StatePair) -> None:
        saved.append(state)
        y, y_prime, _ = virial(state, params)
        histories["t"].append(state.t)
        histories["energy"].append(conserved_energy(state, params))
        histories["critical_norm"].append(critical_norm(state, params, basis))
        histories["y"].append(y)
        histories["y_prime"].append(y_prime)
        histories["sup_norm"].append(float(np.max(np.abs(state.pos.values))))

    record(s0)
    u, v = s0.pos.values.copy(), s0.vel.values.copy()
    outcome = RunOutcome.COMPLETED
    blowup_time: Optional[float] = None
    last_stable = s0
    steps_done = 0

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            v_half = v + 0.5 * step * nonlinearity(u, p)
            a, b = rotate_modes(basis.coefficients(u), basis.coefficients(v_half), step, basis)
            u_new = basis.synthesize(a)
            v_new = basis.synthesize(b) + 0.5 * step * nonlinearity(u_new, p)
            t = s0.t + n * step

            sup = np.max(np.abs(u_new))
            if not (np.isfinite(sup) and np.all(np.isfinite(v_new))) or sup > cfg.blowup_threshold:
                outcome = RunOutcome.BLOWUP_DETECTED
                blowup_time = last_stable.t
                logger.debug("blow-up detected after t=%.6g (dt=%.3g)", blowup_time, cfg.dt)
                break

            u, v = u_new, v_new
            steps_done = n
            last_stable = StatePair.from_arrays(grid, u, v, t)
            if n % cfg.save_every == 0 or n == n_steps:
                record(last_stable)
                edge = np.max(np.abs(u[boundary])) if np.any(boundary) else 0.0
                if edge > 1e-8 * max(sup, 1e-300) and sup > 0:
                    outcome = RunOutcome.CAUSALITY_STOP
                    logger.debug("causality stop at t=%.6g", t)
                    break

    if saved[-1] is not last_stable:
        record(last_stable)

    energies = np.asarray(histories["energy"])
    denom = abs(e0) if abs(e0) > 1e-12 * scale0 else scale0
    drift = float(np.max(np.abs(energies - e0)) / denom) if denom > 0 else 0.0

    ordered = saved[::-1] if reverse else saved
    traj = Trajectory(params=params, blown_up=outcome == RunOutcome.BLOWUP_DETECTED)
    for state in ordered:
        traj.append(state)
    if reverse:
        histories = {key: values[::-1] for key, values in histories.items()}

    report = RunReport(
        outcome=outcome,
        blowup_time=blowup_time,
        energy_drift=drift,
        final_time=last_stable.t,
        dt=cfg.dt,
        steps=steps_done,
        histories=histories,
    )
    return traj, report


def scattering_fit(traj: Trajectory, basis: SpectralBasis,
                   params: ModelParams) -> Tuple[StatePair, np.ndarray]:
    """Pull the final state back by the free flow; residual t ↦ ‖u(t) - S(t)profile‖_crit."""
    if traj.blown_up or len(traj) == 0:
        raise PreconditionError("scattering fit needs a completed trajectory")
    final = traj.final
    profile = free_flow(final, -final.t, basis)
    residual = np.array([
        critical_norm(state - free_flow(profile, state.t - profile.t, basis), params, basis)
        for state in traj.states
    ])
    return profile, residual


# Closed-form blow-up and plateau data

def blowup_constant(p: int) -> float:
    """c_p with u = c_p (T* - t)^{-2/(p-1)} solving u'' = u^p."""
    return (2.0 * (p + 1) / (p - 1) ** 2) ** (1.0 / (p - 1))


def explicit_blowup(p: int, T_star: float, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(u, u') of the ODE blow-up solution at times t < T*."""
    c = blowup_constant(p)
    gap = T_star - np.asarray(t, dtype=float)
    a = 2.0 / (p - 1)
    return c * gap ** (-a), a * c * gap ** (-a - 1.0)


def plateau_state(grid: RadialGrid, height: float, speed: float, plateau: float,
                  taper_end: float) -> StatePair:
    """(height·χ, speed·χ) with χ = 1 on r <= plateau and a smooth cutoff to taper_end."""
    chi = taper(grid.r, plateau, taper_end)
    return StatePair(RadialField(grid, height * chi), RadialField(grid, speed * chi))


def blowup_plateau_state(grid: RadialGrid, p: int, T_star: float, plateau: float,
                         taper_end: float) -> StatePair:
    u0, u1 = explicit_blowup(p, T_star, np.array([0.0]))
    return plateau_state(grid, float(u0[0]), float(u1[0]), plateau, taper_end)


@dataclass(frozen=True)
class ConcavityProfile:
    times: np.ndarray
    values: np.ndarray
    max_second_difference: float
    zero_estimate: Optional[float]

    @property
    def concave(self) -> bool:
        scale = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        return self.max_second_difference <= 1e-6 * max(scale, 1e-300)


def concavity_functional(times: np.ndarray, y: np.ndarray, p: int) -> ConcavityProfile:
    """y^{-(p-1)/4}, concave for negative-energy data; its zero bounds the blow-up time."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(y, dtype=float) ** (-(p - 1) / 4.0)
    second = np.diff(values, 2) if values.size > 2 else np.zeros(0)
    max_second = float(np.max(second)) if second.size else 0.0
    zero = None
    if values.size >= 2:
        slope = (values[-1] - values[-2]) / (times[-1] - times[-2])
        if slope < 0:
            zero = float(times[-1] - values[-1] / slope)
    return ConcavityProfile(times, values, max_second, zero)


def levine_experiment(s0: StatePair, params: ModelParams, cfg: EvolveConfig, basis: SpectralBasis,
                      refinements: int = 2) -> RunReport:
    """Negative-energy run with dt-halving refinement of the blow-up time."""
    energy = conserved_energy(s0, params)
    if energy >= 0:
        raise PreconditionError("Levine criterion needs negative energy", {"energy": energy})

    _, report = evolve(s0, params, cfg, basis)
    dts = [cfg.dt]
    times = [report.blowup_time]
    if report.outcome == RunOutcome.BLOWUP_DETECTED:
        horizon = min(cfg.T, 1.25 * report.blowup_time + 2 * cfg.dt)
        for level in range(1, refinements + 1):
            fine = cfg.model_copy(update={"dt": cfg.dt / 2 ** level, "T": horizon})
            _, fine_report = evolve(s0, params, fine, basis)
            dts.append(fine.dt)
            times.append(fine_report.blowup_time)
        if times[-1] is not None:
            report.blowup_time = times[-1]

    concavity = concavity_functional(np.asarray(report.histories["t"]),
                                     np.asarray(report.histories["y"]), params.p)
    report.extras = {
        "energy": energy,
        "dts": dts,
        "refined_blowup_times": times,
        "concavity_max_second_difference": concavity.max_second_difference,
        "concavity_zero_estimate": concavity.zero_estimate,
    }
    logger.debug("levine: outcome=%s times=%s", report.outcome.value, times)
    return report
