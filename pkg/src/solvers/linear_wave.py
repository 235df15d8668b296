"""
Free radial wave flow, Duhamel integral and exterior-energy functionals

The linear flow is exact in the discrete eigenbasis: each mode rotates in
its (position, velocity) plane at frequency √λ_k.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from src.core import ModelParams, RadialField, StatePair, energy_pair_norm, h1_seminorm_sq, weighted_l2
from src.errors import GridMismatch, InvalidParams, RegionError, SourceError
from src.solvers.spectral import SpectralBasis

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    times: List[float] = field(default_factory=list)
    states: List[StatePair] = field(default_factory=list)
    params: Optional[ModelParams] = None
    blown_up: bool = False

    def append(self, state: StatePair) -> None:
        if self.times and not state.t > self.times[-1]:
            raise InvalidParams("trajectory times must increase strictly",
                                {"last": self.times[-1], "new": state.t})
        if self.states and not state.grid.same_as(self.states[0].grid):
            raise GridMismatch("trajectory states must share one grid")
        self.times.append(float(state.t))
        self.states.append(state)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> StatePair:
        return self.states[-1]

    def positions(self) -> np.ndarray:
        return np.array([s.pos.values for s in self.states])


def modal_state(s: StatePair, basis: SpectralBasis) -> Tuple[np.ndarray, np.ndarray]:
    return basis.coefficients(s.pos.values), basis.coefficients(s.vel.values)


def rotate_modes(a: np.ndarray, b: np.ndarray, t: float,
                 basis: SpectralBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Exact mode-wise flow of (a_k, b_k) over time t."""
    omega = basis.frequencies
    cos_t = np.cos(t * omega)
    sin_t = np.sin(t * omega)
    return a * cos_t + b * sin_t / omega, -a * omega * sin_t + b * cos_t


def free_flow(s0: StatePair, t: float, basis: SpectralBasis) -> StatePair:
    """S(t)(u0, u1) in the discrete eigenbasis."""
    a, b = modal_state(s0, basis)
    a_t, b_t = rotate_modes(a, b, t, basis)
    return StatePair.from_arrays(s0.grid, basis.synthesize(a_t), basis.synthesize(b_t), s0.t + t)


def free_trajectory(s0: StatePair, times: Sequence[float], basis: SpectralBasis,
                    params: Optional[ModelParams] = None) -> Trajectory:
    traj = Trajectory(params=params)
    a, b = modal_state(s0, basis)
    for t in times:
        a_t, b_t = rotate_modes(a, b, t - s0.t, basis)
        traj.append(StatePair.from_arrays(s0.grid, basis.synthesize(a_t), basis.synthesize(b_t), t))
    return traj


def total_energy(s: StatePair, basis: SpectralBasis) -> float:
    """½ Σ (λ_k a_k² + b_k²), the free energy of the discrete flow."""
    a, b = modal_state(s, basis)
    return 0.5 * float(np.sum(basis.eigenvalues * a ** 2 + b ** 2))


def duhamel(source: Callable[[float], RadialField], t0: float, t1: float,
            basis: SpectralBasis, steps: int = 64) -> StatePair:
    """∫_{t0}^{t1} sin((t1-s)√-Δ)/√-Δ h(s) ds and its time derivative (composite Simpson)."""
    if t1 < t0:
        raise InvalidParams("duhamel needs t1 >= t0", {"t0": t0, "t1": t1})
    grid = basis.grid
    if t1 == t0:
        return StatePair.zeros(grid)
    steps = max(2, int(steps) + int(steps) % 2)

    omega = basis.frequencies
    nodes = np.linspace(t0, t1, steps + 1)
    simpson = np.ones(steps + 1)
    simpson[1:-1:2] = 4.0
    simpson[2:-1:2] = 2.0
    simpson *= (t1 - t0) / (3.0 * steps)

    pos = np.zeros(basis.size)
    vel = np.zeros(basis.size)
    for s, weight in zip(nodes, simpson):
        h = source(float(s))
        values = h.values if isinstance(h, RadialField) else np.asarray(h, dtype=float)
        if not np.all(np.isfinite(values)):
            raise SourceError("non-finite Duhamel source", {"s": float(s)})
        hk = basis.coefficients(values)
        lag = (t1 - s) * omega
        pos += weight * np.sin(lag) / omega * hk
        vel += weight * np.cos(lag) * hk
    return StatePair.from_arrays(grid, basis.synthesize(pos), basis.synthesize(vel), t1)


def exterior_energy(s: StatePair, R: float, t: float) -> float:
    """∫_{R+|t|}^{R_max} (u_r² + u_t²) r^{d-1} dr for the state s at time t."""
    edge = R + abs(t)
    if R < 0 or edge >= s.grid.R_max:
        raise RegionError(
            "exterior region outside the grid",
            {"R": R, "t": t, "R_max": s.grid.R_max},
        )
    return h1_seminorm_sq(s.pos, edge) + weighted_l2(s.vel, s.vel, edge)


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    values: np.ndarray
    trend: str

    @property
    def final_ratio(self) -> float:
        peak = float(np.max(self.values)) if self.values.size else 0.0
        return float(self.values[-1] / peak) if peak > 0 else 0.0


def classify_trend(values: np.ndarray) -> str:
    peak = float(np.max(values)) if values.size else 0.0
    if peak == 0.0:
        return "zero"
    if values[-1] <= 1e-3 * peak:
        return "vanishing"
    tail = values[values.size // 2:]
    if tail.size > 1 and (tail.max() - tail.min()) <= 0.05 * tail.max():
        return "plateau"
    return "decreasing" if values[-1] < values[0] else "increasing"


def exterior_vanishing_scan(traj: Trajectory, R: float) -> DecayCurve:
    """t ↦ ‖state(t)‖_{H(r >= R + |t|)} along a trajectory (diagnostic)."""
    if traj.states:
        horizon = max(abs(t) for t in traj.times)
        R_max = traj.states[0].grid.R_max
        if R < 0 or R + horizon >= R_max:
            raise RegionError("exterior scan leaves the grid",
                              {"R": R, "horizon": horizon, "R_max": R_max})
    values = np.array([energy_pair_norm(s, R + abs(t)) for t, s in zip(traj.times, traj.states)])
    curve = DecayCurve(np.asarray(traj.times, dtype=float), values, classify_trend(values))
    logger.debug("exterior scan R=%.3g: trend=%s", R, curve.trend)
    return curve
