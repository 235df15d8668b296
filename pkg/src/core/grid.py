"""
Radial grids, fields and weighted integrals

All integrals are taken of the piecewise-linear interpolant I_h f of the nodal
values against powers of r. Each cell is integrated with a Gauss-Legendre rule
in local coordinates, which is exact for the polynomial integrands that arise
and avoids the cancellation of closed-form differences r_{j+1}^n - r_j^n.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.errors import GridMismatch, RegionError, InvalidParams

# Exact for polynomial degree <= 2*_GAUSS_ORDER - 1 per cell.
_GAUSS_ORDER = 16
_GAUSS_X, _GAUSS_W = leggauss(_GAUSS_ORDER)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    r: np.ndarray
    d: int

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise InvalidParams("grid needs at least 3 nodes")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise InvalidParams("grid must start at 0 and increase strictly")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def uniform(cls, R_max: float, N: int, d: int) -> "RadialGrid":
        if R_max <= 0:
            raise InvalidParams("R_max must be positive", {"R_max": R_max})
        return cls(r=np.linspace(0.0, float(R_max), int(N)), d=int(d))

    @property
    def N(self) -> int:
        return self.r.size

    @property
    def R_max(self) -> float:
        return float(self.r[-1])

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (
            self.d == other.d and self.N == other.N and np.array_equal(self.r, other.r)
        )

    def check_region(self, r_min: float) -> None:
        if not (0.0 <= r_min <= self.R_max):
            raise RegionError(
                f"cutoff {r_min} outside grid [0, {self.R_max}]",
                {"r_min": r_min, "R_max": self.R_max},
            )

    def index_at(self, r_value: float) -> int:
        """Index of the node nearest to r_value."""
        self.check_region(r_value)
        return int(np.clip(np.rint(r_value / self.h), 0, self.N - 1))

    # Cell quadrature

    def cell_samples(self, r_min: float = 0.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Gauss samples on every cell meeting [r_min, R_max].

        Returns (j, t, r, w): cell index per row, local coordinate t in [0, 1]
        within cell j, the radius h(j + t), and quadrature weights in dr.
        """
        self.check_region(r_min)
        h = self.h
        first = int(min(max(np.floor(r_min / h), 0), self.N - 2))
        j = np.arange(first, self.N - 1)
        t0 = np.zeros(j.size)
        t0[0] = min(max(r_min / h - first, 0.0), 1.0)
        span = 1.0 - t0
        t = t0[:, None] + span[:, None] * (_GAUSS_X[None, :] + 1.0) / 2.0
        w = h * span[:, None] / 2.0 * _GAUSS_W[None, :]
        r = h * (j[:, None] + t)
        return j, t, r, w

    def interpolate_on_cells(self, values: np.ndarray, j: np.ndarray, t: np.ndarray) -> np.ndarray:
        return values[j][:, None] * (1.0 - t) + values[j + 1][:, None] * t

    def cell_slopes(self, values: np.ndarray) -> np.ndarray:
        """Derivative of the interpolant on each cell (centered difference at midpoints)."""
        return np.diff(values) / np.diff(self.r)

    def node_weights(self, r_min: float = 0.0, power: Optional[int] = None) -> np.ndarray:
        """Lumped weights w_i = ∫_{r_min} hat_i r^power dr, power defaulting to d-1."""
        power = self.d - 1 if power is None else power
        j, t, r, w = self.cell_samples(r_min)
        wr = w * r ** power
        weights = np.zeros(self.N)
        np.add.at(weights, j, np.sum(wr * (1.0 - t), axis=1))
        np.add.at(weights, j + 1, np.sum(wr * t, axis=1))
        return weights

    def integrate(self, integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                  r_min: float = 0.0) -> float:
        """∫_{r_min}^{R_max} of integrand(j, t, r) by the cell rule."""
        j, t, r, w = self.cell_samples(r_min)
        return float(np.sum(w * integrand(j, t, r)))

    def interp_moment(self, values: np.ndarray, power: float, r_min: float = 0.0) -> float:
        """∫ I_h f r^power dr."""
        return self.integrate(
            lambda j, t, r: self.interpolate_on_cells(values, j, t) * r ** power, r_min
        )

    def interp_product(self, f: np.ndarray, g: np.ndarray, power: float, r_min: float = 0.0) -> float:
        """∫ I_h f I_h g r^power dr (consistent mass)."""
        return self.integrate(
            lambda j, t, r: self.interpolate_on_cells(f, j, t)
            * self.interpolate_on_cells(g, j, t) * r ** power,
            r_min,
        )

    def slope_moment(self, values: np.ndarray, power: float, r_min: float = 0.0) -> float:
        """∫ (I_h f)' r^power dr."""
        slopes = self.cell_slopes(values)
        return self.integrate(lambda j, t, r: slopes[j][:, None] * r ** power, r_min)

    def slope_product(self, f: np.ndarray, g: np.ndarray, power: float, r_min: float = 0.0) -> float:
        """∫ (I_h f)'(I_h g)' r^power dr."""
        sf = self.cell_slopes(f)
        sg = self.cell_slopes(g)
        return self.integrate(lambda j, t, r: (sf[j] * sg[j])[:, None] * r ** power, r_min)

    def lq_norm(self, values: np.ndarray, q: float, r_min: float = 0.0) -> float:
        """(∫ |f|^q r^{d-1} dr)^{1/q} with the lumped weights; q = inf gives the sup."""
        if np.isinf(q):
            mask = self.r >= r_min
            return float(np.max(np.abs(values[mask]))) if np.any(mask) else 0.0
        weights = self.node_weights(r_min)
        return float(np.sum(weights * np.abs(values) ** q) ** (1.0 / q))


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray
    blown_up: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N,):
            raise GridMismatch(
                "field length does not match grid",
                {"values": values.shape[0] if values.ndim else 0, "N": self.grid.N},
            )
        if not self.blown_up and not np.all(np.isfinite(values)):
            raise GridMismatch("field contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "RadialField":
        return cls(grid, np.asarray(fn(grid.r), dtype=float) * np.ones(grid.N))

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialField":
        return cls(grid, np.zeros(grid.N))

    def with_values(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, values)

    def __add__(self, other: "RadialField") -> "RadialField":
        _require_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "RadialField") -> "RadialField":
        _require_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def scaled(self, factor: float) -> "RadialField":
        return self.with_values(factor * self.values)


@dataclass(frozen=True, eq=False)
class StatePair:
    pos: RadialField
    vel: RadialField
    t: float = field(default=0.0)

    def __post_init__(self):
        _require_same_grid(self.pos, self.vel)

    @property
    def grid(self) -> RadialGrid:
        return self.pos.grid

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "StatePair":
        return cls(RadialField.zeros(grid), RadialField.zeros(grid))

    @classmethod
    def from_arrays(cls, grid: RadialGrid, pos: np.ndarray, vel: np.ndarray, t: float = 0.0) -> "StatePair":
        return cls(RadialField(grid, pos), RadialField(grid, vel), t)

    def __add__(self, other: "StatePair") -> "StatePair":
        return StatePair(self.pos + other.pos, self.vel + other.vel, self.t)

    def __sub__(self, other: "StatePair") -> "StatePair":
        return StatePair(self.pos - other.pos, self.vel - other.vel, self.t)

    def scaled(self, factor: float) -> "StatePair":
        return StatePair(self.pos.scaled(factor), self.vel.scaled(factor), self.t)


def _require_same_grid(f: RadialField, g: RadialField) -> None:
    if not f.grid.same_as(g.grid):
        raise GridMismatch("fields live on different grids")


def weighted_l2(f: RadialField, g: RadialField, r_min: float = 0.0) -> float:
    """∫_{r_min}^{R_max} f g r^{d-1} dr by the lumped (trapezoid) rule."""
    _require_same_grid(f, g)
    weights = f.grid.node_weights(r_min)
    return float(np.sum(weights * f.values * g.values))


def h1_seminorm_sq(f: RadialField, r_min: float = 0.0) -> float:
    """∫_{r_min}^{R_max} (∂_r f)^2 r^{d-1} dr with ∂_r the interpolant's cell slope."""
    return f.grid.slope_product(f.values, f.values, f.grid.d - 1, r_min)


def energy_pair_norm(s: StatePair, r_min: float = 0.0) -> float:
    """Norm of (u, u_t) in Ḣ¹ × L²(r >= r_min)."""
    return float(np.sqrt(h1_seminorm_sq(s.pos, r_min) + weighted_l2(s.vel, s.vel, r_min)))
