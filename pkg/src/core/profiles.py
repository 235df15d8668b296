"""
Smooth test data: C^∞ bumps, plateau tapers and random compactly supported fields.
"""

from typing import Optional

import numpy as np

from src.core.grid import RadialField, RadialGrid, StatePair


def bump(x: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - x²)) on |x| < 1, zero outside; peak value 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def _edge(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def taper(r: np.ndarray, a: float, b: float) -> np.ndarray:
    """C^∞ cutoff: 1 on r <= a, 0 on r >= b."""
    x = (np.asarray(r, dtype=float) - a) / (b - a)
    lo, hi = _edge(1.0 - x), _edge(x)
    return lo / (lo + hi)


def truncate_inside(values: np.ndarray, grid: RadialGrid, R: float) -> np.ndarray:
    """Replace f on r <= R by the constant f(R) (the inner truncation of exterior data)."""
    out = np.array(values, dtype=float)
    inside = grid.r <= R
    out[inside] = np.interp(R, grid.r, values)
    return out


def random_bumps(grid: RadialGrid, rng: np.random.Generator, lo: float, hi: float,
                 count: int = 3, min_width: Optional[float] = None) -> np.ndarray:
    """Sum of `count` bumps with supports inside [lo, hi] and normal amplitudes."""
    half = (hi - lo) / 2.0
    min_width = min(min_width or half / 2.0, half)
    values = np.zeros(grid.N)
    for _ in range(count):
        width = rng.uniform(min_width, half)
        center = rng.uniform(lo + width, hi - width)
        values += rng.normal() * bump((grid.r - center) / width)
    return values


def random_state(grid: RadialGrid, rng: np.random.Generator, lo: float, hi: float,
                 count: int = 3, min_width: Optional[float] = None,
                 kind: str = "both") -> StatePair:
    """Random compactly supported (u0, u1); kind in {both, position, velocity}."""
    pos = random_bumps(grid, rng, lo, hi, count, min_width)
    vel = random_bumps(grid, rng, lo, hi, count, min_width)
    if kind == "position":
        vel = np.zeros(grid.N)
    elif kind == "velocity":
        pos = np.zeros(grid.N)
    return StatePair(RadialField(grid, pos), RadialField(grid, vel))
