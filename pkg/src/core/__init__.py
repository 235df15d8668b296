"""
Model parameters, radial grids, fields and weighted integrals
"""

from .params import ModelParams, make_params
from .grid import (
    RadialGrid,
    RadialField,
    StatePair,
    weighted_l2,
    h1_seminorm_sq,
    energy_pair_norm,
)

__all__ = [
    "ModelParams",
    "make_params",
    "RadialGrid",
    "RadialField",
    "StatePair",
    "weighted_l2",
    "h1_seminorm_sq",
    "energy_pair_norm",
]
