"""
Model parameters for the focusing equation u_tt - Δu = |u|^{p-1}u in odd dimension d.
"""

from dataclasses import dataclass

from src.errors import InvalidParams


@dataclass(frozen=True)
class ModelParams:
    d: int
    p: int
    s_p: float
    q_p: float
    beta: float

    @property
    def scaling_exponent(self) -> float:
        """Exponent 2/(p-1) of the scaling u -> λ^{-2/(p-1)} u(x/λ)."""
        return 2.0 / (self.p - 1)

    @property
    def energy_supercritical(self) -> bool:
        return self.s_p > 1.0


def make_params(d: int, p: int) -> ModelParams:
    """Validate (d, p) and derive the critical exponents."""
    for name, value in (("d", d), ("p", p)):
        if isinstance(value, bool) or int(value) != value:
            raise InvalidParams(f"{name} must be an integer", {name: value})
    d, p = int(d), int(p)
    if d < 3 or d % 2 == 0:
        raise InvalidParams("dimension must be odd and >= 3", {"d": d})
    if p < 3 or p % 2 == 0:
        raise InvalidParams("exponent must be odd and >= 3", {"p": p})

    s_p = d / 2.0 - 2.0 / (p - 1)
    q_p = d * (p - 1) / 2.0
    beta = ((d - 2) / 2.0) * (p - (d + 2) / (d - 2))
    return ModelParams(d=d, p=p, s_p=s_p, q_p=q_p, beta=beta)
