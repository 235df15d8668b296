from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Optional, Dict, Any, List, Tuple
from enum import Enum

from src.errors import CausalityError

class ExperimentTag(str, Enum):
    CHANNELS = "channels"
    STATIONARY = "stationary"
    EVOLVE = "evolve"
    LEVINE = "levine"
    ENVELOPE = "envelope"
    VERIFY_ALL = "verify-all"

class RunOutcome(str, Enum):
    COMPLETED = "completed"
    BLOWUP_DETECTED = "blowup_detected"
    CAUSALITY_STOP = "causality_stop"

class SplittingMethod(str, Enum):
    STRANG = "strang"

def _require_odd(name: str, value: int, minimum: int) -> int:
    if value < minimum or value % 2 == 0:
        raise ValueError(f"{name} must be odd and >= {minimum}")
    return value

# ---------------------------------------------------------------- configs

class GridConfig(BaseModel):
    N: int = Field(4096, ge=64)
    R_max: float = Field(64.0, gt=0)

class ChannelsConfig(BaseModel):
    R: float = Field(4.0, gt=0)
    R1: float = Field(12.0, gt=0)
    T: float = Field(24.0, gt=0)
    samples: int = Field(30, ge=1)
    equality_tolerance: float = Field(0.05, gt=0)
    margin_tolerance: float = Field(1e-3, ge=0)
    algebra_samples: int = Field(50, ge=1)
    cutoffs: List[float] = Field(default_factory=lambda: [3.0, 4.0, 6.0])

    @model_validator(mode="after")
    def support_outside_cutoff(self):
        if self.R1 <= self.R:
            raise ValueError("support end R1 must exceed the cutoff R")
        return self

class StationaryConfig(BaseModel):
    x0: float = 0.01
    s0: float = 6.0
    s_min: float = -8.0
    rtol: float = Field(1e-11, gt=0)
    atol: float = Field(1e-30, gt=0)
    seed_cap: float = Field(0.1, gt=0)
    lams: List[float] = Field(default_factory=lambda: [0.5, 2.0])

    @model_validator(mode="after")
    def seed_within_cap(self):
        if abs(self.x0) > self.seed_cap:
            raise ValueError("|x0| exceeds the stable-manifold seed cap")
        if self.s_min >= self.s0:
            raise ValueError("s_min must be below the seed point s0")
        return self

class EvolveConfig(BaseModel):
    dt: float = Field(0.01, gt=0)
    T: float = Field(8.0, gt=0)
    save_every: int = Field(10, ge=1)
    blowup_threshold: float = Field(1e6, gt=0)
    method: SplittingMethod = SplittingMethod.STRANG

    @model_validator(mode="after")
    def horizon_covers_step(self):
        if self.T < self.dt:
            raise ValueError("horizon T must be at least one step dt")
        return self

class EvolveSectionConfig(BaseModel):
    amplitude: float = 0.05
    plateau: float = Field(2.0, gt=0)
    taper_end: float = Field(3.0, gt=0)
    run: EvolveConfig = Field(default_factory=EvolveConfig)

class LevineConfig(BaseModel):
    amplitude: float = 5.0
    small_amplitude: float = 0.05
    plateau: float = Field(2.0, gt=0)
    taper_end: float = Field(3.0, gt=0)
    refinements: int = Field(2, ge=0)
    run: EvolveConfig = Field(default_factory=lambda: EvolveConfig(dt=0.002, T=4.0, save_every=5))

class EnvelopeConfig(BaseModel):
    etas: List[float] = Field(default_factory=lambda: [0.3, 0.1, 0.03])
    samples: int = Field(20, ge=1)
    support: float = Field(6.0, gt=0)

class ExperimentConfig(BaseModel):
    experiment: ExperimentTag = ExperimentTag.VERIFY_ALL
    d: int = 7
    p: int = 3
    grid: GridConfig = Field(default_factory=GridConfig)
    seed: int = 20240517
    workers: int = Field(4, ge=1)
    output_dir: Optional[str] = None
    channels: ChannelsConfig = Field(default_factory=ChannelsConfig)
    stationary: StationaryConfig = Field(default_factory=StationaryConfig)
    evolve: EvolveSectionConfig = Field(default_factory=EvolveSectionConfig)
    levine: LevineConfig = Field(default_factory=LevineConfig)
    envelope: EnvelopeConfig = Field(default_factory=EnvelopeConfig)

    @field_validator("d")
    @classmethod
    def odd_dimension(cls, value: int) -> int:
        return _require_odd("d", value, 3)

    @field_validator("p")
    @classmethod
    def odd_exponent(cls, value: int) -> int:
        return _require_odd("p", value, 3)

    def check_causality(self) -> None:
        """Refuse horizons that let the far boundary reach the measured region."""
        R_max = self.grid.R_max
        budgets = {
            ExperimentTag.CHANNELS: (self.channels.T, R_max - self.channels.R1),
            ExperimentTag.EVOLVE: (self.evolve.run.T, R_max - self.evolve.taper_end),
            ExperimentTag.LEVINE: (self.levine.run.T, R_max - self.levine.taper_end),
        }
        tags = list(budgets) if self.experiment == ExperimentTag.VERIFY_ALL else [self.experiment]
        for tag in tags:
            if tag not in budgets:
                continue
            horizon, budget = budgets[tag]
            if horizon > budget:
                raise CausalityError(
                    f"{tag.value}: horizon {horizon} exceeds causality budget {budget}",
                    {"experiment": tag.value, "T": horizon, "budget": budget},
                )

    class Config:
        json_schema_extra = {
            "example": {
                "experiment": "channels",
                "d": 7,
                "p": 3,
                "grid": {"N": 4096, "R_max": 64.0},
                "seed": 20240517,
                "channels": {"R": 4.0, "R1": 12.0, "T": 24.0, "samples": 30}
            }
        }

# ---------------------------------------------------------------- reports

class ChannelReport(BaseModel):
    d: int
    p: int
    R: float
    T: float
    exterior_plus: float
    exterior_minus: float
    exterior_plus_half: float
    exterior_minus_half: float
    bound: float
    margin: float
    verdict: bool
    data_norm_sq: float = 0.0

    @property
    def exterior_max(self) -> float:
        return max(self.exterior_plus, self.exterior_minus)

    class Config:
        json_schema_extra = {
            "example": {
                "d": 7, "p": 3, "R": 4.0, "T": 24.0,
                "exterior_plus": 0.41, "exterior_minus": 0.39,
                "exterior_plus_half": 0.42, "exterior_minus_half": 0.40,
                "bound": 0.38, "margin": 0.03, "verdict": True
            }
        }

class RunReport(BaseModel):
    outcome: RunOutcome
    blowup_time: Optional[float] = None
    energy_drift: float = 0.0
    final_time: float = 0.0
    dt: float = 0.0
    steps: int = 0
    histories: Dict[str, List[float]] = Field(default_factory=dict)
    extras: Dict[str, Any] = Field(default_factory=dict)

class EnvelopeReport(BaseModel):
    a: Dict[int, float]
    beta: Dict[int, float]
    resolved_band: Tuple[int, int]
    l2_weighted: float

    @field_validator("a")
    @classmethod
    def nonnegative_blocks(cls, value: Dict[int, float]) -> Dict[int, float]:
        if any(v < 0 for v in value.values()):
            raise ValueError("envelope block norms must be nonnegative")
        return value

class TailsReport(BaseModel):
    eta: float
    c_eta: float
    C_eta: float
    degenerate: bool = False

class StationaryReport(BaseModel):
    d: int
    p: int
    x0: float
    lam: float
    ell: float
    tail_rate: Optional[float]
    residual_max: float
    singularity_floor: float
    forward_rate: Optional[float] = None
    correction_slope: Optional[float] = None

class CheckResult(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: Dict[str, Any] = Field(default_factory=dict)

class Manifest(BaseModel):
    experiment: str
    status: str
    exit_code: int
    config: Dict[str, Any]
    versions: Dict[str, str]
    artifacts: Dict[str, str] = Field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None
