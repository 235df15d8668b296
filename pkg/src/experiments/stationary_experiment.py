"""
Stationary Experiment

Shoots the singular stationary profile, exports it and checks its asymptotics,
scaling law and non-membership trend.
"""

from typing import Any, Dict, List
import logging
import math

import numpy as np
import pandas as pd

from src.models.schemas import CheckResult, ExperimentConfig, StationaryReport
from src.services import ArtifactService, BasisService
from src.solvers.stationary import (
    correction_slope,
    derivative_consistency,
    elliptic_residual,
    fit_tail,
    q_integral_trend,
    rescale,
    shoot_stable,
    singularity_diagnostic,
)
from src.core import make_params
from src.experiments.checks import check_above, check_below, check_true

logger = logging.getLogger(__name__)

RESIDUAL_RANGE = (math.exp(-8.0), math.exp(6.0))


class StationaryExperiment:
    """
    Singular stationary solutions by stable-manifold shooting.
    """

    def __init__(self, config: ExperimentConfig, basis_service: BasisService):
        self.config = config
        self.basis_service = basis_service
        self.experiment_name = "stationary"

    def run(self, artifacts: ArtifactService) -> Dict[str, Any]:
        cfg = self.config
        st = cfg.stationary
        d, p = cfg.d, cfg.p
        params = make_params(d, p)

        profile = shoot_stable(st.x0, d, p, s0=st.s0, s_min=st.s_min, tol=st.rtol,
                               atol=st.atol, seed_cap=st.seed_cap)
        residual = elliptic_residual(profile, r_range=RESIDUAL_RANGE)
        consistency = derivative_consistency(profile, r_range=RESIDUAL_RANGE)
        ell, rate = fit_tail(profile, rtol=st.rtol)
        slope = correction_slope(profile, rtol=st.rtol)
        diag = singularity_diagnostic(profile)
        trend = q_integral_trend(profile, params.q_p)

        report = StationaryReport(
            d=d, p=p, x0=st.x0, lam=profile.lam, ell=ell, tail_rate=rate,
            residual_max=residual, singularity_floor=diag.floor,
            forward_rate=profile.forward_rate, correction_slope=slope,
        )
        r = profile.r
        artifacts.write_csv("profile.csv", pd.DataFrame({
            "r": r,
            "Z": profile.Z,
            "dZ_dr": profile.dZ_dr,
            "r_pow_d_minus_2_Z": r ** (d - 2) * profile.Z,
        }), schema="stationary_profile")
        artifacts.write_csv("q_integral.csv", pd.DataFrame({
            "eps": trend.eps, "integral": trend.values,
        }), schema="q_integral")

        expected_rate = d - p * (d - 2)
        checks: List[CheckResult] = [
            check_below("elliptic_residual", residual, 1e-6),
            check_below("derivative_consistency", consistency, 1e-5),
            check_below("forward_decay_rate",
                        abs(profile.forward_rate + (d - 3)) / (d - 3), 0.02),
            check_true("tail_rate", rate is not None and abs(rate - expected_rate) <= 0.1 * abs(expected_rate),
                       rate, expected=expected_rate),
            check_above("singularity_floor", diag.floor, 0.0),
            check_true("q_integral_diverges", trend.diverging, float(trend.values[-1])),
        ]

        scaled = []
        for lam in st.lams:
            other = rescale(profile, lam)
            other_ell, _ = fit_tail(other, rtol=st.rtol)
            rel = abs(other_ell - other.expected_ell) / abs(other.expected_ell)
            scaled.append(StationaryReport(
                d=d, p=p, x0=st.x0, lam=other.lam, ell=other_ell, tail_rate=None,
                residual_max=elliptic_residual(other, r_range=RESIDUAL_RANGE),
                singularity_floor=diag.floor,
            ))
            checks.append(check_below(f"scaling_law_lam_{lam:g}", rel, 0.02))
            logger.info("  λ=%g: ℓ=%.6g (expected %.6g)", lam, other_ell, other.expected_ell)

        artifacts.write_json("report.json", report)
        artifacts.write_json("scaled_reports.json", scaled)
        return {
            "experiment": self.experiment_name,
            "checks": checks,
            "summary": {"ell": ell, "tail_rate": rate, "residual_max": residual,
                        "derivative_consistency": consistency},
        }
