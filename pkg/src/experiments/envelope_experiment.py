"""
Envelope Experiment

Harmonic-analysis suite (Parseval, Littlewood-Paley reconstruction, Bernstein),
frequency envelopes, small-tail cutoffs, radial Sobolev ratios and the
Ḣ^{3/4} × Ḣ^{-1/4} decay diagnostic.
"""

from typing import Any, Dict, List
import logging
import math

import numpy as np
import pandas as pd

from src.core import RadialField, RadialGrid, make_params, weighted_l2
from src.core.profiles import random_bumps, random_state
from src.errors import EmptyBlock
from src.models.schemas import CheckResult, ExperimentConfig
from src.services import ArtifactService, BasisService
from src.solvers.envelope import (
    decay_norm_curve,
    endpoint_sobolev_ratio,
    envelope,
    make_v,
    radial_sobolev_check,
    sobolev_scaling_exponent,
    state_norm,
    tails_report,
    trajectory_envelope,
    v_norm,
)
from src.solvers.nonlinear import evolve
from src.solvers.spectral import LPProfile, bernstein_check, lp_project, resolved_band
from src.experiments.checks import check_below, check_true

logger = logging.getLogger(__name__)

BERNSTEIN_FIELDS = 100


def slow_variation_excess(beta: Dict[int, float]) -> float:
    """max of β_k / (2 β_{k±1}) - 1 over neighbouring negative k (≤ 0 when slowly varying)."""
    worst = -1.0
    for k, value in beta.items():
        for nb in (k - 1, k + 1):
            if nb in beta and k < 0 and nb < 0 and beta[nb] > 0:
                worst = max(worst, value / (2.0 * beta[nb]) - 1.0)
    return worst


class EnvelopeExperiment:
    """
    Frequency envelopes and harmonic-analysis identities on the grid spectrum.
    """

    def __init__(self, config: ExperimentConfig, basis_service: BasisService):
        self.config = config
        self.basis_service = basis_service
        self.experiment_name = "envelope"

    def run(self, artifacts: ArtifactService) -> Dict[str, Any]:
        cfg = self.config
        en = cfg.envelope
        grid = RadialGrid.uniform(cfg.grid.R_max, cfg.grid.N, cfg.d)
        basis = self.basis_service.get(grid)
        params = make_params(cfg.d, cfg.p)
        profile = LPProfile()
        rng = np.random.default_rng(cfg.seed)

        state = random_state(grid, rng, 0.5, en.support)
        report = envelope(state, params, basis, profile)
        artifacts.write_json("envelope.json", report)
        band = sorted(report.a)
        artifacts.write_csv("envelope_blocks.csv", pd.DataFrame({
            "j": band,
            "a": [report.a[j] for j in band],
            "beta": [report.beta[j] for j in band],
        }), schema="envelope_blocks")

        total = state_norm(state, params.s_p, basis)
        v_gap = abs(v_norm(make_v(state, basis), params.s_p, basis) - total) / total
        checks: List[CheckResult] = [
            check_below("v_norm_equality", v_gap, 1e-10),
            check_below("envelope_slow_variation", slow_variation_excess(report.beta), 1e-12),
        ]

        tails = [tails_report(state, params, basis, eta) for eta in sorted(en.etas, reverse=True)]
        artifacts.write_csv("tails.csv", pd.DataFrame({
            "eta": [t.eta for t in tails],
            "c_eta": [t.c_eta for t in tails],
            "C_eta": [t.C_eta for t in tails],
            "degenerate": [int(t.degenerate) for t in tails],
        }), schema="small_tails")
        monotone = all(b.C_eta >= a.C_eta and b.c_eta <= a.c_eta for a, b in zip(tails, tails[1:]))
        checks.append(check_true("tails_monotone_in_eta", monotone))

        checks += self._harmonic_suite(grid, basis, profile, rng)
        checks += self._sobolev_sweep(grid, basis, rng, artifacts)

        small = state.scaled(cfg.evolve.amplitude / max(np.max(np.abs(state.pos.values)), 1e-300))
        traj, _ = evolve(small, params, cfg.evolve.run, basis)
        curve = decay_norm_curve(traj, basis)
        artifacts.write_csv("decay_curve.csv", pd.DataFrame({"t": curve.times, "norm": curve.values}),
                            schema="decay_norm")
        along = trajectory_envelope(traj, params, basis, profile)
        logger.info("  decay-norm trend %s, trajectory envelope ℓ² %.6g", curve.trend, along.l2_weighted)

        return {
            "experiment": self.experiment_name,
            "checks": checks,
            "summary": {
                "resolved_band": list(resolved_band(basis)),
                "l2_weighted": report.l2_weighted,
                "trajectory_l2_weighted": along.l2_weighted,
                "decay_trend": curve.trend,
            },
        }

    def _harmonic_suite(self, grid: RadialGrid, basis, profile: LPProfile, rng) -> List[CheckResult]:
        en = self.config.envelope
        f = RadialField(grid, random_bumps(grid, rng, 0.5, en.support))
        coeffs = basis.coefficients(f.values)
        parseval = abs(float(np.sum(coeffs ** 2)) - weighted_l2(f, f)) / weighted_l2(f, f)

        j_min, j_max = resolved_band(basis)
        pieces = sum(lp_project(f, 2.0 ** j, basis, profile).values for j in range(j_min, j_max + 1))
        projected = basis.synthesize(coeffs)
        reconstruction = float(np.max(np.abs(pieces - projected)) / np.max(np.abs(projected)))

        ratios = []
        interior = list(range(j_min + 1, j_max)) or [j_min]
        for index in range(BERNSTEIN_FIELDS):
            g = RadialField(grid, random_bumps(grid, rng, 0.5, en.support))
            j = interior[index % len(interior)]
            try:
                ratios.append(bernstein_check(g, 2.0 ** j, 1.0, basis, profile).ratio)
            except EmptyBlock:
                continue
        inside = bool(ratios) and all(0.5 <= r <= 4.0 for r in ratios)
        return [
            check_below("parseval", parseval, 1e-6),
            check_below("lp_reconstruction", reconstruction, 1e-8),
            check_true("bernstein_ratios", inside, max(ratios) if ratios else None,
                       fields=len(ratios), blocks=len(interior)),
        ]

    def _sobolev_sweep(self, grid: RadialGrid, basis, rng, artifacts: ArtifactService) -> List[CheckResult]:
        en = self.config.envelope
        d = grid.d
        q = sobolev_scaling_exponent(d, 1.0, 0.0, 2.0)
        ratios, endpoints = [], []
        for _ in range(en.samples):
            f = RadialField(grid, random_bumps(grid, rng, 0.5, en.support))
            ratios.append(radial_sobolev_check(f, 1.0, 0.0, 2.0, q, basis))
            endpoints.append(endpoint_sobolev_ratio(f))
        artifacts.write_csv("radial_sobolev.csv", pd.DataFrame({
            "sample": np.arange(len(ratios)), "ratio": ratios, "endpoint_ratio": endpoints,
        }), schema="radial_sobolev")
        finite = all(math.isfinite(r) for r in ratios + endpoints)
        return [check_true("radial_sobolev_bounded", finite, max(ratios),
                           endpoint_max=max(endpoints), q=q)]
