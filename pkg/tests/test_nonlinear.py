import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from src.core import RadialGrid, StatePair, make_params
from src.core.profiles import random_state
from src.errors import InvalidParams, PreconditionError
from src.models.schemas import EvolveConfig, RunOutcome
from src.solvers.linear_wave import Trajectory, exterior_energy
from src.solvers.nonlinear import (
    admissible_triple,
    blowup_constant,
    blowup_plateau_state,
    cauchy_schwarz_check,
    concavity_functional,
    conserved_energy,
    critical_norm,
    energy_scale,
    evolve,
    explicit_blowup,
    levine_experiment,
    nonlinearity,
    plateau_state,
    rescale_state,
    scattering_fit,
    sp_norm,
    sp_norm_stability,
    sp_triple,
    tune_zero_energy,
    virial,
)
from src.solvers.spectral import build_basis


@pytest.fixture(scope="module")
def plateau_setup():
    grid = RadialGrid.uniform(8.0, 512, 7)
    return grid, build_basis(grid)


@pytest.fixture(scope="module")
def fine_setup():
    grid = RadialGrid.uniform(16.0, 2048, 7)
    return grid, build_basis(grid)


def test_nonlinearity_is_odd():
    u = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(nonlinearity(u, 3), u ** 3)
    np.testing.assert_allclose(nonlinearity(-u, 5), -nonlinearity(u, 5))


def test_blowup_constant_solves_the_ode():
    assert blowup_constant(3) == pytest.approx(math.sqrt(2.0))
    p, T = 5, 1.0
    t = np.array([0.0, 0.3, 0.6])
    u, du = explicit_blowup(p, T, t)
    a = 2.0 / (p - 1)
    second = a * (a + 1) * blowup_constant(p) * (T - t) ** (-a - 2)
    np.testing.assert_allclose(second, u ** p, rtol=1e-12)
    np.testing.assert_allclose(du, a * u / (T - t), rtol=1e-12)


class TestVirial:
    def test_zero_energy_tuning(self, grid7, rng, params73):
        s = tune_zero_energy(random_state(grid7, rng, 0.5, 4.0), params73)
        assert abs(conserved_energy(s, params73)) <= 1e-10 * energy_scale(s, params73)

    def test_cauchy_schwarz_margin(self, grid7, rng, params73):
        for _ in range(10):
            s = tune_zero_energy(random_state(grid7, rng, 0.5, 4.0), params73)
            y, _, y_second = virial(s, params73)
            assert cauchy_schwarz_check(s, params73) >= -1e-9 * abs(y * y_second)

    def test_margin_needs_zero_energy(self, grid7, rng, params73):
        s = random_state(grid7, rng, 0.5, 4.0).scaled(0.01)
        with pytest.raises(PreconditionError):
            cauchy_schwarz_check(s, params73)

    def test_tuning_needs_position(self, grid7, rng, params73):
        s = random_state(grid7, rng, 0.5, 4.0, kind="velocity")
        with pytest.raises(PreconditionError):
            tune_zero_energy(s, params73)


class TestStrichartz:
    def test_sp_pair_is_admissible(self, params73):
        triple = sp_triple(params73)
        assert triple.q == pytest.approx(4.0)
        assert triple.r == pytest.approx(28.0 / 3.0)
        assert triple.gamma == pytest.approx(params73.s_p)

    def test_inadmissible(self):
        with pytest.raises(InvalidParams):
            admissible_triple(1.0, 4.0, 0.5, 7)

    def test_empty_trajectory(self, params73):
        assert sp_norm(Trajectory(), params73) == 0.0


class TestScaling:
    def test_identity_rescale(self, state7, params73):
        same = rescale_state(state7, 1.0, params73)
        np.testing.assert_allclose(same.pos.values, state7.pos.values, atol=1e-12)

    def test_positive_parameter(self, state7, params73):
        with pytest.raises(InvalidParams):
            rescale_state(state7, 0.0, params73)

    def test_round_trip(self, grid7, rng, params73):
        s = random_state(grid7, rng, 1.0, 3.0, min_width=0.8)
        back = rescale_state(rescale_state(s, 1.25, params73), 0.8, params73)
        scale = np.max(np.abs(s.pos.values))
        np.testing.assert_allclose(back.pos.values, s.pos.values, atol=1e-4 * scale)

    def test_amplitude_law(self, grid7, rng, params73):
        s = random_state(grid7, rng, 1.0, 3.0, min_width=0.8)
        scaled = rescale_state(s, 2.0, params73)
        assert np.max(np.abs(scaled.pos.values)) == pytest.approx(
            0.5 * np.max(np.abs(s.pos.values)), rel=1e-2)

    def test_critical_norm_is_scale_invariant(self, fine_setup, rng, params73):
        grid, basis = fine_setup
        s = random_state(grid, rng, 1.0, 4.0, min_width=1.0)
        base = critical_norm(s, params73, basis)
        for lam in (0.8, 1.25):
            scaled = critical_norm(rescale_state(s, lam, params73), params73, basis)
            assert scaled == pytest.approx(base, rel=0.02)


class TestEvolve:
    def test_zero_data_stays_zero(self, grid7, basis7, params73):
        cfg = EvolveConfig(dt=0.05, T=1.0, save_every=5)
        traj, report = evolve(StatePair.zeros(grid7), params73, cfg, basis7)
        assert report.outcome == RunOutcome.COMPLETED
        assert np.all(traj.final.pos.values == 0.0)
        assert report.final_time == pytest.approx(1.0)

    def test_energy_drift_small_data(self, grid7, basis7, rng, params73):
        s0 = random_state(grid7, rng, 0.5, 3.0).scaled(0.05)
        cfg = EvolveConfig(dt=0.01, T=2.0, save_every=10)
        _, report = evolve(s0, params73, cfg, basis7)
        assert report.outcome == RunOutcome.COMPLETED
        assert report.energy_drift < 1e-5
        assert len(report.histories["t"]) == len(report.histories["energy"])

    def test_time_reversal(self, grid7, basis7, rng, params73):
        s0 = random_state(grid7, rng, 0.5, 3.0).scaled(0.2)
        cfg = EvolveConfig(dt=0.02, T=1.0, save_every=10)
        forward, _ = evolve(s0, params73, cfg, basis7)
        backward, _ = evolve(forward.final, params73, cfg, basis7, reverse=True)
        start = backward.states[0]
        assert start.t == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(start.pos.values, s0.pos.values, atol=1e-9)
        np.testing.assert_allclose(start.vel.values, s0.vel.values, atol=1e-9)

    def test_strang_error_is_second_order(self, grid7, basis7, rng, params73):
        s0 = random_state(grid7, rng, 0.5, 3.0, min_width=0.8).scaled(0.5)

        def final(dt):
            traj, report = evolve(s0, params73, EvolveConfig(dt=dt, T=1.0, save_every=10), basis7)
            assert report.outcome == RunOutcome.COMPLETED
            return traj.final.pos.values

        reference = final(0.0025)
        coarse = np.max(np.abs(final(0.02) - reference))
        fine = np.max(np.abs(final(0.01) - reference))
        assert 3.5 < coarse / fine < 5.0

    @pytest.mark.slow
    def test_nonlinear_finite_speed(self, fine_setup, rng, params73):
        grid, basis = fine_setup
        support = 3.0
        s0 = random_state(grid, rng, 0.5, support).scaled(0.3)
        traj, report = evolve(s0, params73, EvolveConfig(dt=0.01, T=4.0, save_every=100), basis)
        assert report.outcome == RunOutcome.COMPLETED
        total = exterior_energy(s0, 0.0, 0.0)
        for t, state in zip(traj.times, traj.states):
            if t >= 2.0:
                assert exterior_energy(state, support + 0.1 * t, t) < 1e-4 * total

    def test_plateau_matches_ode(self, plateau_setup):
        grid, basis = plateau_setup
        params = make_params(7, 3)
        height = 0.5
        s0 = plateau_state(grid, height, 0.0, 2.0, 3.0)
        cfg = EvolveConfig(dt=0.005, T=1.0, save_every=20)
        traj, _ = evolve(s0, params, cfg, basis)
        oracle = solve_ivp(lambda t, z: [z[1], z[0] ** 3], (0.0, 1.0), [height, 0.0],
                           method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
        expected = oracle.sol(np.asarray(traj.times))[0]
        np.testing.assert_allclose(traj.positions()[:, 0], expected, rtol=1e-4)

    def test_closed_form_blowup_time(self, plateau_setup):
        grid, basis = plateau_setup
        params = make_params(7, 3)
        s0 = blowup_plateau_state(grid, 3, 1.0, 2.0, 3.0)
        assert s0.pos.values[0] == pytest.approx(math.sqrt(2.0))
        cfg = EvolveConfig(dt=0.005, T=1.5, save_every=10)
        _, report = evolve(s0, params, cfg, basis)
        assert report.outcome == RunOutcome.BLOWUP_DETECTED
        assert report.blowup_time == pytest.approx(1.0, rel=0.05)


class TestLevine:
    def test_positive_energy_rejected(self, grid7, basis7, rng, params73):
        s0 = random_state(grid7, rng, 0.5, 3.0).scaled(0.01)
        with pytest.raises(PreconditionError):
            levine_experiment(s0, params73, EvolveConfig(dt=0.01, T=1.0), basis7)

    def test_concavity_of_exact_blowup(self):
        t = np.linspace(0.0, 0.9, 10)
        y = (1.0 - t) ** -2.0
        profile = concavity_functional(t, y, 3)
        assert profile.concave
        assert profile.zero_estimate == pytest.approx(1.0, rel=1e-9)


class TestScattering:
    def test_small_data_scatters(self, grid7, basis7, rng, params73):
        s0 = random_state(grid7, rng, 0.5, 3.0).scaled(0.01)
        traj, _ = evolve(s0, params73, EvolveConfig(dt=0.02, T=2.0, save_every=10), basis7)
        profile, residual = scattering_fit(traj, basis7, params73)
        assert profile.t == pytest.approx(0.0, abs=1e-12)
        assert residual.shape == (len(traj),)
        assert residual[-1] <= 1e-10 * critical_norm(traj.final, params73, basis7)
        assert residual.max() <= 1e-2 * critical_norm(s0, params73, basis7)

    def test_needs_completed_run(self, params73, basis7):
        with pytest.raises(PreconditionError):
            scattering_fit(Trajectory(), basis7, params73)

    def test_sp_norm_stride_stability(self, grid7, basis7, rng, params73):
        s0 = random_state(grid7, rng, 0.5, 3.0).scaled(0.01)
        traj, _ = evolve(s0, params73, EvolveConfig(dt=0.01, T=2.0, save_every=1), basis7)
        assert sp_norm(traj, params73) > 0.0
        assert sp_norm_stability(traj, params73) < 0.05
