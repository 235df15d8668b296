import numpy as np
import pytest
from scipy.integrate import quad

from src.core import RadialGrid, StatePair
from src.core.profiles import random_state
from src.errors import CausalityError, InvalidParams, RegionError
from src.solvers.channels import (
    ExteriorState,
    channel_verify,
    coefficient_discrepancy,
    equality_gap,
    extrapolated_gap,
    gram_projection_coeffs,
    moment_identities_check,
    norm_formulas,
    p_r_element,
    plane_spec,
    position_coeff_matrix,
    position_gram,
    position_moment_matrix,
    project,
    projection_coeffs,
    truncate_state,
    velocity_coeff_matrix,
    velocity_moment_matrix,
)
from src.solvers.linear_wave import exterior_energy, free_flow
from src.solvers.spectral import build_basis


@pytest.mark.parametrize("d,k,k_tilde", [(3, 0, 1), (5, 1, 1), (7, 1, 2), (9, 2, 2), (11, 2, 3)])
def test_plane_dimensions(d, k, k_tilde):
    spec = plane_spec(d)
    assert (spec.k, spec.k_tilde) == (k, k_tilde)
    assert spec.dimension == k + k_tilde


def test_plane_needs_odd_dimension():
    with pytest.raises(InvalidParams):
        plane_spec(6)


@pytest.mark.parametrize("d", [5, 7, 9, 11])
@pytest.mark.parametrize("R", [0.5, 3.0])
def test_gram_matrices_against_quadrature(d, R):
    spec = plane_spec(d)
    pos = spec.position_exponents
    vel = spec.velocity_exponents
    expected_pos = np.array([[
        quad(lambda r: a * b * r ** (a + b - 2 + d - 1), R, np.inf)[0] for b in pos] for a in pos])
    expected_vel = np.array([[
        quad(lambda r: r ** (a + b + d - 1), R, np.inf)[0] for b in vel] for a in vel])
    np.testing.assert_allclose(position_gram(d, R), expected_pos, rtol=1e-6)
    if vel:
        np.testing.assert_allclose(velocity_moment_matrix(d, R), expected_vel, rtol=1e-6)


@pytest.mark.parametrize("d", [5, 7, 9, 11, 13])
def test_closed_forms_invert_moment_maps(d):
    R = 2.5
    spec = plane_spec(d)
    np.testing.assert_allclose(position_coeff_matrix(d, R) @ position_moment_matrix(d, R),
                               np.eye(spec.k_tilde), atol=1e-9)
    if spec.k:
        np.testing.assert_allclose(velocity_coeff_matrix(d, R) @ velocity_moment_matrix(d, R),
                                   np.eye(spec.k), atol=1e-9)


class TestProjection:
    R = 3.0

    def test_plane_element_is_fixed(self, grid7):
        element = ExteriorState.plane_element(grid7, self.R, [0.7, -1.3], [0.4])
        coeffs = projection_coeffs(element, self.R)
        np.testing.assert_allclose(coeffs.lam, [0.7, -1.3], rtol=1e-9)
        np.testing.assert_allclose(coeffs.mu, [0.4], rtol=1e-9)

    def test_pythagoras_and_orthogonality(self, state7):
        ext = ExteriorState.from_state(state7, self.R)
        pi, pi_perp = project(state7, self.R)
        total = ext.norm_sq()
        assert abs(pi.inner(pi_perp)) <= 1e-8 * total
        assert pi.norm_sq() + pi_perp.norm_sq() == pytest.approx(total, rel=1e-8)

    def test_idempotent(self, state7):
        pi, pi_perp = project(state7, self.R)
        again, rest = project(pi, self.R)
        np.testing.assert_allclose(again.lam, pi.lam, rtol=1e-8)
        np.testing.assert_allclose(again.mu, pi.mu, rtol=1e-8)
        assert rest.norm_sq() <= 1e-8 * pi.norm_sq()
        kernel, _ = project(pi_perp, self.R)
        assert kernel.norm_sq() <= 1e-8 * pi_perp.norm_sq()

    @pytest.mark.parametrize("R", [2.0, 3.0, 4.5])
    def test_closed_form_matches_normal_equations(self, grid7, rng, R):
        for _ in range(5):
            s = random_state(grid7, rng, 0.5, 6.0)
            closed = projection_coeffs(s, R)
            normal = gram_projection_coeffs(s, R)
            scale = np.max(np.abs(closed.as_vector()))
            np.testing.assert_allclose(normal.as_vector(), closed.as_vector(), atol=1e-6 * scale)
            assert coefficient_discrepancy(s, R) < 1e-6

    def test_complement_is_orthogonal_to_each_plane_direction(self, state7):
        spec = plane_spec(7)
        _, pi_perp = project(state7, self.R)
        scale = np.sqrt(ExteriorState.from_state(state7, self.R).norm_sq())
        for i in range(spec.dimension):
            unit = np.zeros(spec.dimension)
            unit[i] = 1.0
            element = ExteriorState.plane_element(state7.grid, self.R, unit[:spec.k_tilde],
                                                  unit[spec.k_tilde:])
            assert abs(pi_perp.inner(element)) <= 1e-8 * scale * np.sqrt(element.norm_sq())

    def test_moment_identities(self, grid7, rng):
        for _ in range(5):
            s = random_state(grid7, rng, 0.5, 6.0)
            assert moment_identities_check(s, self.R).max_residual < 1e-5

    def test_cutoff_outside_grid(self, state7):
        with pytest.raises(RegionError):
            project(state7, 20.0)

    def test_norm_formulas_report_true_norms(self, state7):
        formulas = norm_formulas(state7, self.R)
        pi, pi_perp = project(state7, self.R)
        assert formulas.pi_norm_sq == pytest.approx(pi.norm_sq())
        assert formulas.pi_perp_norm_sq == pytest.approx(pi_perp.norm_sq())
        assert formulas.pi_proxy > 0


def test_truncation_freezes_interior(state7):
    out = truncate_state(state7, 2.0)
    inside = state7.grid.r <= 2.0
    assert np.ptp(out.pos.values[inside]) == 0.0
    assert np.all(out.vel.values[state7.grid.r < 2.0] == 0.0)


def test_p_r_element_taper_order(grid7):
    with pytest.raises(InvalidParams):
        p_r_element(grid7, 3.0, [1.0, 0.0], [0.0], taper_start=10.0, taper_end=8.0)


class TestChannelEstimate:
    @pytest.fixture(scope="class")
    def setup(self):
        grid = RadialGrid.uniform(16.0, 1024, 7)
        return grid, build_basis(grid)

    def test_causality_budget(self, setup, rng):
        grid, basis = setup
        data = random_state(grid, rng, 0.5, 4.0)
        with pytest.raises(CausalityError):
            channel_verify(data, 2.0, 13.0, basis, R1=4.0)

    def test_exterior_energy_dominates_bound(self, setup, rng):
        grid, basis = setup
        for _ in range(4):
            data = random_state(grid, rng, 0.5, 4.0)
            report = channel_verify(data, 2.0, 8.0, basis, R1=4.0)
            assert report.verdict
            assert report.exterior_max >= report.bound - 1e-3 * report.data_norm_sq

    def test_extrapolation_is_reported_separately(self, setup, rng):
        grid, basis = setup
        data = random_state(grid, rng, 0.5, 4.0, kind="position")
        report = channel_verify(data, 2.0, 8.0, basis, R1=4.0)
        assert equality_gap(report) == pytest.approx(
            abs(report.exterior_max - report.bound) / report.bound)
        assert np.isfinite(extrapolated_gap(report))


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["position", "velocity"])
def test_equality_case_at_finite_horizon(kind):
    grid = RadialGrid.uniform(48.0, 1536, 7)
    basis = build_basis(grid)
    data = random_state(grid, np.random.default_rng(5), 0.5, 3.0, kind=kind)
    report = channel_verify(data, 1.0, 24.0, basis, R1=3.0)
    assert report.bound > 0
    assert equality_gap(report) < 0.05


@pytest.mark.slow
def test_harmonic_profile_carries_no_exterior_energy():
    grid = RadialGrid.uniform(40.0, 2048, 7)
    basis = build_basis(grid)
    R, T = 2.0, 8.0
    data = p_r_element(grid, R, [1.0, 0.0], [0.0], taper_start=16.0, taper_end=32.0)
    initial = ExteriorState.plane_element(grid, R, [1.0, 0.0], [0.0]).norm_sq()
    later = max(exterior_energy(free_flow(data, t, basis), R, t) for t in (T, -T))
    assert later < 1e-3 * initial


def test_zero_state_has_zero_projection(grid7):
    pi, pi_perp = project(StatePair.zeros(grid7), 3.0)
    assert pi.norm_sq() == 0.0
    assert pi_perp.norm_sq() == 0.0
