import numpy as np
import pytest
from scipy.special import gamma

from src.core import (
    RadialField,
    RadialGrid,
    StatePair,
    energy_pair_norm,
    h1_seminorm_sq,
    make_params,
    weighted_l2,
)
from src.core.profiles import bump, random_state, taper, truncate_inside
from src.errors import GridMismatch, InvalidParams, RegionError


class TestParams:
    def test_critical_exponents(self):
        params = make_params(7, 3)
        assert params.s_p == pytest.approx(2.5)
        assert params.q_p == pytest.approx(7.0)
        assert params.beta == pytest.approx(3.0)
        assert params.energy_supercritical

    def test_energy_critical_case(self):
        params = make_params(3, 5)
        assert params.s_p == pytest.approx(1.0)
        assert not params.energy_supercritical

    @pytest.mark.parametrize("d,p", [(4, 3), (1, 3), (7, 2), (7, 1), (7, 4)])
    def test_rejects_even_or_small(self, d, p):
        with pytest.raises(InvalidParams):
            make_params(d, p)

    def test_rejects_non_integer(self):
        with pytest.raises(InvalidParams):
            make_params(7.5, 3)


class TestGrid:
    def test_must_start_at_origin(self):
        with pytest.raises(InvalidParams):
            RadialGrid(r=np.linspace(0.1, 1.0, 10), d=3)

    def test_must_increase(self):
        with pytest.raises(InvalidParams):
            RadialGrid(r=np.array([0.0, 1.0, 1.0, 2.0]), d=3)

    def test_region_check(self):
        grid = RadialGrid.uniform(4.0, 65, 5)
        with pytest.raises(RegionError):
            grid.check_region(5.0)

    def test_constant_integral_is_exact(self):
        grid = RadialGrid.uniform(3.0, 101, 7)
        one = RadialField(grid, np.ones(grid.N))
        assert weighted_l2(one, one) == pytest.approx(3.0 ** 7 / 7, rel=1e-12)

    def test_partial_region(self):
        grid = RadialGrid.uniform(3.0, 101, 5)
        one = RadialField(grid, np.ones(grid.N))
        expected = (3.0 ** 5 - 1.3 ** 5) / 5
        assert weighted_l2(one, one, r_min=1.3) == pytest.approx(expected, rel=1e-12)

    def test_linear_moment_is_exact(self):
        grid = RadialGrid.uniform(2.0, 33, 5)
        assert grid.interp_moment(grid.r.copy(), 3) == pytest.approx(2.0 ** 5 / 5, rel=1e-12)

    def test_gradient_of_linear_field(self):
        grid = RadialGrid.uniform(2.0, 33, 5)
        f = RadialField(grid, grid.r.copy())
        assert h1_seminorm_sq(f) == pytest.approx(2.0 ** 5 / 5, rel=1e-12)

    def test_gradient_error_is_second_order(self):
        exact = 2.0 * gamma(4.5) / 2.0 ** 4.5
        errors = []
        for N in (257, 513, 1025):
            grid = RadialGrid.uniform(8.0, N, 7)
            f = RadialField(grid, np.exp(-grid.r ** 2))
            errors.append(abs(h1_seminorm_sq(f) - exact))
        for coarse, fine in zip(errors, errors[1:]):
            assert 3.5 < coarse / fine < 4.5

    def test_sup_norm(self):
        grid = RadialGrid.uniform(2.0, 33, 3)
        values = np.sin(grid.r)
        assert grid.lq_norm(values, np.inf) == pytest.approx(np.max(np.abs(values)))


class TestFields:
    def test_length_mismatch(self):
        grid = RadialGrid.uniform(1.0, 10, 3)
        with pytest.raises(GridMismatch):
            RadialField(grid, np.zeros(9))

    def test_non_finite_values(self):
        grid = RadialGrid.uniform(1.0, 10, 3)
        values = np.zeros(10)
        values[3] = np.nan
        with pytest.raises(GridMismatch):
            RadialField(grid, values)

    def test_pair_on_different_grids(self):
        a = RadialGrid.uniform(1.0, 10, 3)
        b = RadialGrid.uniform(2.0, 10, 3)
        with pytest.raises(GridMismatch):
            StatePair(RadialField.zeros(a), RadialField.zeros(b))

    def test_arithmetic(self):
        grid = RadialGrid.uniform(1.0, 10, 3)
        s = StatePair.from_arrays(grid, np.ones(10), 2 * np.ones(10))
        total = (s + s.scaled(2.0)) - s
        np.testing.assert_allclose(total.pos.values, 2.0)
        np.testing.assert_allclose(total.vel.values, 4.0)

    def test_energy_norm_of_zero(self):
        grid = RadialGrid.uniform(1.0, 10, 3)
        assert energy_pair_norm(StatePair.zeros(grid)) == 0.0


class TestProfiles:
    def test_bump_support_and_peak(self):
        x = np.array([-1.5, -1.0, 0.0, 0.5, 1.0])
        values = bump(x)
        assert values[2] == pytest.approx(1.0)
        assert values[0] == values[1] == values[4] == 0.0
        assert 0.0 < values[3] < 1.0

    def test_taper_plateau(self):
        r = np.linspace(0.0, 4.0, 81)
        chi = taper(r, 1.0, 3.0)
        np.testing.assert_allclose(chi[r <= 1.0], 1.0)
        np.testing.assert_allclose(chi[r >= 3.0], 0.0)
        assert np.all(np.diff(chi) <= 1e-15)

    def test_truncate_inside(self):
        grid = RadialGrid.uniform(4.0, 41, 3)
        out = truncate_inside(grid.r ** 2, grid, 2.0)
        np.testing.assert_allclose(out[grid.r <= 2.0], 4.0)
        np.testing.assert_allclose(out[grid.r > 2.0], grid.r[grid.r > 2.0] ** 2)

    def test_random_state_support(self, grid7, rng):
        s = random_state(grid7, rng, 1.0, 3.0)
        outside = (grid7.r < 1.0) | (grid7.r > 3.0)
        assert np.all(s.pos.values[outside] == 0.0)
        assert np.all(s.vel.values[outside] == 0.0)
        assert np.any(s.pos.values != 0.0)

    def test_random_state_position_only(self, grid7, rng):
        s = random_state(grid7, rng, 1.0, 3.0, kind="position")
        assert np.all(s.vel.values == 0.0)
