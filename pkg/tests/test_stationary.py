import math

import numpy as np
import pytest

from src.errors import InvalidParams, RangeError, ShootFailure
from src.solvers.stationary import (
    OdeState,
    StationaryProfile,
    correction_slope,
    derivative_consistency,
    elliptic_residual,
    fit_tail,
    ode_rhs,
    origin_jacobian,
    q_integral_trend,
    rescale,
    shoot_stable,
    singularity_diagnostic,
    stable_seed,
)

RESIDUAL_RANGE = (math.exp(-8.0), math.exp(6.0))


@pytest.fixture(scope="module")
def profile():
    return shoot_stable(0.01, 7, 3)


def test_origin_is_a_saddle():
    eig = np.sort(np.linalg.eigvals(origin_jacobian(7)).real)
    np.testing.assert_allclose(eig, [-4.0, 1.0])


def test_rest_point():
    assert ode_rhs(OdeState(s=0.0, x=0.0, y=0.0), 7, 3) == (0.0, 0.0)


def test_seed_follows_stable_direction():
    x, y = stable_seed(0.01, 7, 3, 6.0)
    assert x == pytest.approx(0.01 * math.exp(-24.0), rel=1e-6)
    assert y / x == pytest.approx(-4.0, rel=1e-6)


class TestShooting:
    @pytest.mark.parametrize("d,p", [(3, 3), (6, 3), (7, 2), (7, 4)])
    def test_parameter_range(self, d, p):
        with pytest.raises(InvalidParams):
            shoot_stable(0.01, d, p)

    def test_seed_cap(self):
        with pytest.raises(ShootFailure):
            shoot_stable(0.5, 7, 3)

    def test_zero_limit_gives_zero_profile(self):
        zero = shoot_stable(0.0, 7, 3)
        assert zero.is_trivial
        assert np.all(zero.Z == 0.0)
        assert elliptic_residual(zero) == 0.0
        assert fit_tail(zero) == (0.0, None)
        assert singularity_diagnostic(zero).trivial

    def test_residual(self, profile):
        assert elliptic_residual(profile, r_range=RESIDUAL_RANGE) < 1e-6

    def test_forward_decay_rate(self, profile):
        assert profile.forward_rate == pytest.approx(-4.0, rel=0.02)

    def test_limit_and_tail_rate(self, profile):
        ell, rate = fit_tail(profile)
        assert ell == pytest.approx(0.01, rel=1e-6)
        assert rate is not None
        assert rate == pytest.approx(7 - 3 * 5, rel=0.1)

    def test_correction_slope(self, profile):
        assert correction_slope(profile) == pytest.approx(-(7 - 2) * 3 + 3, rel=0.1)

    def test_profile_columns(self, profile):
        r = profile.r
        tail = r >= 100.0
        np.testing.assert_allclose((r ** 5 * profile.Z)[tail], 0.01, rtol=1e-6)
        assert np.all(np.isfinite(profile.dZ_dr))

    def test_perturbation_breaks_the_equation(self, profile):
        bumped = profile.perturbed(0.01, 1.0, 0.5)
        assert elliptic_residual(bumped, r_range=RESIDUAL_RANGE) > 1e-4

    def test_derivative_channel_matches_position(self, profile):
        assert derivative_consistency(profile, r_range=RESIDUAL_RANGE) < 1e-5

    def test_small_perturbation_is_detected(self, profile):
        bumped = profile.perturbed(1e-3, 1.0, 0.5)
        assert elliptic_residual(bumped, r_range=RESIDUAL_RANGE) > 1e-4
        assert derivative_consistency(bumped, r_range=RESIDUAL_RANGE) < 1e-5


class TestScaling:
    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_limit_scales(self, profile, lam):
        scaled = rescale(profile, lam)
        ell, _ = fit_tail(scaled)
        assert scaled.expected_ell == pytest.approx(0.01 * lam ** 4)
        assert ell == pytest.approx(scaled.expected_ell, rel=0.02)

    def test_rescaled_profile_still_solves(self, profile):
        assert elliptic_residual(rescale(profile, 2.0), r_range=RESIDUAL_RANGE) < 1e-6

    def test_identity(self, profile):
        assert rescale(profile, 1.0) is profile

    def test_positive_parameter(self, profile):
        with pytest.raises(InvalidParams):
            rescale(profile, -1.0)


class TestSingularity:
    def test_floor_is_positive(self, profile):
        report = singularity_diagnostic(profile)
        assert report.a == pytest.approx(0.0)
        assert report.floor > 0.0
        assert len(report.window_maxima) == 4

    def test_needs_deep_profile(self):
        shallow = shoot_stable(0.01, 7, 3, s_min=-4.0)
        with pytest.raises(RangeError):
            singularity_diagnostic(shallow)

    def test_q_integral_diverges(self, profile):
        trend = q_integral_trend(profile, 7.0)
        assert trend.monotone
        assert trend.diverging
        assert trend.values.size == 7

    def test_q_integral_range(self, profile):
        with pytest.raises(RangeError):
            q_integral_trend(profile, 7.0, eps_list=[1e-6])

    def test_tail_needs_far_field(self):
        short = shoot_stable(0.01, 7, 3, s0=1.0, forward_span=1.0)
        with pytest.raises(RangeError):
            fit_tail(short)


class TestTailFit:
    ELL = 0.01
    AMPLITUDE = 1.0

    @classmethod
    def synthetic(cls, s_hi):
        # r^5 Z = ℓ + A r^{-8} in d = 7
        def sampler(s):
            x = np.exp(-4.0 * s) * (cls.ELL + cls.AMPLITUDE * np.exp(-8.0 * s))
            y = -4.0 * cls.ELL * np.exp(-4.0 * s) - 12.0 * cls.AMPLITUDE * np.exp(-12.0 * s)
            return x, y
        return StationaryProfile(7, 3, cls.ELL, 1.0, -2.0, s_hi, sampler)

    def test_limit_is_extrapolated(self):
        profile = self.synthetic(3.0)
        s = np.linspace(math.log(10.0), 3.0, 200)
        plateau = np.median(np.exp(4.0 * s) * profile.state(s)[0])
        assert abs(plateau - self.ELL) > 1e-8 * self.ELL
        ell, rate = fit_tail(profile, rtol=1e-9)
        assert ell == pytest.approx(self.ELL, rel=1e-8)
        assert rate == pytest.approx(-8.0, rel=1e-3)

    def test_long_tail_agrees(self):
        ell, rate = fit_tail(self.synthetic(8.0), rtol=1e-9)
        assert ell == pytest.approx(self.ELL, rel=1e-10)
        assert rate == pytest.approx(-8.0, rel=1e-3)
