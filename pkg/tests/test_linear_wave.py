import numpy as np
import pytest

from src.core import RadialField, StatePair
from src.core.profiles import random_bumps, random_state
from src.errors import InvalidParams, RegionError, SourceError
from src.solvers.linear_wave import (
    Trajectory,
    classify_trend,
    duhamel,
    exterior_energy,
    exterior_vanishing_scan,
    free_flow,
    free_trajectory,
    total_energy,
)


def test_free_flow_conserves_energy(state7, basis7):
    e0 = total_energy(state7, basis7)
    for t in (0.3, 2.0, 5.5):
        assert total_energy(free_flow(state7, t, basis7), basis7) == pytest.approx(e0, rel=1e-10)


def test_free_flow_is_a_group(state7, basis7):
    two_steps = free_flow(free_flow(state7, 1.25, basis7), 0.75, basis7)
    direct = free_flow(state7, 2.0, basis7)
    np.testing.assert_allclose(two_steps.pos.values, direct.pos.values, atol=1e-10)
    np.testing.assert_allclose(two_steps.vel.values, direct.vel.values, atol=1e-10)
    assert two_steps.t == pytest.approx(2.0)


def test_free_flow_reverses(state7, basis7):
    back = free_flow(free_flow(state7, 3.0, basis7), -3.0, basis7)
    np.testing.assert_allclose(back.pos.values, state7.pos.values, atol=1e-10)
    np.testing.assert_allclose(back.vel.values, state7.vel.values, atol=1e-10)


def test_finite_speed_of_propagation(grid7, basis7, rng):
    s0 = random_state(grid7, rng, 0.5, 3.0)
    total = exterior_energy(s0, 0.0, 0.0)
    # support after t = 2 sits inside r <= 5
    leak = exterior_energy(free_flow(s0, 2.0, basis7), 4.0, 2.0)
    assert leak < 1e-4 * total


def test_exterior_region_must_fit(state7):
    with pytest.raises(RegionError):
        exterior_energy(state7, 4.0, 12.0)


def test_trajectory_times_increase(grid7):
    traj = Trajectory()
    traj.append(StatePair.zeros(grid7))
    with pytest.raises(InvalidParams):
        traj.append(StatePair.zeros(grid7))


def test_free_trajectory_snapshots(state7, basis7):
    traj = free_trajectory(state7, [0.5, 1.0, 1.5], basis7)
    assert len(traj) == 3
    np.testing.assert_allclose(traj.final.pos.values, free_flow(state7, 1.5, basis7).pos.values,
                               atol=1e-12)


def test_duhamel_of_static_source(grid7, basis7, rng):
    """u_tt + Au = h from rest solves to A^{-1}(1 - cos(t√A)) h."""
    h = RadialField(grid7, random_bumps(grid7, rng, 1.0, 3.0))
    out = duhamel(lambda s: h, 0.0, 1.0, basis7, steps=64)
    coeffs = basis7.coefficients(h.values)
    omega = basis7.frequencies
    expected = basis7.synthesize((1.0 - np.cos(omega)) / omega ** 2 * coeffs)
    np.testing.assert_allclose(out.pos.values, expected, atol=1e-3 * np.max(np.abs(expected)))


def test_duhamel_bad_interval(grid7, basis7):
    with pytest.raises(InvalidParams):
        duhamel(lambda s: RadialField.zeros(grid7), 1.0, 0.0, basis7)


def test_duhamel_non_finite_source(grid7, basis7):
    with pytest.raises(SourceError):
        duhamel(lambda s: np.full(grid7.N, np.nan), 0.0, 1.0, basis7, steps=4)


@pytest.mark.parametrize("values,trend", [
    ([0.0, 0.0, 0.0], "zero"),
    ([1.0, 0.5, 1e-5], "vanishing"),
    ([1.0, 0.8, 0.8, 0.8, 0.8], "plateau"),
    ([1.0, 0.6, 0.4, 0.2], "decreasing"),
])
def test_classify_trend(values, trend):
    assert classify_trend(np.array(values)) == trend


def test_exterior_scan_of_outgoing_data(grid7, basis7, rng):
    s0 = random_state(grid7, rng, 0.5, 2.0)
    traj = free_trajectory(s0, np.linspace(0.1, 6.0, 12), basis7)
    curve = exterior_vanishing_scan(traj, 1.0)
    assert curve.values.shape == (12,)
    assert np.all(curve.values >= 0.0)


def test_duhamel_converges_at_simpson_rate(grid7, basis7, rng):
    coeffs = np.zeros(basis7.size)
    coeffs[:20] = rng.normal(size=20)
    h0 = RadialField(grid7, basis7.synthesize(coeffs))

    def source(s):
        return h0.with_values(np.cos(2.0 * s) * h0.values)

    reference = duhamel(source, 0.0, 2.0, basis7, steps=1024)
    errors = []
    for steps in (16, 32, 64):
        out = duhamel(source, 0.0, 2.0, basis7, steps=steps)
        errors.append(np.max(np.abs(out.pos.values - reference.pos.values)))
    for coarse, fine in zip(errors, errors[1:]):
        assert coarse >= 4.0 * fine


def test_exterior_scan_checks_region_first(grid7, basis7, state7):
    traj = free_trajectory(state7, [1.0, 6.0, 13.0], basis7)
    with pytest.raises(RegionError) as info:
        exterior_vanishing_scan(traj, 4.0)
    assert info.value.details["horizon"] == pytest.approx(13.0)
