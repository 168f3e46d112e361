import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ehonline.analysis import fig1_scenario, tight_instance
from ehonline.curves import CumulativeCurve, Poly, Segment
from ehonline.model import PolicyTrajectory, Scenario, ScenarioError
from ehonline.online import (
    WaitingNeverEndsError,
    instantaneous_power,
    simulate,
    simulate_alg1,
    simulate_alg2,
    waiting_time_alg1,
    waiting_time_alg2,
)
from ehonline.rates import InfeasibleError, log2_1p, sqrt_rate

# scipy.optimize.brentq on log2(1+p)/p = 0.2, xtol=1e-14
POWER_10_2 = 22.892399106025486


@pytest.fixture(scope="module")
def fig1_runs():
    scn = fig1_scenario()
    return scn, simulate_alg1(scn), simulate_alg2(scn)


def jump_scenario(energy, bits, b0=None, rate=None, horizon=4.0):
    return Scenario(
        b0=bits if b0 is None else b0,
        energy_curve=CumulativeCurve((), ((0.0, energy),), horizon),
        data_curve=CumulativeCurve((), ((0.0, bits),), horizon),
        rate=rate or log2_1p(),
    )


@pytest.mark.parametrize("e_rem, b_rem, expected", [(3.0, 2.0, 3.0), (1.0, 1.0, 1.0), (10.0, 2.0, POWER_10_2)])
def test_instantaneous_power(e_rem, b_rem, expected):
    assert instantaneous_power(e_rem, b_rem, log2_1p()) == pytest.approx(expected, rel=1e-10)


def test_instantaneous_power_errors():
    with pytest.raises(InfeasibleError):
        instantaneous_power(1.0, 2.0, log2_1p())
    with pytest.raises(InfeasibleError):
        instantaneous_power(0.0, 1.0, log2_1p())
    with pytest.raises(ValueError):
        instantaneous_power(1.0, 0.0, log2_1p())


def test_waiting_times_tight():
    scn = tight_instance()
    assert waiting_time_alg2(scn) == pytest.approx(1.0, abs=1e-9)
    assert waiting_time_alg1(scn) == 0.0


def test_alg1_waits_when_energy_too_small():
    scn = jump_scenario(3.0, 5.0, horizon=4.0).replace(
        energy_curve=CumulativeCurve((Segment(0.0, 4.0, Poly((3.0, 1.0))),), (), 4.0)
    )
    t = waiting_time_alg1(scn)
    assert t > 0
    assert (3.0 + t) / math.log(2) == pytest.approx(5.0, rel=1e-9)


def test_alg1_sqrt_starts_immediately():
    assert waiting_time_alg1(jump_scenario(0.1, 5.0, rate=sqrt_rate())) == 0.0


def test_waiting_never_ends():
    scn = jump_scenario(1.0, 5.0)
    with pytest.raises(WaitingNeverEndsError):
        waiting_time_alg2(scn)
    with pytest.raises(WaitingNeverEndsError):
        waiting_time_alg1(scn)


def test_alg2_wait_shrinks_with_energy():
    waits = [waiting_time_alg2(jump_scenario(e, 2.0)) for e in (1e3, 1e6, 1e9, 1e15)]
    assert all(a > b for a, b in zip(waits, waits[1:]))
    assert waits[-1] < 0.05


def test_fig1_waiting_times(fig1_runs):
    scn, a1, a2 = fig1_runs
    assert a2.waiting_end == pytest.approx(0.97128, abs=1e-4)
    assert a1.waiting_end == pytest.approx(math.sqrt(2.5 * math.log(2) / 100), rel=1e-8)
    assert a1.boundary_start


def test_tight_trajectories_constant_power():
    scn = tight_instance()
    a1, a2 = simulate_alg1(scn), simulate_alg2(scn)
    assert a1.completion_time == pytest.approx(1.0, abs=1e-6)
    assert a2.completion_time == pytest.approx(2.0, abs=1e-6)
    for traj in (a1, a2):
        p = traj.transmitting_power()
        assert np.max(np.abs(p / 3.0 - 1.0)) <= 1e-6


def test_zero_data_leading_silence():
    horizon = 10.0
    scn = Scenario(
        b0=2.0,
        energy_curve=CumulativeCurve((), ((0.0, 5.0),), horizon),
        data_curve=CumulativeCurve((), ((5.0, 2.0),), horizon),
    )
    a1 = simulate_alg1(scn)
    assert a1.waiting_end == 5.0
    assert a1.data_at([4.99])[0] == 0.0
    assert a1.completed


def test_alg1_silence_and_exhaustion():
    horizon = 6.0
    scn = Scenario(
        b0=3.0,
        energy_curve=CumulativeCurve((), ((0.0, 20.0),), horizon),
        data_curve=CumulativeCurve((), ((0.0, 1.0), (3.0, 2.0)), horizon),
    )
    a1 = simulate_alg1(scn)
    assert a1.completed
    assert a1.silent_intervals
    start, end = a1.silent_intervals[0]
    assert end == pytest.approx(3.0)
    assert a1.data_at([start])[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(a1.data_sent <= scn.arrivals.eval_many(a1.times) + scn.tol_bits)


def test_alg1_boundary_start_stalls_until_energy_arrives():
    # stored energy sits exactly on the finite-time boundary, so no finite power works
    b0 = 2.0
    scn = Scenario(
        b0=b0,
        energy_curve=CumulativeCurve((), ((0.0, b0 * math.log(2)), (1.0, 5.0)), 4.0),
        data_curve=CumulativeCurve((), ((0.0, b0),), 4.0),
    )
    a1 = simulate_alg1(scn)
    assert a1.waiting_end == 0.0
    assert a1.boundary_start and a1.stalled
    assert a1.phase[0] == "stall"
    assert a1.completed and a1.completion_time > 1.0


def test_not_completed_before_horizon():
    scn = Scenario(
        b0=2.0,
        energy_curve=CumulativeCurve((), ((0.0, 3.0),), 1.5),
        data_curve=CumulativeCurve((), ((0.0, 2.0),), 1.5),
    )
    a2 = simulate_alg2(scn)
    assert not a2.completed
    assert a2.completion_time is None


def test_simulate_dispatch():
    scn = tight_instance()
    assert simulate(scn, 1).label == "alg1"
    with pytest.raises(ValueError):
        simulate(scn, 3)


def test_fig1_invariants(fig1_runs):
    scn, a1, a2 = fig1_runs
    assert a1.completion_time <= a2.completion_time
    ts = np.union1d(a1.times, a2.times)
    ts = ts[ts <= min(a1.times[-1], a2.times[-1])]
    assert np.all(a2.data_at(ts) <= a1.data_at(ts) + scn.tol_bits)
    p = a2.transmitting_power()
    assert np.all(np.diff(p) >= -1e-9)
    for traj in (a1, a2):
        assert np.all(traj.energy_used <= scn.energy_curve.eval_many(traj.times) + scn.tol_energy)
        assert np.all(traj.data_sent <= scn.arrivals.eval_many(traj.times) + scn.tol_bits)
        assert np.all(np.diff(traj.data_sent) >= 0)
        assert traj.data_sent[-1] == pytest.approx(scn.b0)


def test_rate_consistency(fig1_runs):
    scn, _, a2 = fig1_runs
    dt = np.diff(a2.times)
    inc = np.diff(a2.data_sent)
    np.testing.assert_allclose(inc, scn.rate.many(a2.power[:-1]) * dt, rtol=1e-9, atol=1e-12)


def test_csv_round_trip(fig1_runs):
    _, a1, _ = fig1_runs
    text = a1.to_csv()
    assert text.splitlines()[0] == "t,p,B_sent,E_used,phase"
    back = PolicyTrajectory.from_csv(text)
    np.testing.assert_array_equal(back.times, a1.times)
    np.testing.assert_array_equal(back.data_sent, a1.data_sent)
    assert back.phase == a1.phase
    with pytest.raises(ValueError):
        PolicyTrajectory.from_csv("a,b\n1,2\n")


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        jump_scenario(3.0, 1.0, b0=2.0)
    with pytest.raises(ScenarioError):
        jump_scenario(3.0, 2.0, b0=-1.0)
    with pytest.raises(ScenarioError):
        tight_instance().replace(step=0.0)


@given(st.floats(0.5, 20.0), st.floats(0.05, 0.9))
def test_single_jump_fixed_point(energy, frac):
    rate = log2_1p()
    bits = frac * energy * rate.slope_at_origin()
    t_off = rate.constant_power_completion(energy, bits)
    scn = jump_scenario(energy, bits, horizon=3 * t_off + 1.0)
    a1, a2 = simulate_alg1(scn), simulate_alg2(scn)
    assert a1.completion_time == pytest.approx(t_off, rel=1e-6)
    assert a2.waiting_end == pytest.approx(t_off, rel=1e-6)
    assert a2.completion_time == pytest.approx(2 * t_off, rel=1e-6)
