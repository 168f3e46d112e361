import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ehonline.analysis import fig1_scenario, tight_instance
from ehonline.curves import CumulativeCurve
from ehonline.model import Scenario
from ehonline.offline import (
    OfflineInfeasibleError,
    brute_force_throughput,
    max_throughput_by,
    max_throughput_schedule,
    offline_completion_time,
    slot_grid,
)
from ehonline.rates import log2_1p


def jumps(energy, data, horizon=4.0, b0=None, rate=None):
    e = CumulativeCurve((), tuple(energy), horizon)
    d = CumulativeCurve((), tuple(data), horizon)
    return Scenario(b0=b0 or d.final_value(), energy_curve=e, data_curve=d, rate=rate or log2_1p())


@pytest.fixture(scope="module")
def fig1_offline():
    return offline_completion_time(fig1_scenario())


def test_single_energy_amount_gives_constant_power():
    scn = jumps([(0.0, 5.0)], [(0.0, 100.0)], horizon=10.0)
    for T in (0.5, 2.0, 7.0):
        assert max_throughput_by(T, scn) == pytest.approx(T * math.log2(1 + 5.0 / T), rel=1e-9)


def test_no_data_no_throughput():
    scn = jumps([(0.0, 5.0)], [(3.0, 1.0)], horizon=4.0)
    assert max_throughput_by(2.5, scn) == 0.0


def test_three_epoch_instance_matches_brute_force():
    scn = jumps([(0.0, 2.0), (1.0, 1.0), (2.0, 3.0)], [(0.0, 50.0)], horizon=3.0)
    solver = max_throughput_by(3.0, scn)
    oracle = brute_force_throughput(3.0, scn, epochs=3, levels=200)
    assert oracle <= solver * (1 + 1e-9)
    assert solver <= oracle * 1.01


def test_brute_force_examples():
    scn = jumps([(0.0, 3.0)], [(0.0, 50.0)], horizon=1.0)
    assert brute_force_throughput(1.0, scn, epochs=1) == pytest.approx(2.0, rel=1e-3)
    capped = jumps([(0.0, 3.0)], [(0.0, 1.0)], horizon=1.0)
    assert brute_force_throughput(1.0, capped, epochs=1) <= 1.0 + 1e-12


def test_brute_force_rejects_large_or_sloped_instances():
    many = jumps([(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (1.5, 1.0), (2.0, 1.0)], [(0.0, 5.0)], horizon=3.0)
    with pytest.raises(ValueError):
        brute_force_throughput(3.0, many, epochs=3)
    with pytest.raises(ValueError):
        brute_force_throughput(1.0, fig1_scenario(), epochs=3)


def test_tight_offline_time():
    sol = offline_completion_time(tight_instance())
    assert sol.completion_time == pytest.approx(1.0, abs=1e-5)
    assert sol.feasibility_gap <= tight_instance().tol_bits


def test_offline_infeasible():
    scn = jumps([(0.0, 0.5)], [(0.0, 2.0)], horizon=1.0)
    with pytest.raises(OfflineInfeasibleError, match="not deliverable"):
        offline_completion_time(scn)


def test_small_budget_approaches_lower_bound():
    scn = jumps([(1.0, 5.0)], [(0.5, 1e-6)], horizon=3.0, b0=1e-6)
    sol = offline_completion_time(scn)
    assert sol.completion_time == pytest.approx(1.0, abs=1e-5)


def test_fig1_offline(fig1_offline):
    scn = fig1_scenario()
    sol = fig1_offline
    assert sol.completion_time == pytest.approx(0.9714, abs=5e-4)
    traj = sol.trajectory
    assert np.all(traj.energy_used <= scn.energy_curve.eval_many(traj.times) + scn.tol_energy)
    assert np.all(traj.data_sent <= scn.arrivals.eval_many(traj.times) + scn.tol_bits)
    assert traj.data_sent[-1] >= scn.b0 - scn.tol_bits
    assert np.all(np.diff(traj.power[:-1]) >= -1e-12)


def test_bisection_consistency(fig1_offline):
    scn = fig1_scenario()
    t = fig1_offline.completion_time
    tol = 1e-6 * scn.horizon
    assert max_throughput_by(t + 2 * tol, scn) >= scn.b0 - scn.tol_bits
    assert max_throughput_by(t - 2 * tol, scn) < scn.b0 - scn.tol_bits


def test_throughput_monotone_in_deadline():
    scn = fig1_scenario()
    vals = [max_throughput_by(T, scn) for T in np.linspace(0.3, 1.8, 12)]
    assert np.all(np.diff(vals) >= -1e-12)


def test_throughput_monotone_in_resources():
    scn = fig1_scenario()
    more_energy = scn.replace(energy_curve=scn.energy_curve.scaled(1.5))
    more_data = scn.replace(data_curve=scn.data_curve.scaled(1.5))
    for T in (0.3, 0.6, 0.9, 1.2):
        base = max_throughput_by(T, scn)
        assert max_throughput_by(T, more_energy) >= base * (1 - 1e-12)
        assert max_throughput_by(T, more_data) >= base * (1 - 1e-12)


def test_slot_grid_contains_breakpoints():
    scn = jumps([(0.0, 1.0), (0.337, 1.0)], [(0.0, 2.0)], horizon=2.0)
    grid = slot_grid(1.0, scn, 10)
    assert 0.337 in grid
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert np.all(np.diff(grid) > 0)
    with pytest.raises(ValueError):
        slot_grid(1.0, scn, 1)


def _random_jump_instance(rng):
    ne, nd = rng.integers(1, 5), rng.integers(1, 5)
    ej = [(0.0 if i == 0 else float(rng.uniform(0, 3)), float(rng.uniform(0.1, 3))) for i in range(ne)]
    dj = [(0.0 if i == 0 else float(rng.uniform(0, 3)), float(rng.uniform(0.1, 3))) for i in range(nd)]
    return jumps(ej, dj), float(rng.uniform(0.5, 4.0))


def test_matches_convex_solver_on_same_grid():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(7)
    for _ in range(8):
        scn, T = _random_jump_instance(rng)
        grid, _, rates = max_throughput_schedule(T, scn, 60)
        dt = np.diff(grid)
        e_bound = scn.energy_curve.eval_many(grid[:-1])
        d_bound = scn.arrivals.eval_many(grid[:-1])
        x = cp.Variable(dt.size, nonneg=True)  # bits per slot
        energy = cp.multiply(dt, cp.exp(cp.multiply(x / dt, math.log(2))) - 1)
        prob = cp.Problem(cp.Maximize(cp.sum(x)), [cp.cumsum(x) <= d_bound, cp.cumsum(energy) <= e_bound])
        prob.solve(solver="CLARABEL")
        ours = float(np.sum(rates * dt))
        assert ours == pytest.approx(prob.value, rel=1e-6, abs=1e-7)


@given(
    st.lists(st.tuples(st.floats(0.0, 2.9), st.floats(0.1, 3.0)), min_size=1, max_size=2),
    st.floats(0.5, 3.0),
)
def test_solver_dominates_brute_force(extra, T):
    energy = [(0.0, 1.0)] + extra
    scn = jumps(energy, [(0.0, 50.0)], horizon=3.0)
    n_epochs = len({t for t, _ in energy if 0 < t < T}) + 1
    oracle = brute_force_throughput(T, scn, epochs=n_epochs, levels=60)
    solver = max_throughput_by(T, scn)
    assert oracle <= solver * (1 + 1e-9) + 1e-12
    e_tot = sum(v for t, v in energy if t < T)
    assert solver <= T * math.log2(1 + e_tot / T) * (1 + 1e-9)
