"""Offline (non-causal) minimum completion time.

For a candidate deadline ``T`` the interval ``[0, T]`` is cut into slots
(a uniform grid with every curve breakpoint inserted). Power is constant per
slot and the cumulative energy and data spent by the end of slot ``k`` must
not exceed what had arrived at the *start* of slot ``k``. Because both arrival
curves are nondecreasing this makes every slot schedule causal in continuous
time, so the discrete optimum is a feasible continuous schedule and the
resulting completion time can only overestimate the continuous one.

The per-deadline throughput problem is solved exactly by a taut-string sweep:
from the current slot, the largest constant power that keeps every future
energy constraint satisfied is the minimum average slope to the energy
bounds, and likewise for the data bounds in rate units. The smaller of the
two is held until the slot where it becomes tight, and the sweep restarts
there. Powers produced this way never decrease.

The deadline itself is found by bisection on ``max_throughput_by(T) >= B0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import PolicyTrajectory, Scenario

__all__ = [
    "OfflineSolution",
    "OfflineInfeasibleError",
    "slot_grid",
    "max_throughput_by",
    "max_throughput_schedule",
    "offline_completion_time",
    "brute_force_throughput",
]

DEFAULT_GRID = 2000
TIME_RTOL = 1e-6
_TIE_RTOL = 1e-12


class OfflineInfeasibleError(RuntimeError):
    """``B0`` cannot be delivered before the horizon even with full knowledge."""


@dataclass
class OfflineSolution:
    completion_time: float
    trajectory: PolicyTrajectory
    grid_step: float
    feasibility_gap: float
    lower_bound: float


def slot_grid(T: float, scn: Scenario, n_grid: int) -> np.ndarray:
    """Slot boundaries on ``[0, T]``: ``n_grid`` uniform slots plus breakpoints."""
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    if not T > 0:
        raise ValueError("deadline must be positive")
    uniform = np.linspace(0.0, T, n_grid + 1)
    bps = [b for b in scn.breakpoints() if 0 < b < T]
    grid = np.union1d(uniform, bps)
    # drop near-duplicates so no slot is degenerate
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * max(T, 1.0)])
    grid = grid[keep]
    grid[-1] = T
    return grid


def _taut_string(grid, e_bound, d_bound, rate):
    """Per-slot powers maximising throughput under cumulative upper bounds.

    ``e_bound[k]`` / ``d_bound[k]`` cap energy / data spent by ``grid[k+1]``.
    """
    m = grid.size - 1
    ends = grid[1:]
    power = np.zeros(m)
    rates = np.zeros(m)
    i, used, sent = 0, 0.0, 0.0
    while i < m:
        span = ends[i:] - grid[i]
        se = (e_bound[i:] - used) / span
        sd = (d_bound[i:] - sent) / span
        ke = _last_argmin(se)
        kd = _last_argmin(sd)
        pe = max(se[ke], 0.0)
        rd = max(sd[kd], 0.0)
        pd = rate.inverse(rd)
        if pe <= pd:
            p, k = pe, ke
            r = rate(p)
        else:
            p, k = pd, kd
            r = rd
        j = i + k + 1
        power[i:j] = p
        rates[i:j] = r
        dur = ends[i + k] - grid[i]
        used += p * dur
        sent += r * dur
        # pin the binding constraint exactly to stop drift
        if pe <= pd:
            used = min(used, e_bound[i + k])
        else:
            sent = min(sent, d_bound[i + k])
        i = j
    return power, rates


def _last_argmin(x: np.ndarray) -> int:
    lo = x.min()
    tol = _TIE_RTOL * max(1.0, abs(lo))
    return int(np.flatnonzero(x <= lo + tol)[-1])


def _bounds(grid: np.ndarray, scn: Scenario) -> tuple[np.ndarray, np.ndarray]:
    starts = grid[:-1]
    return scn.energy_curve.eval_many(starts), scn.arrivals.eval_many(starts)


def max_throughput_schedule(T: float, scn: Scenario, n_grid: int = DEFAULT_GRID):
    """Return ``(grid, power, rates)`` of the throughput-optimal slot schedule."""
    grid = slot_grid(T, scn, n_grid)
    e_bound, d_bound = _bounds(grid, scn)
    power, rates = _taut_string(grid, e_bound, d_bound, scn.rate)
    return grid, power, rates


def max_throughput_by(T: float, scn: Scenario, n_grid: int = DEFAULT_GRID) -> float:
    """Most bits a non-causal scheduler can deliver by ``T``."""
    grid, _, rates = max_throughput_schedule(T, scn, n_grid)
    return float(np.sum(rates * np.diff(grid)))


def _search_lower_bound(scn: Scenario) -> float:
    """First instant with both some energy and some data on hand."""
    return max(_first_positive(scn.energy_curve), _first_positive(scn.arrivals))


def _first_positive(curve) -> float:
    if curve.eval(0.0) > 0:
        return 0.0
    t = curve.first_time_reaching(math.ulp(0.0))
    return curve.horizon if t is None else t


def offline_completion_time(
    scn: Scenario, n_grid: int = DEFAULT_GRID, time_rtol: float = TIME_RTOL
) -> OfflineSolution:
    """Minimum completion time with full knowledge of both arrival curves."""
    need = scn.b0 - scn.tol_bits
    hi = scn.horizon
    if max_throughput_by(hi, scn, n_grid) < need:
        raise OfflineInfeasibleError(
            f"B0={scn.b0} not deliverable within horizon {scn.horizon}"
        )
    lo = _search_lower_bound(scn)
    if lo > 0 and max_throughput_by(lo, scn, n_grid) >= need:
        hi = lo
    tol = time_rtol * scn.horizon
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if max_throughput_by(mid, scn, n_grid) >= need:
            hi = mid
        else:
            lo = mid
    grid, power, rates = max_throughput_schedule(hi, scn, n_grid)
    traj = _schedule_trajectory(grid, power, rates, scn)
    achieved = float(traj.data_sent[-1])
    return OfflineSolution(
        completion_time=hi,
        trajectory=traj,
        grid_step=hi / n_grid,
        feasibility_gap=scn.b0 - achieved,
        lower_bound=lo,
    )


def _schedule_trajectory(grid, power, rates, scn: Scenario) -> PolicyTrajectory:
    dt = np.diff(grid)
    sent = np.concatenate([[0.0], np.cumsum(rates * dt)])
    used = np.concatenate([[0.0], np.cumsum(power * dt)])
    nz = np.flatnonzero(power > 0)
    first = int(nz[0]) if nz.size else len(power)
    phase = ["wait" if k < first else ("tx" if power[k] > 0 else "silent") for k in range(len(power))]
    silent = [(float(grid[k]), float(grid[k + 1])) for k in range(first, len(power)) if power[k] == 0]
    return PolicyTrajectory(
        times=grid.copy(),
        power=np.append(power, 0.0),
        data_sent=sent,
        energy_used=used,
        phase=phase + ["tx"],
        waiting_end=float(grid[first]) if nz.size else float(grid[-1]),
        completion_time=float(grid[-1]),
        silent_intervals=silent,
        label="offline",
    )


def brute_force_throughput(T: float, scn: Scenario, epochs: int = 3, levels: int = 200) -> float:
    """Exhaustive search over per-epoch constant powers; an oracle for tiny cases.

    Epochs are the intervals between curve breakpoints inside ``[0, T]``; the
    curves must be flat on each epoch (jumps only). Each epoch's power is taken
    from ``{0} U geometric grid``, the last one from the same grid plus the
    largest power the leftover resources allow. Causality is enforced at epoch
    ends against the amounts that had arrived at epoch starts.
    """
    cuts = [0.0] + [b for b in scn.breakpoints() if 0 < b < T] + [T]
    n = len(cuts) - 1
    if n > epochs:
        raise ValueError(f"instance has {n} epochs, more than the {epochs} allowed")
    if n > 4:
        raise ValueError("brute force supports at most 4 epochs")
    starts = np.asarray(cuts[:-1])
    lengths = np.diff(cuts)
    for c in (scn.energy_curve, scn.arrivals):
        for s, ln in zip(starts, lengths):
            if c.left_limit(s + ln) != c.eval(s):
                raise ValueError("brute force needs curves that are flat on every epoch")
    e_cap = scn.energy_curve.eval_many(starts)
    d_cap = scn.arrivals.eval_many(starts)
    e_tot = float(e_cap[-1])
    if e_tot <= 0:
        return 0.0
    # a vanishing epoch would push the grid to infinity; it can carry no data anyway
    p_hi = e_tot / max(float(lengths.min()), 1e-9 * T)
    p_lo = p_hi * 1e-5
    grid = np.concatenate([[0.0], np.geomspace(p_lo, p_hi, levels), [e_tot / T]])
    grid = np.unique(grid)
    rate = scn.rate
    best = 0.0
    # all but the last epoch are enumerated (the one before last vectorized);
    # the last takes the best grid value or the largest power left resources allow
    outer = [grid] * max(n - 2, 0)
    for prefix in itertools.product(*outer):
        prefix = np.asarray(prefix, dtype=float)
        if n == 1:
            heads = np.zeros((1, 0))
        else:
            heads = np.column_stack([np.broadcast_to(prefix, (grid.size, n - 2)), grid])
        used = np.cumsum(heads * lengths[:-1], axis=1)
        sent = np.cumsum(rate.many(heads) * lengths[:-1], axis=1)
        ok = np.all(used <= e_cap[:-1] * (1 + 1e-12), axis=1) & np.all(sent <= d_cap[:-1] * (1 + 1e-12), axis=1)
        if not ok.any():
            continue
        u0 = used[ok, -1] if n > 1 else np.zeros(1)
        s0 = sent[ok, -1] if n > 1 else np.zeros(1)
        ln = lengths[-1]
        p_max = np.minimum((e_cap[-1] - u0) / ln, rate.inverse_many(np.maximum(d_cap[-1] - s0, 0.0) / ln))
        p_max = np.maximum(p_max, 0.0)
        # best grid value not above p_max; r is increasing so that is the largest one
        idx = np.searchsorted(grid, p_max, side="right") - 1
        last = np.maximum(grid[np.maximum(idx, 0)], p_max)
        best = max(best, float(np.max(s0 + rate.many(last) * ln)))
    return best
