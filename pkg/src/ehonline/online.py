"""Causal transmission policies.

Both policies wait, then drive the power with the same rule: at every
instant pick the constant power that would drain the remaining energy and
the remaining bits at the same moment, i.e. solve

    (E_rem / p) * r(p) == B_rem

for ``p``. They differ only in when waiting ends:

* ``alg1`` starts as soon as some data is queued and the stored energy could
  deliver ``B0`` bits given unlimited time (``E_s(t) * r'(0) >= B0``); it then
  falls silent whenever its queue runs dry.
* ``alg2`` waits until all ``B0`` bits are queued *and* the stored energy
  delivers them within the time already elapsed (``t * r(E_s(t)/t) >= B0``).

The power rule is integrated with a fixed step, holding ``p`` constant over
each step and splitting steps at curve breakpoints and at queue-exhaustion
events.
"""

from __future__ import annotations

import math

import numpy as np

from .model import PolicyTrajectory, Scenario
from .rates import InfeasibleError, RateFunction

__all__ = [
    "WaitingNeverEndsError",
    "waiting_time_alg1",
    "waiting_time_alg2",
    "instantaneous_power",
    "simulate_alg1",
    "simulate_alg2",
    "simulate",
]

_REFINE_RTOL = 1e-12


class WaitingNeverEndsError(RuntimeError):
    """The start condition of a policy never holds inside the horizon."""


def _sample_times(scn: Scenario) -> np.ndarray:
    grid = np.arange(0.0, scn.horizon, scn.step)
    return np.union1d(np.append(grid, scn.horizon), scn.breakpoints())


def _first_instant(scn: Scenario, vec_pred, pred, what: str) -> float:
    """Smallest ``t`` where a monotone (false -> true) predicate holds."""
    ts = _sample_times(scn)
    ok = vec_pred(ts)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        raise WaitingNeverEndsError(f"{what}: waiting never ends within horizon {scn.horizon}")
    i = int(hits[0])
    if i == 0:
        return float(ts[0])
    lo, hi = float(ts[i - 1]), float(ts[i])
    while hi - lo > _REFINE_RTOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _deliverable(rate: RateFunction, t, energy):
    """``t * r(energy / t)`` with the ``t -> 0`` limit of zero."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, t * rate.many(np.asarray(energy) / safe), 0.0)


def waiting_time_alg2(scn: Scenario) -> float:
    """End of the waiting phase of ``alg2``."""
    e, d, rate = scn.energy_curve, scn.arrivals, scn.rate
    need = scn.b0 - scn.tol_bits

    def vec(ts):
        return (_deliverable(rate, ts, e.eval_many(ts)) >= scn.b0) & (d.eval_many(ts) >= need)

    def one(t):
        return t > 0 and t * rate(e.eval(t) / t) >= scn.b0 and d.eval(t) >= need

    return _first_instant(scn, vec, one, "alg2")


def _alg1_energy_ok(scn: Scenario, energy):
    slope = scn.rate.slope_at_origin()
    energy = np.asarray(energy)
    if math.isinf(slope):
        return energy > 0
    return energy * slope >= scn.b0


def waiting_time_alg1(scn: Scenario) -> float:
    """End of the waiting phase of ``alg1``."""
    e, d = scn.energy_curve, scn.arrivals

    def vec(ts):
        return _alg1_energy_ok(scn, e.eval_many(ts)) & (d.eval_many(ts) > 0)

    def one(t):
        return bool(_alg1_energy_ok(scn, e.eval(t))) and d.eval(t) > 0

    return _first_instant(scn, vec, one, "alg1")


def instantaneous_power(e_rem: float, b_rem: float, rate: RateFunction) -> float:
    """Power ``p`` with ``(e_rem / p) * r(p) == b_rem``.

    Raises :class:`InfeasibleError` when ``b_rem / e_rem >= r'(0)``: no finite
    power can send the backlog with the stored energy.
    """
    if not b_rem > 0:
        raise ValueError(f"nothing left to send (B_rem={b_rem})")
    if not e_rem > 0:
        raise InfeasibleError("no stored energy")
    return rate.solve_rate_per_power(b_rem / e_rem)


def simulate_alg1(scn: Scenario) -> PolicyTrajectory:
    return _simulate(scn, waiting_time_alg1(scn), starved_silence=True, label="alg1")


def simulate_alg2(scn: Scenario) -> PolicyTrajectory:
    return _simulate(scn, waiting_time_alg2(scn), starved_silence=False, label="alg2")


def simulate(scn: Scenario, alg: int) -> PolicyTrajectory:
    if alg == 1:
        return simulate_alg1(scn)
    if alg == 2:
        return simulate_alg2(scn)
    raise ValueError(f"unknown algorithm {alg!r}; expected 1 or 2")


class _Clock:
    """Step boundaries: the uniform grid merged with curve breakpoints."""

    def __init__(self, scn: Scenario) -> None:
        self.step = scn.step
        self.horizon = scn.horizon
        self.events = scn.breakpoints()
        self._j = 0

    def next_after(self, t: float) -> float:
        eps = 1e-9 * self.step
        k = math.floor((t + eps) / self.step) + 1
        nxt = min(k * self.step, self.horizon)
        ev = self.events
        while self._j < len(ev) and ev[self._j] <= t + eps:
            self._j += 1
        if self._j < len(ev):
            nxt = min(nxt, ev[self._j])
        return nxt


def _simulate(scn: Scenario, start: float, starved_silence: bool, label: str) -> PolicyTrajectory:
    rate, e_curve, d_curve = scn.rate, scn.energy_curve, scn.arrivals
    b0, tol_b = scn.b0, scn.tol_bits

    times = [0.0]
    power: list[float] = []
    sent = [0.0]
    used = [0.0]
    phase: list[str] = []
    if start > 0:
        power.append(0.0)
        phase.append("wait")
        times.append(start)
        sent.append(0.0)
        used.append(0.0)

    silent: list[tuple[float, float]] = []
    stalled = False
    completion: float | None = None
    t, d_sent, e_used = start, 0.0, 0.0
    clock = _Clock(scn)

    def push(t_end: float, p: float, ph: str, d_new: float, e_new: float) -> None:
        power.append(p)
        phase.append(ph)
        times.append(t_end)
        sent.append(d_new)
        used.append(e_new)
        if ph == "silent":
            if silent and silent[-1][1] == times[-2]:
                silent[-1] = (silent[-1][0], t_end)
            else:
                silent.append((times[-2], t_end))

    while True:
        b_rem = b0 - d_sent
        if b_rem <= tol_b:
            completion = t
            break
        if t >= scn.horizon:
            break
        t_next = clock.next_after(t)
        h = t_next - t

        if starved_silence and d_curve.eval(t) - d_sent <= tol_b:
            push(t_next, 0.0, "silent", d_sent, e_used)
            t = t_next
            continue

        e_rem = e_curve.eval(t) - e_used
        try:
            p = instantaneous_power(e_rem, b_rem, rate)
        except InfeasibleError:
            stalled = True
            push(t_next, 0.0, "stall", d_sent, e_used)
            t = t_next
            continue

        r = rate(p)
        h_eff = h
        if starved_silence and d_sent + r * h > d_curve.eval(t_next):
            h_eff = _exhaustion_time(d_curve, t, h, d_sent, r)

        if r * h_eff >= b_rem:
            tau = b_rem / r
            push(t + tau, p, "tx", b0, e_used + min(p * tau, e_rem))
            completion = t + tau
            break

        t_end = t_next if h_eff == h else t + h_eff
        d_sent += r * h_eff
        e_used += p * h_eff
        push(t_end, p, "tx", d_sent, e_used)
        t = t_end

    return PolicyTrajectory(
        times=np.asarray(times),
        power=np.asarray(power + [0.0]),
        data_sent=np.asarray(sent),
        energy_used=np.asarray(used),
        phase=phase + ["tx" if completion is not None else "stall"],
        waiting_end=start,
        completion_time=completion,
        silent_intervals=silent,
        stalled=stalled,
        boundary_start=_on_boundary(scn, start, label),
        label=label,
    )


def _exhaustion_time(d_curve, t: float, h: float, d_sent: float, r: float) -> float:
    """Largest ``tau`` in ``[0, h]`` found by bisection with ``d_sent + r*tau <= B_s(t+tau)``."""
    lo, hi = 0.0, h
    while hi - lo > 1e-15 * max(1.0, t + h):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if d_sent + r * mid <= d_curve.eval(t + mid):
            lo = mid
        else:
            hi = mid
    return lo


def _on_boundary(scn: Scenario, start: float, label: str) -> bool:
    if label != "alg1":
        return False
    slope = scn.rate.slope_at_origin()
    if math.isinf(slope):
        return False
    return math.isclose(scn.energy_curve.eval(start) * slope, scn.b0, rel_tol=1e-9)
