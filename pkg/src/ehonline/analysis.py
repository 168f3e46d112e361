"""Competitive-ratio reports, randomized invariant sweeps and the staircase study."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curves import CumulativeCurve, ExpPower, MonotonicityError, Poly, Segment, discretize
from .model import PolicyTrajectory, Scenario, ScenarioError
from .offline import DEFAULT_GRID, OfflineInfeasibleError, offline_completion_time
from .online import WaitingNeverEndsError, simulate_alg1, simulate_alg2, waiting_time_alg1, waiting_time_alg2
from .rates import RateFunction, log2_1p, scaled_log, sqrt_rate

__all__ = [
    "Verdict",
    "CompetitiveReport",
    "ScenarioFamily",
    "SweepSummary",
    "competitive_report",
    "generate_scenarios",
    "tight_instance",
    "fig1_scenario",
    "property_sweep",
    "discretization_study",
    "DiscretizationRow",
]

POWER_SLACK = -1e-9


@dataclass(frozen=True)
class Verdict:
    name: str
    ok: bool
    slack: float  # >= 0 means satisfied with that margin


@dataclass
class CompetitiveReport:
    name: str
    T_off: float
    T_on1: float
    T_on2: float
    T_s1: float
    T_s2: float
    verdicts: list[Verdict]
    dominance_max_violation: float
    offline: PolicyTrajectory | None = field(default=None, repr=False)
    alg1: PolicyTrajectory | None = field(default=None, repr=False)
    alg2: PolicyTrajectory | None = field(default=None, repr=False)

    @property
    def ratio1(self) -> float:
        return self.T_on1 / self.T_off

    @property
    def ratio2(self) -> float:
        return self.T_on2 / self.T_off

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts)

    def failed(self) -> list[str]:
        return [v.name for v in self.verdicts if not v.ok]


def _causality_slack(traj: PolicyTrajectory, scn: Scenario) -> tuple[float, float]:
    e = scn.energy_curve.eval_many(traj.times)
    d = scn.arrivals.eval_many(traj.times)
    e_slack = float(np.min(e + scn.tol_energy - traj.energy_used))
    d_slack = float(np.min(d + scn.tol_bits - traj.data_sent))
    return e_slack, d_slack


def _nondecreasing_slack(traj: PolicyTrajectory) -> float:
    p = traj.transmitting_power()
    if p.size < 2:
        return math.inf
    return float(np.min(np.diff(p)))


def competitive_report(scn: Scenario, n_grid: int = DEFAULT_GRID, keep: bool = False) -> CompetitiveReport:
    """Solve a scenario three ways and check every claimed relation between them."""
    try:
        off = offline_completion_time(scn, n_grid=n_grid)
        t_s1 = waiting_time_alg1(scn)
        t_s2 = waiting_time_alg2(scn)
        a1 = simulate_alg1(scn)
        a2 = simulate_alg2(scn)
    except (OfflineInfeasibleError, WaitingNeverEndsError) as exc:
        raise type(exc)(f"scenario {scn.name or '<unnamed>'}: {exc}") from exc

    tol_t = scn.time_tol
    T_off = off.completion_time
    T_on1 = a1.completion_time if a1.completed else math.inf
    T_on2 = a2.completion_time if a2.completed else math.inf

    common = np.union1d(a1.times, a2.times)
    gap = a2.data_at(common) - a1.data_at(common)
    dom_violation = float(max(np.max(gap), 0.0))
    power_slack = _nondecreasing_slack(a2) - POWER_SLACK

    verdicts = [
        Verdict("completed", a1.completed and a2.completed, math.inf if a1.completed and a2.completed else -math.inf),
        Verdict("two_competitive", T_on2 <= 2 * T_off + 2 * tol_t, 2 * T_off + 2 * tol_t - T_on2),
        Verdict("alg2_power_nondecreasing", power_slack >= 0, power_slack),
        Verdict("waiting_order", t_s1 <= t_s2, t_s2 - t_s1),
        Verdict("wait_before_offline", t_s2 <= T_off + tol_t, T_off + tol_t - t_s2),
        Verdict("dominance", dom_violation <= scn.tol_bits, scn.tol_bits - dom_violation),
        Verdict("alg1_not_slower", T_on1 <= T_on2 + tol_t, T_on2 + tol_t - T_on1),
    ]
    for label, traj in (("offline", off.trajectory), ("alg1", a1), ("alg2", a2)):
        es, ds = _causality_slack(traj, scn)
        verdicts.append(Verdict(f"{label}_energy_causality", es >= 0, es))
        verdicts.append(Verdict(f"{label}_data_causality", ds >= 0, ds))

    return CompetitiveReport(
        name=scn.name,
        T_off=T_off,
        T_on1=T_on1,
        T_on2=T_on2,
        T_s1=t_s1,
        T_s2=t_s2,
        verdicts=verdicts,
        dominance_max_violation=dom_violation,
        offline=off.trajectory if keep else None,
        alg1=a1 if keep else None,
        alg2=a2 if keep else None,
    )


# -- named scenarios ---------------------------------------------------------


def fig1_scenario(**overrides) -> Scenario:
    """``E_s = 100 t^2`` J, ``B_s = exp(t^3)`` bits, ``B0 = 2.5``, ``r = log2(1+p)``."""
    energy = CumulativeCurve((Segment(0.0, 2.0, Poly((0.0, 0.0, 100.0))),))
    data = CumulativeCurve((Segment(0.0, 2.0, ExpPower(1.0, 1.0, 3.0)),))
    kw = dict(b0=2.5, energy_curve=energy, data_curve=data, rate=log2_1p(), name="fig1")
    kw.update(overrides)
    return Scenario(**kw)


def tight_instance(energy: float = 3.0, bits: float = 2.0, rate: RateFunction | None = None,
                   horizon: float | None = None) -> Scenario:
    """Everything arrives at ``t = 0``; ``alg2`` then needs exactly twice the optimum."""
    rate = rate or log2_1p()
    t_off = rate.constant_power_completion(energy, bits)
    horizon = horizon if horizon is not None else 4.0 * t_off
    return Scenario(
        b0=bits,
        energy_curve=CumulativeCurve((), ((0.0, energy),), horizon),
        data_curve=CumulativeCurve((), ((0.0, bits),), horizon),
        rate=rate,
        name="tight",
    )


# -- randomized scenarios ----------------------------------------------------


@dataclass(frozen=True)
class ScenarioFamily:
    """Recipe for pseudo-random scenarios; identical fields give identical scenarios."""

    seed: int = 42
    count: int = 200
    max_degree: int = 3
    max_jumps: int = 5
    coeff_range: tuple[float, float] = (-2.0, 10.0)
    exp_rate_range: tuple[float, float] = (0.1, 1.5)
    jump_range: tuple[float, float] = (0.0, 5.0)
    horizon_range: tuple[float, float] = (2.0, 6.0)
    b0_range: tuple[float, float] = (0.2, 6.0)
    rates: tuple[str, ...] = ("log2_1p", "scaled_log", "sqrt")
    shape: str = "mixed"  # or "single_jump"
    include_tight: bool = True
    max_attempts: int = 50


def _random_curve(rng: np.random.Generator, fam: ScenarioFamily, horizon: float) -> CumulativeCurve:
    segs: list[Segment] = []
    n_seg = int(rng.integers(0, 3))
    cuts = np.sort(rng.uniform(0, horizon, size=max(n_seg - 1, 0)))
    edges = [0.0, *cuts.tolist(), horizon]
    level = 0.0
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        if rng.random() < 0.7:
            deg = int(rng.integers(1, fam.max_degree + 1))
            coeffs = rng.uniform(*fam.coeff_range, size=deg + 1)
            # shift so the piece starts where the previous one ended
            coeffs[0] = 0.0
            coeffs[0] = level - float(np.polynomial.polynomial.polyval(a, coeffs))
            piece = Poly(tuple(float(c) for c in coeffs))
        else:
            k = float(rng.choice([1.0, 2.0, 3.0]))
            # keep the total growth over the window to a few e-folds
            bb = float(rng.uniform(*fam.exp_rate_range)) * 3.0 / max(1.0, b**k - a**k)
            aa = max(level, 0.05) * math.exp(-bb * a**k)
            piece = ExpPower(aa, bb, k)
        segs.append(Segment(float(a), float(b), piece))
        level = piece(b)
    n_j = int(rng.integers(0, fam.max_jumps + 1))
    jumps = []
    for _ in range(n_j):
        t = 0.0 if rng.random() < 0.2 else float(rng.uniform(0, horizon))
        jumps.append((t, float(rng.uniform(*fam.jump_range))))
    if not segs and not jumps:
        jumps.append((float(rng.uniform(0, horizon / 2)), float(rng.uniform(0.5, fam.jump_range[1] + 0.5))))
    return CumulativeCurve(tuple(segs), tuple(jumps), horizon)


def _single_jump_scenario(rng: np.random.Generator, fam: ScenarioFamily, rate: RateFunction, name: str) -> Scenario:
    energy = float(rng.uniform(0.5, 10.0))
    bits = float(rng.uniform(0.3, 0.95)) * energy * min(rate.slope_at_origin(), 50.0)
    t_off = rate.constant_power_completion(energy, bits)
    t_e = float(rng.uniform(0, 0.5)) * t_off
    t_d = float(rng.uniform(0, 0.5)) * t_off
    horizon = t_e + t_d + 4 * t_off + 1.0
    return Scenario(
        b0=bits,
        energy_curve=CumulativeCurve((), ((t_e, energy),), horizon),
        data_curve=CumulativeCurve((), ((t_d, bits),), horizon),
        rate=rate,
        name=name,
    )


def _pick_rate(rng: np.random.Generator, names: tuple[str, ...]) -> RateFunction:
    name = names[int(rng.integers(0, len(names)))]
    if name == "log2_1p":
        return log2_1p()
    if name == "scaled_log":
        return scaled_log(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 3.0)))
    if name == "sqrt":
        return sqrt_rate(float(rng.uniform(0.5, 2.0)))
    raise ValueError(f"unknown rate family {name!r}")


def _solvable(scn: Scenario) -> bool:
    try:
        waiting_time_alg2(scn)
    except WaitingNeverEndsError:
        return False
    # alg2 must also finish before the horizon
    return simulate_alg2(scn).completed


def generate_scenario(fam: ScenarioFamily, index: int) -> Scenario:
    """Scenario number ``index`` of a family; depends only on ``(fam.seed, index)``."""
    rng = np.random.default_rng((fam.seed, index))
    name = f"{fam.seed}-{index}"
    for _ in range(fam.max_attempts):
        rate = _pick_rate(rng, fam.rates)
        if fam.shape == "single_jump":
            scn = _single_jump_scenario(rng, fam, rate, name)
            if _solvable(scn):
                return scn
            continue
        horizon = float(rng.uniform(*fam.horizon_range))
        try:
            energy = _random_curve(rng, fam, horizon)
            data = _random_curve(rng, fam, horizon)
        except MonotonicityError:
            continue
        final = data.final_value()
        if final <= 0:
            continue
        b0 = min(float(rng.uniform(*fam.b0_range)), final)
        try:
            scn = Scenario(b0=b0, energy_curve=energy, data_curve=data, rate=rate, name=name)
        except ScenarioError:
            continue
        if _solvable(scn):
            return scn
    raise RuntimeError(f"no valid scenario for seed {fam.seed}, index {index}")


def generate_scenarios(fam: ScenarioFamily) -> list[Scenario]:
    out = [generate_scenario(fam, i) for i in range(fam.count)]
    if fam.include_tight and fam.count > 0:
        out.append(tight_instance())
    return out


# -- sweep -------------------------------------------------------------------


@dataclass
class SweepSummary:
    reports: list[CompetitiveReport]
    errors: dict[str, str]

    @property
    def passed(self) -> int:
        return sum(r.ok for r in self.reports)

    @property
    def failing(self) -> list[str]:
        return sorted([r.name for r in self.reports if not r.ok] + list(self.errors))

    @property
    def worst_ratio2(self) -> float:
        return max((r.ratio2 for r in self.reports), default=math.nan)

    @property
    def worst_dominance_violation(self) -> float:
        return max((r.dominance_max_violation for r in self.reports), default=0.0)

    def worst_slacks(self) -> dict[str, float]:
        worst: dict[str, float] = {}
        for r in self.reports:
            for v in r.verdicts:
                worst[v.name] = min(worst.get(v.name, math.inf), v.slack)
        return dict(sorted(worst.items()))

    @property
    def ok(self) -> bool:
        return not self.failing

    def verdict_line(self) -> str:
        slacks = self.worst_slacks()
        if slacks:
            name, s = min(slacks.items(), key=lambda kv: kv[1])
            tail = f"worst slack {s:.3g} ({name})"
        else:
            tail = "no scenarios"
        status = "PASS" if self.ok else "FAIL"
        return f"{status}: {self.passed}/{len(self.reports) + len(self.errors)} scenarios clean, {tail}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("seed", "T_off", "T_on1", "T_on2", "ratio1", "ratio2", "verdicts"))
        for r in self.reports:
            flags = "ok" if r.ok else ";".join(r.failed())
            w.writerow((r.name, _g(r.T_off), _g(r.T_on1), _g(r.T_on2), _g(r.ratio1), _g(r.ratio2), flags))
        for name, msg in sorted(self.errors.items()):
            w.writerow((name, "", "", "", "", "", f"error: {msg}"))
        return buf.getvalue()


def _g(x: float) -> str:
    return f"{x:.10g}"


def _sort_key(name: str):
    head, _, tail = name.rpartition("-")
    return (0, head, int(tail)) if tail.isdigit() else (1, name, 0)


def _run_one(args) -> tuple[str, CompetitiveReport | None, str | None]:
    scn, n_grid = args
    try:
        return scn.name, competitive_report(scn, n_grid=n_grid), None
    except Exception as exc:  # collected per scenario, never fatal
        return scn.name, None, f"{type(exc).__name__}: {exc}"


def property_sweep(fam: ScenarioFamily, n_grid: int = DEFAULT_GRID, workers: int = 1) -> SweepSummary:
    """Check every invariant on every scenario of the family."""
    scenarios = generate_scenarios(fam)
    jobs = [(s, n_grid) for s in scenarios]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=4))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda x: _sort_key(x[0]))
    reports = [r for _, r, _ in results if r is not None]
    errors = {name: err for name, _, err in results if err is not None}
    return SweepSummary(reports, errors)


# -- staircase study ---------------------------------------------------------


@dataclass(frozen=True)
class DiscretizationRow:
    period: float
    T_off: float | None
    T_on2: float | None
    error: str | None = None


def discretization_study(scn: Scenario, periods, n_grid: int = DEFAULT_GRID) -> list[DiscretizationRow]:
    """Recompute ``T_off`` and ``T_on2`` with both curves replaced by staircases.

    The first row (``period = 0``) is the original scenario.
    """
    rows = []
    for period in [0.0, *periods]:
        try:
            if period == 0:
                s = scn
            else:
                if not period > 0:
                    raise ValueError("discretization period must be positive")
                s = scn.replace(
                    energy_curve=discretize(scn.energy_curve, period),
                    data_curve=discretize(scn.data_curve, period),
                )
            t_off = offline_completion_time(s, n_grid=n_grid).completion_time
            a2 = simulate_alg2(s)
            if not a2.completed:
                raise RuntimeError("alg2 did not complete within the horizon")
            rows.append(DiscretizationRow(period, t_off, a2.completion_time))
        except (ValueError, RuntimeError) as exc:
            rows.append(DiscretizationRow(period, None, None, f"{type(exc).__name__}: {exc}"))
    return rows
