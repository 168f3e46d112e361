"""Scenario and trajectory containers shared by the online and offline solvers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import CumulativeCurve
from .rates import RateFunction, log2_1p

__all__ = ["Scenario", "PolicyTrajectory", "ScenarioError", "TRAJECTORY_HEADER"]

DEFAULT_STEP_FRACTION = 1e-4
TRAJECTORY_HEADER = ("t", "p", "B_sent", "E_used", "phase")
PHASES = ("wait", "tx", "silent", "stall")


class ScenarioError(ValueError):
    """A scenario violates one of its validity conditions."""


@dataclass(frozen=True)
class Scenario:
    """Everything a policy needs: the bit budget, both arrival curves, the channel.

    ``data_curve`` is kept as given; :attr:`arrivals` is the same curve capped
    at ``b0`` so nothing arrives once the whole budget is in.
    """

    b0: float
    energy_curve: CumulativeCurve
    data_curve: CumulativeCurve
    rate: RateFunction = field(default_factory=log2_1p)
    horizon: float | None = None
    step: float | None = None
    tol_bits: float = 1e-9
    tol_energy: float = 1e-9
    name: str = ""

    def __post_init__(self) -> None:
        if not self.b0 > 0:
            raise ScenarioError(f"B0 must be positive, got {self.b0}")
        horizon = self.horizon
        if horizon is None:
            horizon = max(self.energy_curve.horizon, self.data_curve.horizon)
        if not horizon > 0:
            raise ScenarioError("horizon must be positive")
        object.__setattr__(self, "horizon", float(horizon))
        if self.energy_curve.horizon != horizon:
            object.__setattr__(self, "energy_curve", self.energy_curve.with_horizon(horizon))
        if self.data_curve.horizon != horizon:
            object.__setattr__(self, "data_curve", self.data_curve.with_horizon(horizon))
        step = self.step if self.step is not None else DEFAULT_STEP_FRACTION * horizon
        if not step > 0:
            raise ScenarioError("step must be positive")
        object.__setattr__(self, "step", float(step))
        if not (self.tol_bits > 0 and self.tol_energy > 0):
            raise ScenarioError("tolerances must be positive")
        if self.data_curve.final_value() < self.b0 - self.tol_bits:
            raise ScenarioError(
                f"data curve never reaches B0={self.b0} within horizon {horizon} "
                f"(final value {self.data_curve.final_value():.6g})"
            )
        object.__setattr__(self, "_arrivals", self.data_curve.with_cap(self.b0))

    @property
    def arrivals(self) -> CumulativeCurve:
        return self._arrivals  # type: ignore[attr-defined]

    @property
    def data_complete_time(self) -> float:
        """First instant all ``b0`` bits have arrived."""
        t = self.data_curve.first_time_reaching(self.b0, self.tol_bits)
        assert t is not None
        return t

    @property
    def time_tol(self) -> float:
        return self.step

    def breakpoints(self) -> list[float]:
        return sorted(set(self.energy_curve.breakpoints()) | set(self.arrivals.breakpoints()))

    def replace(self, **changes) -> "Scenario":
        fields = dict(
            b0=self.b0,
            energy_curve=self.energy_curve,
            data_curve=self.data_curve,
            rate=self.rate,
            horizon=self.horizon,
            step=self.step,
            tol_bits=self.tol_bits,
            tol_energy=self.tol_energy,
            name=self.name,
        )
        fields.update(changes)
        return Scenario(**fields)


@dataclass
class PolicyTrajectory:
    """Sampled power schedule.

    ``power[i]`` is held on ``[times[i], times[i+1])`` and ``phase[i]`` labels
    that interval; cumulative columns are exact at the samples and linear in
    between.
    """

    times: np.ndarray
    power: np.ndarray
    data_sent: np.ndarray
    energy_used: np.ndarray
    phase: list[str]
    waiting_end: float
    completion_time: float | None
    silent_intervals: list[tuple[float, float]] = field(default_factory=list)
    stalled: bool = False
    boundary_start: bool = False
    label: str = ""

    @property
    def completed(self) -> bool:
        return self.completion_time is not None

    def data_at(self, ts) -> np.ndarray:
        return np.interp(ts, self.times, self.data_sent)

    def energy_at(self, ts) -> np.ndarray:
        return np.interp(ts, self.times, self.energy_used)

    def transmitting_power(self) -> np.ndarray:
        """Power on the intervals labelled ``tx`` (the closing sample has no interval)."""
        mask = np.array([ph == "tx" for ph in self.phase[:-1]], dtype=bool)
        return self.power[:-1][mask]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for t, p, b, e, ph in zip(self.times, self.power, self.data_sent, self.energy_used, self.phase):
            writer.writerow((_fmt(t), _fmt(p), _fmt(b), _fmt(e), ph))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text: str, label: str = "") -> "PolicyTrajectory":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != TRAJECTORY_HEADER:
            raise ValueError(f"expected header {','.join(TRAJECTORY_HEADER)}")
        body = rows[1:]
        arr = np.array([[float(v) for v in r[:4]] for r in body]) if body else np.zeros((0, 4))
        phases = [r[4] for r in body]
        bad = set(phases) - set(PHASES)
        if bad:
            raise ValueError(f"unknown phase labels {sorted(bad)}")
        waiting_end = next((float(r[0]) for r in body if r[4] != "wait"), math.nan)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], phases, waiting_end, None, label=label)


def _fmt(x: float) -> str:
    return repr(float(x))
