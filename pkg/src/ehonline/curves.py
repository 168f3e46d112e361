"""Cumulative arrival curves for harvested energy and incoming data.

A curve is a sum of analytic pieces, each active on a half-open window
``[start, end)``, plus right-continuous jumps. Outside every window the
curve holds the value the last finished piece reached (zero before the
first), so gaps between pieces are flat.

Text syntax, one term per whitespace-separated token::

    poly:(c0,c1,...,ck)@[s,e)    c0 + c1*t + ... + ck*t**k on [s, e)
    expc:(a,b,k)@[s,e)           a * exp(b * t**k) on [s, e)
    jump:(t,v)                   increment v at time t
"""

from __future__ import annotations

import bisect
import functools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Piece",
    "Poly",
    "ExpPower",
    "Segment",
    "CumulativeCurve",
    "SampledCurve",
    "MonotonicityError",
    "parse_curve",
    "discretize",
]

MONOTONE_SAMPLES = 10_000
_MONO_RTOL = 1e-12


class MonotonicityError(ValueError):
    """Raised when a cumulative curve would decrease somewhere."""


class Piece:
    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def derivative(self, t: float) -> float:
        raise NotImplementedError

    def vectorized(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def token(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Poly(Piece):
    coeffs: tuple[float, ...]

    def __call__(self, t: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def derivative(self, t: float) -> float:
        acc = 0.0
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * t + k * self.coeffs[k]
        return acc

    def vectorized(self, t: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def token(self) -> str:
        return "poly:(" + ",".join(repr(c) for c in self.coeffs) + ")"


@dataclass(frozen=True)
class ExpPower(Piece):
    """``a * exp(b * t**k)``."""

    a: float
    b: float
    k: float

    def __call__(self, t: float) -> float:
        return self.a * math.exp(self.b * t**self.k)

    def derivative(self, t: float) -> float:
        if t == 0:
            return self.a * self.b if self.k == 1 else 0.0
        return self(t) * self.b * self.k * t ** (self.k - 1)

    def vectorized(self, t: np.ndarray) -> np.ndarray:
        return self.a * np.exp(self.b * np.power(t, self.k))

    def token(self) -> str:
        return f"expc:({self.a!r},{self.b!r},{self.k!r})"


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    piece: Piece

    def token(self) -> str:
        return f"{self.piece.token()}@[{self.start!r},{self.end!r})"


@dataclass(frozen=True)
class CumulativeCurve:
    """Nondecreasing, right-continuous cumulative amount on ``[0, horizon]``.

    Monotonicity is checked on construction (dense sampling plus both sides
    of every breakpoint) and violations raise :class:`MonotonicityError`.
    """

    segments: tuple[Segment, ...] = ()
    jumps: tuple[tuple[float, float], ...] = ()
    horizon: float = math.nan
    cap: float = math.inf
    validate: bool = field(default=True, compare=False, repr=False)
    _jump_times: tuple[float, ...] = field(default=(), init=False, repr=False, compare=False)
    _jump_cum: tuple[float, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        segs = tuple(sorted(self.segments, key=lambda s: s.start))
        for a, b in zip(segs, segs[1:]):
            if b.start < a.end:
                raise ValueError(f"curve segments overlap at t={b.start}")
        for s in segs:
            if not (0 <= s.start < s.end):
                raise ValueError(f"bad segment window [{s.start}, {s.end})")
        jumps = tuple(sorted(self.jumps))
        for t, v in jumps:
            if t < 0 or v < 0:
                raise ValueError(f"jump ({t}, {v}) must have t >= 0 and v >= 0")
        horizon = self.horizon
        if math.isnan(horizon):
            ends = [s.end for s in segs] + [t for t, _ in jumps]
            horizon = max(ends) if ends else 0.0
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "horizon", float(horizon))
        object.__setattr__(self, "_jump_times", tuple(t for t, _ in jumps))
        object.__setattr__(self, "_jump_cum", tuple(np.cumsum([v for _, v in jumps]).tolist()))
        for s in segs:
            try:
                finite = math.isfinite(s.piece(s.start)) and math.isfinite(s.piece(s.end))
            except OverflowError:
                finite = False
            if not finite:
                raise ValueError(f"curve is not finite on [{s.start}, {s.end})")
        if self.validate:
            self._check_monotone()

    # -- evaluation ---------------------------------------------------------

    def _smooth(self, t: float) -> float:
        """Value of the segment part, right-continuous."""
        segs = self.segments
        if not segs:
            return 0.0
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            return 0.0
        s = segs[i]
        if t < s.end:
            return s.piece(t)
        return s.piece(s.end)

    def _jumps_upto(self, t: float, inclusive: bool = True) -> float:
        if inclusive:
            i = bisect.bisect_right(self._jump_times, t)
        else:
            i = bisect.bisect_left(self._jump_times, t)
        return self._jump_cum[i - 1] if i > 0 else 0.0

    def __call__(self, t: float) -> float:
        return self.eval(t)

    def eval(self, t: float) -> float:
        if not (0 <= t <= self.horizon):
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        return min(self._smooth(t) + self._jumps_upto(t), self.cap)

    def left_limit(self, t: float) -> float:
        """``lim_{s->t-}``; equals ``eval(0)`` at ``t = 0``."""
        if t <= 0:
            return self.eval(0.0)
        segs = self.segments
        smooth = 0.0
        i = bisect.bisect_left(self._starts, t) - 1
        if i >= 0:
            s = segs[i]
            smooth = s.piece(min(t, s.end))
        return min(smooth + self._jumps_upto(t, inclusive=False), self.cap)

    def eval_many(self, ts: Iterable[float]) -> np.ndarray:
        ts = np.asarray(list(ts) if not isinstance(ts, np.ndarray) else ts, dtype=float)
        if ts.size and (ts.min() < 0 or ts.max() > self.horizon):
            raise ValueError(f"times outside [0, {self.horizon}]")
        out = np.zeros_like(ts)
        starts = np.array([s.start for s in self.segments])
        idx = np.searchsorted(starts, ts, side="right") - 1
        for i, s in enumerate(self.segments):
            mask = idx == i
            if not mask.any():
                continue
            tt = ts[mask]
            inside = tt < s.end
            vals = np.empty_like(tt)
            vals[inside] = s.piece.vectorized(tt[inside])
            vals[~inside] = s.piece(s.end)
            out[mask] = vals
        if self._jump_times:
            j = np.searchsorted(np.asarray(self._jump_times), ts, side="right")
            cum = np.concatenate([[0.0], self._jump_cum])
            out += cum[j]
        return np.minimum(out, self.cap)

    def derivative(self, t: float) -> float:
        """Right derivative of the smooth part (jumps excluded)."""
        if self.eval(t) >= self.cap:
            return 0.0
        for s in self.segments:
            if s.start <= t < s.end:
                return s.piece.derivative(t)
        return 0.0

    @functools.cached_property
    def _starts(self) -> list[float]:
        return [s.start for s in self.segments]

    def breakpoints(self) -> list[float]:
        return list(self._breakpoints)

    @functools.cached_property
    def _breakpoints(self) -> tuple[float, ...]:
        pts = {0.0, self.horizon}
        for s in self.segments:
            pts.update((s.start, s.end))
        pts.update(self._jump_times)
        if math.isfinite(self.cap):
            hit = self.with_cap(math.inf).first_time_reaching(self.cap)
            if hit is not None:
                pts = {p for p in pts if p <= hit} | {hit, self.horizon}
        return tuple(sorted(p for p in pts if 0 <= p <= self.horizon))

    def final_value(self) -> float:
        return self.eval(self.horizon)

    def first_time_reaching(self, level: float, tol: float = 0.0) -> float | None:
        """Smallest ``t`` with ``eval(t) >= level - tol``, or ``None``."""
        target = level - tol
        pts = self.breakpoints()
        for a, b in zip(pts, pts[1:]):
            if self.eval(a) >= target:
                return a
            if self.left_limit(b) >= target:
                lo, hi = a, b
                while True:
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        return hi
                    if self.eval(mid) >= target:
                        hi = mid
                    else:
                        lo = mid
        return pts[-1] if self.eval(pts[-1]) >= target else None

    def _check_monotone(self) -> None:
        if self.horizon == 0:
            return
        grid = np.linspace(0.0, self.horizon, MONOTONE_SAMPLES)
        grid = np.union1d(grid, self.breakpoints())
        vals = self.eval_many(grid)
        scale = max(1.0, float(np.max(np.abs(vals))))
        d = np.diff(vals)
        bad = np.nonzero(d < -_MONO_RTOL * scale)[0]
        if bad.size:
            i = int(bad[0])
            raise MonotonicityError(
                f"monotonicity violated: value drops from {vals[i]:.6g} at t={grid[i]:.6g} "
                f"to {vals[i + 1]:.6g} at t={grid[i + 1]:.6g}"
            )
        for t in self.breakpoints()[1:]:
            if self.eval(t) < self.left_limit(t) - _MONO_RTOL * scale:
                raise MonotonicityError(f"monotonicity violated: curve drops at t={t:.6g}")
        if vals[0] < -_MONO_RTOL * scale:
            raise MonotonicityError(f"monotonicity violated: negative start value {vals[0]:.6g}")

    # -- derived curves -----------------------------------------------------

    def with_cap(self, level: float) -> "CumulativeCurve":
        """``min(self, level)``; arrivals stop once ``level`` is reached."""
        return CumulativeCurve(self.segments, self.jumps, self.horizon, level, validate=False)

    def with_horizon(self, horizon: float) -> "CumulativeCurve":
        return CumulativeCurve(self.segments, self.jumps, horizon, self.cap, validate=self.validate)

    def scaled(self, factor: float) -> "CumulativeCurve":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        segs = tuple(Segment(s.start, s.end, _scale_piece(s.piece, factor)) for s in self.segments)
        jumps = tuple((t, v * factor) for t, v in self.jumps)
        return CumulativeCurve(segs, jumps, self.horizon, self.cap * factor, validate=False)

    def to_text(self) -> str:
        tokens = [s.token() for s in self.segments]
        tokens += [f"jump:({t!r},{v!r})" for t, v in self.jumps]
        return " ".join(tokens)


def _scale_piece(piece: Piece, factor: float) -> Piece:
    if isinstance(piece, Poly):
        return Poly(tuple(c * factor for c in piece.coeffs))
    if isinstance(piece, ExpPower):
        return ExpPower(piece.a * factor, piece.b, piece.k)
    raise TypeError(f"cannot scale {piece!r}")


@dataclass(frozen=True)
class SampledCurve:
    """Tabulated nondecreasing curve with linear interpolation."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 1:
            raise ValueError("times and values must be matching 1-d arrays")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise MonotonicityError("monotonicity violated in sampled values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


# -- text format -------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_TERM = re.compile(
    r"^(?P<kind>poly|expc)\:\((?P<args>[^()]*)\)@\[(?P<s>[^,\[\]()]+),(?P<e>[^,\[\]()]+)\)$"
    r"|^jump\:\((?P<jt>[^,()]+),(?P<jv>[^,()]+)\)$"
)


def _num(text: str) -> float:
    text = text.strip()
    if not re.fullmatch(_NUM, text):
        raise ValueError(f"not a number: {text!r}")
    return float(text)


def parse_curve(text: str, horizon: float | None = None) -> CumulativeCurve:
    """Parse the whitespace-separated term syntax described in the module docstring."""
    segments: list[Segment] = []
    jumps: list[tuple[float, float]] = []
    for token in text.split():
        m = _TERM.match(token)
        if m is None:
            raise ValueError(f"cannot parse curve term {token!r}")
        if m.group("kind"):
            args = [_num(a) for a in m.group("args").split(",")] if m.group("args").strip() else []
            start, end = _num(m.group("s")), _num(m.group("e"))
            if m.group("kind") == "poly":
                if not args:
                    raise ValueError(f"poly term needs coefficients: {token!r}")
                piece: Piece = Poly(tuple(args))
            else:
                if len(args) != 3:
                    raise ValueError(f"expc term needs (a,b,k): {token!r}")
                piece = ExpPower(*args)
            segments.append(Segment(start, end, piece))
        else:
            jumps.append((_num(m.group("jt")), _num(m.group("jv"))))
    if not segments and not jumps:
        raise ValueError("empty curve")
    return CumulativeCurve(tuple(segments), tuple(jumps), math.nan if horizon is None else horizon)


def discretize(curve: CumulativeCurve, period: float) -> CumulativeCurve:
    """Sample-and-hold staircase at multiples of ``period``, lying below ``curve``."""
    if not period > 0:
        raise ValueError("discretization period must be positive")
    n = int(math.floor(curve.horizon / period + 1e-12))
    times = [k * period for k in range(n + 1)]
    vals = curve.eval_many(np.asarray(times)).tolist()
    jumps = [(0.0, vals[0])]
    jumps += [(t, v - u) for t, u, v in zip(times[1:], vals, vals[1:]) if v > u]
    return CumulativeCurve((), tuple(jumps), curve.horizon, curve.cap, validate=False)


def as_sampled(curve: CumulativeCurve, times: Sequence[float]) -> SampledCurve:
    return SampledCurve(np.asarray(times, dtype=float), curve.eval_many(np.asarray(times, dtype=float)))
