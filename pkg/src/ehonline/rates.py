"""Channel capacity functions ``r(p)`` and the scalar solves built on them.

Every family here satisfies ``r(0) = 0``, is increasing, concave, and
unbounded, so ``r(p)/p`` decreases from ``r'(0)`` towards zero. That
monotonicity is what makes the two inverse problems below well posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "RateFunction",
    "InfeasibleError",
    "log2_1p",
    "scaled_log",
    "sqrt_rate",
    "tabulated",
    "parse_rate",
]

P_MAX = 1e12
RESIDUAL_TOL = 1e-9
BRACKET_TOL = 1e-12
_LN2 = math.log(2.0)


class InfeasibleError(ValueError):
    """No finite positive solution exists for the requested solve."""


@dataclass(frozen=True)
class RateFunction:
    """A concave rate map from power (W) to rate (bits/s).

    ``kind`` is one of ``"log"`` (``W*log2(1+g*p)``), ``"sqrt"``
    (``a*sqrt(p)``) or ``"tabulated"`` (piecewise linear through the
    origin and the given knots, extended with the last slope).
    """

    kind: str
    params: tuple[float, ...] = ()
    _knots: tuple[tuple[float, float], ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "log":
            w, g = self.params
            if not (w > 0 and g > 0):
                raise ValueError("log rate needs positive bandwidth and gain")
        elif self.kind == "sqrt":
            (a,) = self.params
            if not a > 0:
                raise ValueError("sqrt rate needs a positive scale")
        elif self.kind == "tabulated":
            _check_tabulated(self.params)
            ps = (0.0,) + self.params[0::2]
            rs = (0.0,) + self.params[1::2]
            object.__setattr__(self, "_knots", tuple(zip(ps, rs)))
        else:
            raise ValueError(f"unknown rate family {self.kind!r}")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, p: float) -> float:
        if p < 0:
            raise ValueError(f"power must be nonnegative, got {p}")
        if self.kind == "log":
            w, g = self.params
            return w * math.log1p(g * p) / _LN2
        if self.kind == "sqrt":
            return self.params[0] * math.sqrt(p)
        return self._tab_eval(p)

    def many(self, p: np.ndarray) -> np.ndarray:
        """Vectorized ``r``; negative entries are not checked."""
        p = np.asarray(p, dtype=float)
        if self.kind == "log":
            w, g = self.params
            return w * np.log1p(g * p) / _LN2
        if self.kind == "sqrt":
            return self.params[0] * np.sqrt(p)
        ps, rs = zip(*self._knots)
        s_last = (rs[-1] - rs[-2]) / (ps[-1] - ps[-2])
        return np.where(p <= ps[-1], np.interp(p, ps, rs), rs[-1] + s_last * (p - ps[-1]))

    def inverse_many(self, rate: np.ndarray) -> np.ndarray:
        rate = np.asarray(rate, dtype=float)
        if self.kind == "log":
            w, g = self.params
            with np.errstate(over="ignore"):
                return np.expm1(rate * _LN2 / w) / g
        if self.kind == "sqrt":
            return (rate / self.params[0]) ** 2
        ps, rs = zip(*self._knots)
        s_last = (rs[-1] - rs[-2]) / (ps[-1] - ps[-2])
        return np.where(rate <= rs[-1], np.interp(rate, rs, ps), ps[-1] + (rate - rs[-1]) / s_last)

    def derivative(self, p: float) -> float:
        if p < 0:
            raise ValueError(f"power must be nonnegative, got {p}")
        if self.kind == "log":
            w, g = self.params
            return w * g / ((1.0 + g * p) * _LN2)
        if self.kind == "sqrt":
            return math.inf if p == 0 else 0.5 * self.params[0] / math.sqrt(p)
        knots = self._knots
        for (p0, r0), (p1, r1) in zip(knots, knots[1:]):
            if p < p1:
                return (r1 - r0) / (p1 - p0)
        (p0, r0), (p1, r1) = knots[-2], knots[-1]
        return (r1 - r0) / (p1 - p0)

    def slope_at_origin(self) -> float:
        """``lim_{p->0+} r(p)/p``; ``math.inf`` for the square-root family."""
        if self.kind == "log":
            w, g = self.params
            return w * g / _LN2
        if self.kind == "sqrt":
            return math.inf
        (p0, r0), (p1, r1) = self._knots[0], self._knots[1]
        return (r1 - r0) / (p1 - p0)

    def rate_per_power(self, p: float) -> float:
        return self.slope_at_origin() if p == 0 else self(p) / p

    def _tab_eval(self, p: float) -> float:
        knots = self._knots
        for (p0, r0), (p1, r1) in zip(knots, knots[1:]):
            if p <= p1:
                return r0 + (r1 - r0) * (p - p0) / (p1 - p0)
        (p0, r0), (p1, r1) = knots[-2], knots[-1]
        return r1 + (r1 - r0) * (p - p1) / (p1 - p0)

    # -- inverse problems ---------------------------------------------------

    def inverse(self, rate: float) -> float:
        """Power needed to sustain ``rate`` bits/s."""
        if rate < 0:
            raise ValueError(f"rate must be nonnegative, got {rate}")
        if rate == 0:
            return 0.0
        if self.kind == "log":
            w, g = self.params
            x = rate * _LN2 / w
            return math.expm1(x) / g if x < 700.0 else math.inf
        if self.kind == "sqrt":
            return (rate / self.params[0]) ** 2
        knots = self._knots
        for (p0, r0), (p1, r1) in zip(knots, knots[1:]):
            if rate <= r1:
                return p0 + (p1 - p0) * (rate - r0) / (r1 - r0)
        (p0, r0), (p1, r1) = knots[-2], knots[-1]
        return p1 + (p1 - p0) * (rate - r1) / (r1 - r0)

    def solve_rate_per_power(self, c: float) -> float:
        """Return the ``p > 0`` with ``r(p)/p == c``.

        Bisection on the strictly decreasing ``r(p)/p``; the bracket is grown
        geometrically and iteration stops once it is ``BRACKET_TOL`` wide
        relative to its upper end, which keeps the answer monotone in ``c``
        to well below any physical tolerance.
        """
        if not c > 0:
            raise ValueError(f"rate-per-power must be positive, got {c}")
        if c >= self.slope_at_origin():
            raise InfeasibleError(
                f"r(p)/p = {c} has no positive solution (r'(0) = {self.slope_at_origin()})"
            )
        lo, hi = 0.0, 1.0
        while self(hi) / hi >= c:
            lo, hi = hi, 2.0 * hi
            if hi > P_MAX:
                raise InfeasibleError(f"r(p)/p = {c} needs more than {P_MAX:g} W")
        while hi - lo > BRACKET_TOL * hi:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self(mid) / mid >= c:
                lo = mid
            else:
                hi = mid
        # lo may still be 0 when c sits just below r'(0)
        return hi if lo == 0.0 else 0.5 * (lo + hi)

    def constant_power_completion(self, energy: float, bits: float) -> float:
        """Time ``T`` with ``T * r(energy / T) == bits``.

        The left side increases in ``T`` towards ``energy * r'(0)``, so the
        solve is the same one-dimensional inversion: ``T = bits / r(p)`` at
        the power ``p`` solving ``r(p)/p = bits/energy``.
        """
        if not energy > 0:
            raise ValueError(f"energy must be positive, got {energy}")
        if not bits > 0:
            raise ValueError(f"bits must be positive, got {bits}")
        if bits >= energy * self.slope_at_origin():
            raise InfeasibleError(
                f"{bits} bits cannot be sent with {energy} J in finite time"
            )
        p = self.solve_rate_per_power(bits / energy)
        return energy / p

    # -- serialization ------------------------------------------------------

    def spec_string(self) -> str:
        if self.kind == "log":
            w, g = self.params
            if w == 1.0 and g == 1.0:
                return "log2_1p"
            return f"scaled_log:{w!r},{g!r}"
        if self.kind == "sqrt":
            return "sqrt" if self.params[0] == 1.0 else f"sqrt:{self.params[0]!r}"
        return "tabulated:" + ",".join(repr(v) for v in self.params)


def _check_tabulated(params: Sequence[float]) -> None:
    if len(params) < 4 or len(params) % 2:
        raise ValueError("tabulated rate needs at least two (p, r) knots")
    ps = [0.0, *params[0::2]]
    rs = [0.0, *params[1::2]]
    slopes = []
    for i in range(1, len(ps)):
        if not ps[i] > ps[i - 1]:
            raise ValueError("tabulated rate knots must have increasing power")
        slopes.append((rs[i] - rs[i - 1]) / (ps[i] - ps[i - 1]))
    if slopes[-1] <= 0:
        raise ValueError("tabulated rate must be strictly increasing")
    if any(b >= a for a, b in zip(slopes, slopes[1:])):
        raise ValueError("tabulated rate slopes must strictly decrease (concavity)")


def log2_1p() -> RateFunction:
    return RateFunction("log", (1.0, 1.0))


def scaled_log(bandwidth: float, gain: float) -> RateFunction:
    return RateFunction("log", (float(bandwidth), float(gain)))


def sqrt_rate(scale: float = 1.0) -> RateFunction:
    return RateFunction("sqrt", (float(scale),))


def tabulated(points: Sequence[tuple[float, float]]) -> RateFunction:
    flat: list[float] = []
    for p, r in points:
        flat.extend((float(p), float(r)))
    return RateFunction("tabulated", tuple(flat))


def parse_rate(text: str) -> RateFunction:
    """Parse ``log2_1p``, ``sqrt[:a]``, ``scaled_log:W,g`` or ``tabulated:p1,r1,...``."""
    text = text.strip()
    name, _, args = text.partition(":")
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise ValueError(f"bad rate parameters in {text!r}") from exc
    if name == "log2_1p" and not values:
        return log2_1p()
    if name == "scaled_log" and len(values) == 2:
        return scaled_log(*values)
    if name == "sqrt" and len(values) <= 1:
        return sqrt_rate(*values)
    if name == "tabulated":
        return RateFunction("tabulated", tuple(values))
    raise ValueError(f"unknown rate function {text!r}")
