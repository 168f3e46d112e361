"""Plain-text ``.scn`` scenario files.

One ``key = value`` per line; ``#`` starts a comment and values may be
quoted. Curves use the term
syntax of :mod:`ehonline.curves`, rates the names accepted by
:func:`ehonline.rates.parse_rate`::

    format = 1
    B0 = 2.5
    energy = poly:(0,0,100)@[0,2)
    data = expc:(1,1,3)@[0,2)
    rate = log2_1p

Optional keys: ``name``, ``horizon``, ``step``, ``tol_bits``, ``tol_energy``.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .curves import parse_curve
from .model import Scenario
from .rates import parse_rate

__all__ = ["ScenarioParseError", "parse_scenario", "serialize_scenario", "load_scenario", "shipped_scenarios"]

FORMAT_VERSION = 1
_REQUIRED = ("B0", "energy", "data")
_KNOWN = {"format", "name", "B0", "energy", "data", "rate", "horizon", "step", "tol_bits", "tol_energy"}


class ScenarioParseError(ValueError):
    pass


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    fields: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), _unquote(value.strip())
        if not sep or not key:
            raise ScenarioParseError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _KNOWN:
            raise ScenarioParseError(f"{source}:{lineno}: unknown field {key!r}")
        if key in fields:
            raise ScenarioParseError(f"{source}:{lineno}: duplicate field {key!r}")
        fields[key] = (lineno, value)
    for key in _REQUIRED:
        if key not in fields:
            raise ScenarioParseError(f"{source}: missing required field {key!r}")

    def num(key: str) -> float | None:
        if key not in fields:
            return None
        lineno, value = fields[key]
        try:
            return float(value)
        except ValueError:
            raise ScenarioParseError(f"{source}:{lineno}: {key} must be a number, got {value!r}") from None

    def parsed(key: str, fn):
        lineno, value = fields[key]
        try:
            return fn(value)
        except ValueError as exc:
            raise ScenarioParseError(f"{source}:{lineno}: {key}: {exc}") from exc

    version = num("format")
    if version is not None and version != FORMAT_VERSION:
        raise ScenarioParseError(f"{source}: unsupported format version {version:g}")
    horizon = num("horizon")
    energy = parsed("energy", lambda v: parse_curve(v, horizon))
    data = parsed("data", lambda v: parse_curve(v, horizon))
    rate = parsed("rate", parse_rate) if "rate" in fields else parse_rate("log2_1p")
    kwargs = dict(
        b0=num("B0"),
        energy_curve=energy,
        data_curve=data,
        rate=rate,
        horizon=horizon,
        step=num("step"),
        name=fields["name"][1] if "name" in fields else ("" if source.startswith("<") else Path(source).stem),
    )
    for key in ("tol_bits", "tol_energy"):
        if key in fields:
            kwargs[key] = num(key)
    try:
        return Scenario(**kwargs)
    except ValueError as exc:
        raise ScenarioParseError(f"{source}: {exc}") from exc


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1].strip()
    return value


def serialize_scenario(scn: Scenario) -> str:
    lines = [
        f"format = {FORMAT_VERSION}",
        f"name = {scn.name}" if scn.name else None,
        f"B0 = {scn.b0!r}",
        f"energy = {scn.energy_curve.to_text()}",
        f"data = {scn.data_curve.to_text()}",
        f"rate = {scn.rate.spec_string()}",
        f"horizon = {scn.horizon!r}",
        f"step = {scn.step!r}",
        f"tol_bits = {scn.tol_bits!r}",
        f"tol_energy = {scn.tol_energy!r}",
    ]
    return "\n".join(line for line in lines if line is not None) + "\n"


def shipped_scenarios() -> list[str]:
    root = resources.files("ehonline") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".scn"))


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario file; bare names of shipped scenarios (``fig1.scn``) also work."""
    p = Path(path)
    if p.exists():
        return parse_scenario(p.read_text(), str(p))
    if p.name in shipped_scenarios() and str(p) == p.name:
        text = (resources.files("ehonline") / "scenarios" / p.name).read_text()
        return parse_scenario(text, p.name)
    raise FileNotFoundError(f"no scenario file {path}")
