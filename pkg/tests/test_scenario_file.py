import pytest

from ehonline.analysis import fig1_scenario, generate_scenario, ScenarioFamily, tight_instance
from ehonline.scenario_file import (
    ScenarioParseError,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    shipped_scenarios,
)

FIG1 = """\
format = 1
B0 = 2.5   # bits
energy = poly:(0,0,100)@[0,2)
data = expc:(1,1,3)@[0,2)
rate = "log2_1p"
"""


def test_parse_fig1_text():
    scn = parse_scenario(FIG1)
    ref = fig1_scenario(name="")
    assert scn.b0 == ref.b0
    assert scn.energy_curve == ref.energy_curve
    assert scn.data_curve == ref.data_curve
    assert scn.rate == ref.rate


def test_shipped_files():
    assert shipped_scenarios() == ["fig1.scn", "tight.scn"]
    fig1 = load_scenario("fig1.scn")
    assert fig1.energy_curve.eval(0.5) == pytest.approx(25.0)
    assert fig1.name == "fig1"
    tight = load_scenario("tight.scn")
    assert tight.b0 == 2.0 and tight.horizon == 4.0


def test_load_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "nope.scn")


def test_load_from_path(tmp_path):
    p = tmp_path / "mine.scn"
    p.write_text(FIG1)
    assert load_scenario(p).name == "mine"


@pytest.mark.parametrize(
    "scn", [fig1_scenario(), tight_instance(), generate_scenario(ScenarioFamily(seed=9), 0)], ids=lambda s: s.name
)
def test_round_trip(scn):
    text = serialize_scenario(scn)
    again = parse_scenario(text)
    assert again == scn
    assert serialize_scenario(again) == text


def test_missing_field_named():
    with pytest.raises(ScenarioParseError, match="'B0'"):
        parse_scenario("energy = jump:(0,3)\ndata = jump:(0,2)\n")


def test_decreasing_curve_reports_monotonicity():
    with pytest.raises(ScenarioParseError, match=":2: energy: monotonicity"):
        parse_scenario("B0 = 1\nenergy = poly:(5,-1)@[0,2)\ndata = jump:(0,2)\n")


@pytest.mark.parametrize(
    "text, where",
    [
        ("B0 = 1\nB0 = 2\n", ":2:"),
        ("B0 = x\nenergy = jump:(0,3)\ndata = jump:(0,2)\n", ":1:"),
        ("B0 = 1\ncolour = red\n", ":2:"),
        ("B0 = 1\njust words\n", ":2:"),
        ("B0 = 1\nenergy = jump:(0,3)\ndata = line:(1)\n", ":3:"),
        ("format = 2\nB0 = 1\nenergy = jump:(0,3)\ndata = jump:(0,2)\n", "format"),
    ],
)
def test_line_numbered_errors(text, where):
    with pytest.raises(ScenarioParseError, match=where):
        parse_scenario(text)


def test_unreachable_budget():
    with pytest.raises(ScenarioParseError, match="never reaches"):
        parse_scenario("B0 = 5\nenergy = jump:(0,3)\ndata = jump:(0,2)\nhorizon = 4\n")
