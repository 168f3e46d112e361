"""Completion-time scheduling for an energy-harvesting transmitter.

Two causal policies (:func:`simulate_alg1`, :func:`simulate_alg2`) are
compared with the non-causal optimum (:func:`offline_completion_time`).
"""

from .analysis import (
    CompetitiveReport,
    ScenarioFamily,
    competitive_report,
    discretization_study,
    fig1_scenario,
    property_sweep,
    tight_instance,
)
from .curves import CumulativeCurve, discretize, parse_curve
from .model import PolicyTrajectory, Scenario
from .offline import brute_force_throughput, max_throughput_by, offline_completion_time
from .online import (
    instantaneous_power,
    simulate_alg1,
    simulate_alg2,
    waiting_time_alg1,
    waiting_time_alg2,
)
from .rates import RateFunction, log2_1p, parse_rate, scaled_log, sqrt_rate
from .scenario_file import load_scenario, parse_scenario, serialize_scenario

__version__ = "0.1.0"

__all__ = [
    "CompetitiveReport",
    "CumulativeCurve",
    "PolicyTrajectory",
    "RateFunction",
    "Scenario",
    "ScenarioFamily",
    "brute_force_throughput",
    "competitive_report",
    "discretization_study",
    "discretize",
    "fig1_scenario",
    "instantaneous_power",
    "load_scenario",
    "log2_1p",
    "max_throughput_by",
    "offline_completion_time",
    "parse_curve",
    "parse_rate",
    "parse_scenario",
    "property_sweep",
    "scaled_log",
    "serialize_scenario",
    "simulate_alg1",
    "simulate_alg2",
    "sqrt_rate",
    "tight_instance",
    "waiting_time_alg1",
    "waiting_time_alg2",
]
