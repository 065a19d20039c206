"""samc: a model checker for stochastic automata with general clocks.

Two checking engines decide time-bounded until formulae of a probabilistic
real-time logic: an exact region-tree engine backed by polytope integration
of polynomial densities, and a discretised matrix engine with an explicit
error budget.  A Monte Carlo path simulator cross-validates both.
"""

from .adversary import FirstEdge, StaticPolicy, load_policy
from .automaton import (
    Distribution,
    Edge,
    StochasticAutomaton,
    cdf_at,
    interval_probability,
    load_model,
    parse_model,
    sample_clock,
    validate_automaton,
)
from .logic import EngineOptions, check, desugar, eval_state_formula, parse_formula
from .matrix_checker import complexity_bound, run_matrix_check
from .polyint import polytope_probability
from .region_checker import run_region_check
from .simulate import estimate_until, sample_path

__version__ = "0.1.0"

__all__ = [
    "Distribution",
    "Edge",
    "StochasticAutomaton",
    "FirstEdge",
    "StaticPolicy",
    "EngineOptions",
    "cdf_at",
    "interval_probability",
    "sample_clock",
    "parse_model",
    "load_model",
    "load_policy",
    "validate_automaton",
    "parse_formula",
    "desugar",
    "eval_state_formula",
    "check",
    "polytope_probability",
    "run_region_check",
    "run_matrix_check",
    "complexity_bound",
    "estimate_until",
    "sample_path",
]
