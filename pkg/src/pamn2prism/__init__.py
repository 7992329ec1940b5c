"""Translate probabilistic B (pAMN) machines into PRISM MDP models and check
their expectation invariants with exact arithmetic."""

from pathlib import Path

from .ast import Machine
from .mdp import CheckReport, build_mdp, check_expectations, min_instantaneous_reward
from .parser import MachineSyntaxError, parse_expression, parse_machine
from .printer import pretty_print
from .prism import emit, emit_query
from .translate import PrismModel, TranslationError, translate
from .wp import StateBox, check_obligations, expected_value, wp, wp_eval

__version__ = "0.1.0"

EXAMPLES = Path(__file__).parent / "examples"


def example_path(name: str) -> Path:
    """Path of a bundled example machine, e.g. ``example_path("demon")``."""
    path = EXAMPLES / f"{name}.pb"
    if not path.exists():
        raise FileNotFoundError(path)
    return path


def load_example(name: str) -> Machine:
    return parse_machine(example_path(name).read_text(encoding="utf-8"))


__all__ = [
    "CheckReport", "Machine", "MachineSyntaxError", "PrismModel", "StateBox", "TranslationError",
    "build_mdp", "check_expectations", "check_obligations", "emit", "emit_query", "example_path",
    "expected_value", "load_example", "min_instantaneous_reward", "parse_expression",
    "parse_machine", "pretty_print", "translate", "wp", "wp_eval",
]
