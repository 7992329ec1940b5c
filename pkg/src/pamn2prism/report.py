"""Text and structured (JSON) renderings of check and obligation results."""

from __future__ import annotations

import json
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any, Dict, Mapping

from . import ast as A
from .mdp import CheckReport
from .wp import ObligationSummary

SCHEMA_VERSION = 1
IDLE_LABEL = "(idle)"


def rational_text(q: A.Number) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def decimal_text(q: A.Number, digits: int = 12) -> str:
    q = Fraction(q)
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(q.numerator) / Decimal(q.denominator)
    text = format(d.normalize(), "f")
    return "0" if text in ("-0", "") else text


def rational(q: A.Number) -> Dict[str, str]:
    return {"exact": rational_text(q), "decimal": decimal_text(q)}


def _valuation(v: Mapping[str, int]) -> str:
    return ", ".join(f"{k}={x}" for k, x in v.items())


def _action(label: str) -> str:
    return label or IDLE_LABEL


# --------------------------------------------------------------------------
# Check reports


def check_structured(r: CheckReport) -> Dict[str, Any]:
    padded = r.padded_values
    return {
        "schema": "pamn2prism/check",
        "schema_version": SCHEMA_VERSION,
        "machine": r.machine,
        "constants": {k: rational_text(v) for k, v in r.constants.items()},
        "max_count": r.max_count,
        "states": r.states,
        "initial_expectation": rational(r.initial_value),
        "horizons": [
            {"k": k, "value": rational(w), "padded": rational(p)}
            for (k, w), p in zip(r.horizons, padded)
        ],
        "verdict": r.verdict,
        "first_violating_horizon": r.first_violating_horizon,
        "scheduler": None if r.scheduler is None else [
            {"state": dict(s), "steps_remaining": n, "action": _action(a)}
            for s, n, a in r.scheduler
        ],
    }


def check_text(r: CheckReport) -> str:
    lines = [
        f"machine: {r.machine}",
        "constants: " + ", ".join(f"{k}={rational_text(v)}" for k, v in r.constants.items()),
        f"max_count: {r.max_count}",
        f"states: {r.states}",
        f"initial_expectation: {rational_text(r.initial_value)}",
        "",
        f"{'k':>3}  {'W_k':>12}  {'decimal':>14}  {'padded':>12}",
    ]
    for (k, w), p in zip(r.horizons, r.padded_values):
        lines.append(f"{k:>3}  {rational_text(w):>12}  {decimal_text(w):>14}  {rational_text(p):>12}")
    lines.append("")
    lines.append(f"verdict: {r.verdict}")
    if r.first_violating_horizon is not None:
        lines.append(f"first_violating_horizon: {r.first_violating_horizon}")
        lines.append("scheduler:")
        for s, n, a in r.scheduler or []:
            lines.append(f"  steps_remaining={n}  {_action(a)}  <- {_valuation(s)}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Obligation summaries


def obligations_structured(s: ObligationSummary) -> Dict[str, Any]:
    return {
        "schema": "pamn2prism/obligations",
        "schema_version": SCHEMA_VERSION,
        "machine": s.machine,
        "constants": {k: rational_text(v) for k, v in s.constants.items()},
        "box": [{"variable": n, "low": lo, "high": hi} for n, lo, hi in s.box.bounds],
        "initialisation": {
            "holds": s.init.holds,
            "e": rational(s.init.initial),
            "wp": rational(s.init.wp_init),
        },
        "operations": [
            {
                "name": r.operation,
                "verdict": r.verdict,
                "checked_states": r.checked_states,
                "failing_states": r.failing_states,
                "witnesses": [
                    {"state": dict(w.state), "xi": rational(w.lhs), "wp": rational(w.rhs)}
                    for w in r.witnesses
                ],
            }
            for r in s.reports
        ],
        "holds": s.holds,
    }


def obligations_text(s: ObligationSummary) -> str:
    lines = [f"machine: {s.machine}"]
    if s.constants:
        lines.append("constants: " + ", ".join(f"{k}={rational_text(v)}" for k, v in s.constants.items()))
    lines.append("box: " + ", ".join(f"{n} in [{lo}..{hi}]" for n, lo, hi in s.box.bounds))
    init = "holds" if s.init.holds else "fails"
    lines.append(f"INITIALISATION: {init} (e = {rational_text(s.init.initial)}, "
                 f"wp = {rational_text(s.init.wp_init)})")
    for r in s.reports:
        lines.append(f"{r.operation}: {r.verdict} ({r.failing_states} of {r.checked_states} states fail)")
        for w in r.witnesses:
            lines.append(f"  witness {_valuation(w.state)}: xi = {rational_text(w.lhs)} > "
                         f"wp = {rational_text(w.rhs)}")
    lines.append(f"result: {'holds' if s.holds else 'fails'}")
    return "\n".join(lines) + "\n"


def to_json(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def render(result, fmt: str = "text") -> str:
    if isinstance(result, CheckReport):
        return check_text(result) if fmt == "text" else to_json(check_structured(result))
    if isinstance(result, ObligationSummary):
        return obligations_text(result) if fmt == "text" else to_json(obligations_structured(result))
    raise TypeError(f"cannot render {type(result).__name__}")
