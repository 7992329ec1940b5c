"""PRISM-language emission of translated models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

from . import ast as A
from .translate import EXPECTATIONS_LABEL, Branch, GuardedCommand, Module, PrismModel

_PREC = {"|": 0, "&": 1, "cmp": 2, "+": 3, "-": 3, "*": 4, "/": 4, "neg": 5}
_ATOM = 6


@dataclass(frozen=True)
class EmitConfig:
    indent: int = 2


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.And):
        return _PREC["&"] if e.operands else _ATOM
    if isinstance(e, A.Compare):
        return _PREC["cmp"]
    if isinstance(e, A.BinOp):
        return _PREC[e.op]
    if isinstance(e, A.Neg):
        return _PREC["neg"]
    if isinstance(e, A.RatLit):
        q = e.value
        if q.denominator != 1:
            return _PREC["/"]
        return _PREC["neg"] if q < 0 else _ATOM
    if isinstance(e, A.ToReal):
        return _prec(e.operand)
    if isinstance(e, A.IntLit) and e.value < 0:
        return _PREC["neg"]
    return _ATOM


def _wrap(e: A.Expr, min_prec: int) -> str:
    text = expr(e)
    return f"({text})" if _prec(e) < min_prec else text


def expr(e: A.Expr) -> str:
    """PRISM concrete syntax for an expression."""
    if isinstance(e, (A.Var, A.FormulaRef)):
        return e.name
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.RatLit):
        q = e.value
        if q.denominator == 1:
            return str(q.numerator)
        return f"{q.numerator}/{q.denominator}"
    if isinstance(e, A.ToReal):
        return expr(e.operand)
    if isinstance(e, A.Neg):
        return "-" + _wrap(e.operand, _PREC["neg"] + 1)
    if isinstance(e, A.BinOp):
        p = _PREC[e.op]
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, A.Compare):
        p = _PREC["cmp"] + 1
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p)}"
    if isinstance(e, A.And):
        if not e.operands:
            return "true"
        return " & ".join(_wrap(o, _PREC["&"] + 1) for o in e.operands)
    if isinstance(e, A.Not):
        return f"!({expr(e.operand)})"
    raise TypeError(f"no PRISM syntax for {e!r}")


def _conjunct(e: A.Expr) -> str:
    if isinstance(e, (A.FormulaRef, A.Not)):
        return expr(e)
    return f"({expr(e)})"


def guard_text(cmd: GuardedCommand) -> str:
    if not cmd.guard:
        return "true"
    return " & ".join(_conjunct(g) for g in cmd.guard)


def _branch_text(b: Branch) -> str:
    body = " & ".join(f"({v}' = {expr(e)})" for v, e in b.updates) or "true"
    if b.prob is None:
        return body
    p = expr(b.prob)
    if _prec(b.prob) < _PREC["*"]:
        p = f"({p})"
    return f"{p} : {body}"


def command_text(cmd: GuardedCommand) -> str:
    updates = " + ".join(_branch_text(b) for b in cmd.branches)
    return f"[{cmd.action}] {guard_text(cmd)} -> {updates};"


def _module(m: Module, pad: str) -> List[str]:
    lines = [f"module {m.name}", ""]
    for v in m.variables:
        lines.append(f"{pad}{v.name} : [{expr(v.low)}..{expr(v.high)}] init {expr(v.init)};")
    lines.append("")
    for c in m.commands:
        lines.append(pad + command_text(c))
    lines.append("")
    lines.append("endmodule")
    return lines


def emit(model: PrismModel, config: EmitConfig = EmitConfig()) -> str:
    """Render ``model`` as PRISM source text (LF line endings, trailing newline)."""
    pad = " " * config.indent
    lines = [model.model_type, ""]
    for c in model.constants:
        text = "const "
        if c.ctype:
            text += c.ctype + " "
        text += c.name
        if c.value is not None:
            text += f" = {expr(c.value)}"
        lines.append(text + ";")
    lines.append("")
    if model.formulas:
        for f in model.formulas:
            lines.append(f"formula {f.name} = ({expr(f.predicate)});")
        lines.append("")
    lines.extend(_module(model.main, pad))
    lines.append("")
    lines.append(f'label "{EXPECTATIONS_LABEL}" = ({expr(model.label)});')
    lines.append("")
    lines.extend(_module(model.counter, pad))
    lines.append("")
    lines.append("rewards")
    for r in model.rewards:
        lines.append(f"{pad}({expr(r.guard)}) : ({expr(r.reward)}) + {expr(r.padding)};")
    lines.append("endrewards")
    return "\n".join(lines) + "\n"


def emit_query(max_count: int) -> str:
    """Minimum instantaneous reward queries for every horizon ``0..max_count+1``."""
    if max_count < 0:
        raise ValueError("max_count must be non-negative")
    return "".join(f"Rmin=? [ I={k} ]\n" for k in range(max_count + 2))
