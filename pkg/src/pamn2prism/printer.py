"""Pretty-printer for pAMN machines; output re-parses to an identical AST."""

from __future__ import annotations

from typing import List

from . import ast as A

_PREC = {"&": 1, "cmp": 2, "+": 3, "-": 3, "*": 4, "neg": 5}
_ATOM = 6


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.And):
        return _PREC["&"]
    if isinstance(e, (A.Compare, A.TypeAtom)):
        return _PREC["cmp"]
    if isinstance(e, A.BinOp):
        return _PREC[e.op]
    if isinstance(e, A.Neg):
        return _PREC["neg"]
    return _ATOM


def _wrap(e: A.Expr, min_prec: int) -> str:
    text = expr_text(e)
    return f"({text})" if _prec(e) < min_prec else text


def expr_text(e: A.Expr) -> str:
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.RatLit):
        q = e.value
        if q.denominator == 1:
            return f"real({q.numerator})"
        return f"frac({q.numerator}, {q.denominator})"
    if isinstance(e, A.ToReal):
        return f"real({expr_text(e.operand)})"
    if isinstance(e, A.Neg):
        return "-" + _wrap(e.operand, _PREC["neg"])
    if isinstance(e, A.BinOp):
        p = _PREC[e.op]
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, A.Compare):
        p = _PREC["cmp"] + 1
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p)}"
    if isinstance(e, A.And):
        return " & ".join(_wrap(o, _PREC["&"] + 1) for o in e.operands)
    if isinstance(e, A.TypeAtom):
        return f"{', '.join(e.names)} : {e.typeset}"
    raise TypeError(f"no concrete syntax for {e!r}")


def sub_text(s: A.Substitution, indent: int = 0, allow_seq: bool = True) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(s, A.Skip):
        return "skip"
    if isinstance(s, A.Assign):
        return f"{', '.join(s.targets)} := {', '.join(expr_text(v) for v in s.values)}"
    if isinstance(s, A.Parallel):
        return " || ".join(_sub_part(p, indent) for p in s.parts)
    if isinstance(s, A.Sequence):
        text = " ;\n".join(inner + sub_text(p, indent + 1, False) for p in s.parts)
        if allow_seq:
            return " ;\n".join(sub_text(p, indent, False) for p in s.parts)
        return f"BEGIN\n{text}\n{pad}END"
    if isinstance(s, A.Block):
        return f"BEGIN\n{inner}{sub_text(s.body, indent + 1)}\n{pad}END"
    if isinstance(s, A.Pre):
        return f"PRE {expr_text(s.cond)} THEN\n{inner}{sub_text(s.body, indent + 1)}\n{pad}END"
    if isinstance(s, A.PChoice):
        return (
            f"PCHOICE {expr_text(s.prob)} OF\n{inner}{sub_text(s.left, indent + 1)}\n"
            f"{pad}OR\n{inner}{sub_text(s.right, indent + 1)}\n{pad}END"
        )
    if isinstance(s, A.If):
        text = f"IF {expr_text(s.cond)} THEN\n{inner}{sub_text(s.left, indent + 1)}\n"
        if not isinstance(s.right, A.Skip):
            text += f"{pad}ELSE\n{inner}{sub_text(s.right, indent + 1)}\n"
        return text + f"{pad}END"
    raise TypeError(f"no concrete syntax for {s!r}")


def _sub_part(p: A.Substitution, indent: int) -> str:
    if isinstance(p, (A.Parallel, A.Sequence)):
        return f"BEGIN {sub_text(p, indent + 1)} END"
    return sub_text(p, indent, allow_seq=False)


def pretty_print(m: A.Machine) -> str:
    """Render ``m`` as pAMN source text."""
    lines: List[str] = []
    header = f"MACHINE {m.name}"
    if m.params:
        header += f"({', '.join(m.params)})"
    lines.append(header)
    if m.sees:
        lines.append(f"SEES {', '.join(m.sees)}")
    if m.constants:
        lines.append(f"CONSTANTS {', '.join(m.constants)}")
    if A.conjuncts(m.properties):
        lines.append(f"PROPERTIES {expr_text(m.properties)}")
    lines.append(f"VARIABLES {', '.join(m.variables)}")
    lines.append(f"INVARIANT {expr_text(m.invariant)}")
    e, xi = m.expectations
    lines.append(f"EXPECTATIONS {expr_text(e)} |=> {expr_text(xi)}")
    lines.append(f"INITIALISATION {sub_text(m.initialisation, 1)}")
    lines.append("OPERATIONS")
    ops = []
    for op in m.operations:
        head = op.name
        if op.outputs:
            head = f"{', '.join(op.outputs)} <-- {op.name}"
        ops.append(f"  {head} = {sub_text(op.body, 2, allow_seq=False)}")
    if ops:
        lines.append(" ;\n".join(ops))
    lines.append("END")
    return "\n".join(lines) + "\n"
