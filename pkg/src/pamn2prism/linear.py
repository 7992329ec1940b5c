"""Linear-arithmetic implication via Fourier-Motzkin elimination.

Used by the translator to decide whether a range conjunct is already implied
by a command's guard.  The test is sound but incomplete: non-linear atoms are
dropped from the premises, and integrality is only used to tighten strict
inequalities between integer-valued terms.  A ``False`` answer therefore
means "not shown to be implied".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Collection, Dict, FrozenSet, Iterable, List, Optional, Tuple

from . import ast as A

MAX_CONSTRAINTS = 4000


@dataclass(frozen=True)
class Linear:
    """``sum(coeffs[x] * x) + const``."""

    coeffs: Tuple[Tuple[str, Fraction], ...]
    const: Fraction

    @staticmethod
    def of(d: Dict[str, Fraction], const) -> "Linear":
        return Linear(tuple(sorted((k, v) for k, v in d.items() if v != 0)), Fraction(const))

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(self.coeffs)

    def __add__(self, other: "Linear") -> "Linear":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return Linear.of(d, self.const + other.const)

    def scale(self, c) -> "Linear":
        return Linear.of({k: v * c for k, v in self.coeffs}, self.const * c)

    def __sub__(self, other: "Linear") -> "Linear":
        return self + other.scale(-1)

    @property
    def symbols(self) -> FrozenSet[str]:
        return frozenset(k for k, _ in self.coeffs)


def linearize(e: A.Expr) -> Optional[Linear]:
    """Linear form of an arithmetic expression, or None when it is non-linear."""
    if isinstance(e, A.Var):
        return Linear.of({e.name: Fraction(1)}, 0)
    if isinstance(e, A.IntLit):
        return Linear.of({}, e.value)
    if isinstance(e, A.RatLit):
        return Linear.of({}, e.value)
    if isinstance(e, A.ToReal):
        return linearize(e.operand)
    if isinstance(e, A.Neg):
        inner = linearize(e.operand)
        return None if inner is None else inner.scale(-1)
    if isinstance(e, A.BinOp):
        a, b = linearize(e.left), linearize(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if not a.coeffs:
            return b.scale(a.const)
        if not b.coeffs:
            return a.scale(b.const)
        return None
    return None


@dataclass(frozen=True)
class Constraint:
    """``expr <= 0`` (or ``expr < 0`` when strict)."""

    expr: Linear
    strict: bool = False


def _tighten(c: Constraint, integers: Collection[str]) -> Constraint:
    """Over integer-valued terms, ``t < 0`` is ``t + 1 <= 0`` after scaling to integers."""
    if not c.strict or not c.expr.symbols <= set(integers):
        return c
    scale = lcm(*(v.denominator for _, v in c.expr.coeffs), c.expr.const.denominator)
    if any((v * scale).denominator != 1 for _, v in c.expr.coeffs):
        return c
    scaled = c.expr.scale(scale)
    return Constraint(Linear(scaled.coeffs, scaled.const + 1), False)


def constraints_of(e: A.Expr) -> List[Constraint]:
    """Linear constraints entailed by a boolean premise; non-linear parts are dropped."""
    out: List[Constraint] = []
    if isinstance(e, A.And):
        for op in e.operands:
            out.extend(constraints_of(op))
    elif isinstance(e, A.TypeAtom):
        if e.typeset in A.NATURAL_SETS:
            for n in e.names:
                out.append(Constraint(Linear.of({n: Fraction(-1)}, 0)))
    elif isinstance(e, A.Compare):
        left, right = linearize(e.left), linearize(e.right)
        if left is None or right is None:
            return out
        d = left - right
        if e.op == "<=":
            out.append(Constraint(d))
        elif e.op == "<":
            out.append(Constraint(d, True))
        elif e.op == ">=":
            out.append(Constraint(d.scale(-1)))
        elif e.op == ">":
            out.append(Constraint(d.scale(-1), True))
        elif e.op == "=":
            out.append(Constraint(d))
            out.append(Constraint(d.scale(-1)))
    return out


def _negate(e: A.Expr) -> Optional[List[Constraint]]:
    if not isinstance(e, A.Compare) or e.op == "=":
        return None
    left, right = linearize(e.left), linearize(e.right)
    if left is None or right is None:
        return None
    d = left - right
    # not (d <= 0)  is  -d < 0, and so on.
    return {
        "<=": [Constraint(d.scale(-1), True)],
        "<": [Constraint(d.scale(-1))],
        ">=": [Constraint(d, True)],
        ">": [Constraint(d)],
    }[e.op]


def infeasible(constraints: Iterable[Constraint]) -> bool:
    """True when the rational relaxation of ``constraints`` has no solution."""
    cs = set(constraints)
    while True:
        for c in cs:
            if not c.expr.coeffs and (c.expr.const > 0 or (c.strict and c.expr.const >= 0)):
                return True
        symbols = set()
        for c in cs:
            symbols |= c.expr.symbols
        if not symbols:
            return False
        # eliminate the symbol producing the fewest new constraints
        def cost(x):
            pos = sum(1 for c in cs if c.expr.as_dict().get(x, 0) > 0)
            neg = sum(1 for c in cs if c.expr.as_dict().get(x, 0) < 0)
            return pos * neg - pos - neg
        x = min(sorted(symbols), key=cost)
        pos, neg, rest = [], [], []
        for c in cs:
            a = c.expr.as_dict().get(x, 0)
            (pos if a > 0 else neg if a < 0 else rest).append((c, a))
        new = {c for c, _ in rest}
        for cp, ap in pos:
            for cn, an in neg:
                combined = cp.expr.scale(-an) + cn.expr.scale(ap)
                new.add(Constraint(combined, cp.strict or cn.strict))
        if len(new) > MAX_CONSTRAINTS:
            return False
        cs = new


def implies(premises: Iterable[A.Expr], conclusion: A.Expr, integers: Collection[str]) -> bool:
    """Whether ``premises`` entail ``conclusion`` (sound, incomplete)."""
    negated = _negate(conclusion)
    if negated is None:
        return False
    cs: List[Constraint] = []
    for p in premises:
        cs.extend(constraints_of(p))
    cs.extend(negated)
    return infeasible(_tighten(c, integers) for c in cs)
