"""Abstract syntax for the pAMN subset, plus exact evaluation and substitution.

Numeric values are Python ``int`` or :class:`fractions.Fraction`; booleans are
``bool``.  No floating point is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

Number = Union[int, Fraction]
Value = Union[int, Fraction, bool]

TYPE_SETS = ("INT", "INTEGER", "NAT", "NATURAL", "REAL")
INTEGER_SETS = ("INT", "INTEGER")
NATURAL_SETS = ("NAT", "NATURAL")


class EvaluationError(Exception):
    """Raised when an expression cannot be evaluated in a given environment."""


class PreconditionViolated(EvaluationError):
    """Raised when a precondition guard evaluates to false during wp evaluation."""


@dataclass(frozen=True)
class SourceSpan:
    begin: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


def _span() -> Optional[SourceSpan]:
    return field(default=None, compare=False, repr=False)


def normalize(q: Number) -> Number:
    """Collapse an integral Fraction to ``int``; leave everything else alone."""
    if isinstance(q, Fraction) and q.denominator == 1:
        return int(q.numerator)
    return q


# --------------------------------------------------------------------------
# Expressions


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def children(self) -> Tuple["Expr", ...]:
        return ()


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class RatLit(Expr):
    """Rational literal from ``real(n)``, ``frac(a, b)`` or a decimal."""

    value: Fraction
    span: Optional[SourceSpan] = _span()

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class ToReal(Expr):
    """``real(e)`` applied to a non-literal; numerically the identity."""

    operand: Expr
    span: Optional[SourceSpan] = _span()

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr
    span: Optional[SourceSpan] = _span()

    def children(self):
        return (self.operand,)


ARITH_OPS = ("+", "-", "*")
COMPARE_OPS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = _span()

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Compare(Expr):
    op: str
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = _span()

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class And(Expr):
    operands: Tuple[Expr, ...]
    span: Optional[SourceSpan] = _span()

    def children(self):
        return self.operands


@dataclass(frozen=True)
class TypeAtom(Expr):
    """Typing atom ``x, y : NATURAL``."""

    names: Tuple[str, ...]
    typeset: str
    span: Optional[SourceSpan] = _span()


# Nodes below never come out of the parser.  They are produced by the
# expectation transformer and the translator.


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class FormulaRef(Expr):
    name: str


@dataclass(frozen=True)
class Ite(Expr):
    cond: Expr
    then: Expr
    other: Expr

    def children(self):
        return (self.cond, self.then, self.other)


@dataclass(frozen=True)
class Assume(Expr):
    """Value of ``body``, defined only where ``cond`` holds."""

    cond: Expr
    body: Expr

    def children(self):
        return (self.cond, self.body)


@dataclass(frozen=True)
class ProbChoice(Expr):
    """``prob * left + (1 - prob) * right`` with a range check on ``prob``."""

    prob: Expr
    left: Expr
    right: Expr

    def children(self):
        return (self.prob, self.left, self.right)


@dataclass(frozen=True)
class _MemberOf(Expr):
    """Typing atom over an arbitrary expression; arises only from substitution."""

    operand: Expr
    typeset: str

    def children(self):
        return (self.operand,)


TRUE = And(())


def conjunction(parts) -> Expr:
    """Flatten ``parts`` into a single conjunction (or the lone conjunct)."""
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.operands)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def conjuncts(expr: Expr) -> Tuple[Expr, ...]:
    if isinstance(expr, And):
        out = []
        for op in expr.operands:
            out.extend(conjuncts(op))
        return tuple(out)
    return (expr,)


def walk(expr: Expr) -> Iterator[Expr]:
    yield expr
    for child in expr.children():
        yield from walk(child)


def free_identifiers(expr: Expr) -> frozenset:
    """Identifiers referenced by ``expr`` (typing atoms contribute their names)."""
    names = set()
    for node in walk(expr):
        if isinstance(node, Var):
            names.add(node.name)
        elif isinstance(node, TypeAtom):
            names.update(node.names)
    return frozenset(names)


def is_constant_literal(expr: Expr) -> bool:
    return all(not isinstance(n, (Var, FormulaRef, TypeAtom)) for n in walk(expr))


# --------------------------------------------------------------------------
# Substitutions


class Substitution:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Substitution):
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Assign(Substitution):
    """``x, y := e, f`` (a single-target assignment has one-element tuples)."""

    targets: Tuple[str, ...]
    values: Tuple[Expr, ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Parallel(Substitution):
    parts: Tuple[Substitution, ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Sequence(Substitution):
    parts: Tuple[Substitution, ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Pre(Substitution):
    cond: Expr
    body: Substitution
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Block(Substitution):
    body: Substitution
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class PChoice(Substitution):
    prob: Expr
    left: Substitution
    right: Substitution
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class If(Substitution):
    """Guarded conditional: ``left`` when ``cond`` holds, else ``right``."""

    cond: Expr
    left: Substitution
    right: Substitution
    span: Optional[SourceSpan] = _span()


def assigned_variables(sub: Substitution) -> frozenset:
    if isinstance(sub, Assign):
        return frozenset(sub.targets)
    if isinstance(sub, (Parallel, Sequence)):
        return frozenset().union(*(assigned_variables(p) for p in sub.parts))
    if isinstance(sub, (Pre, Block)):
        return assigned_variables(sub.body)
    if isinstance(sub, (PChoice, If)):
        return assigned_variables(sub.left) | assigned_variables(sub.right)
    return frozenset()


def substitution_expressions(sub: Substitution) -> Iterator[Expr]:
    """Every expression occurring in ``sub``, in textual order."""
    if isinstance(sub, Assign):
        yield from sub.values
    elif isinstance(sub, (Parallel, Sequence)):
        for p in sub.parts:
            yield from substitution_expressions(p)
    elif isinstance(sub, Pre):
        yield sub.cond
        yield from substitution_expressions(sub.body)
    elif isinstance(sub, Block):
        yield from substitution_expressions(sub.body)
    elif isinstance(sub, PChoice):
        yield sub.prob
        yield from substitution_expressions(sub.left)
        yield from substitution_expressions(sub.right)
    elif isinstance(sub, If):
        yield sub.cond
        yield from substitution_expressions(sub.left)
        yield from substitution_expressions(sub.right)


def substitution_identifiers(sub: Substitution) -> frozenset:
    names = set(assigned_variables(sub))
    for e in substitution_expressions(sub):
        names |= free_identifiers(e)
    return frozenset(names)


# --------------------------------------------------------------------------
# Machines


@dataclass(frozen=True)
class Operation:
    name: str
    outputs: Tuple[str, ...]
    body: Substitution
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Machine:
    name: str
    params: Tuple[str, ...]
    sees: Tuple[str, ...]
    constants: Tuple[str, ...]
    properties: Expr
    variables: Tuple[str, ...]
    invariant: Expr
    expectations: Tuple[Expr, Expr]
    initialisation: Substitution
    operations: Tuple[Operation, ...]

    @property
    def initial_expr(self) -> Expr:
        return self.expectations[0]

    @property
    def random_variable(self) -> Expr:
        return self.expectations[1]

    def operation(self, name: str) -> Operation:
        for op in self.operations:
            if op.name == name:
                return op
        raise KeyError(name)

    def without(self, *names: str) -> "Machine":
        """Copy of this machine with the named operations removed."""
        ops = tuple(op for op in self.operations if op.name not in names)
        return Machine(
            self.name, self.params, self.sees, self.constants, self.properties,
            self.variables, self.invariant, self.expectations,
            self.initialisation, ops,
        )

    def typing(self) -> Dict[str, str]:
        """Map each typed identifier to its set name, from INVARIANT and PROPERTIES."""
        out: Dict[str, str] = {}
        for atom in conjuncts(self.properties) + conjuncts(self.invariant):
            if isinstance(atom, TypeAtom):
                for n in atom.names:
                    out[n] = atom.typeset
        return out

    def output_variables(self) -> Tuple[str, ...]:
        """Output parameters that are not declared in VARIABLES, in first-seen order."""
        seen = []
        for op in self.operations:
            for out in op.outputs:
                if out not in self.variables and out not in seen:
                    seen.append(out)
        return tuple(seen)

    def state_variables(self) -> Tuple[str, ...]:
        return self.variables + self.output_variables()


# --------------------------------------------------------------------------
# Evaluation


def _num(v: Value, node: Expr) -> Number:
    if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
        raise EvaluationError(f"expected a number, got {v!r} in {node}")
    return v


def _bool(v: Value, node: Expr) -> bool:
    if not isinstance(v, bool):
        raise EvaluationError(f"expected a boolean, got {v!r} in {node}")
    return v


def in_typeset(value: Value, typeset: str) -> bool:
    if isinstance(value, bool):
        return False
    if typeset in INTEGER_SETS:
        return isinstance(value, int) or (isinstance(value, Fraction) and value.denominator == 1)
    if typeset in NATURAL_SETS:
        return in_typeset(value, "INT") and value >= 0
    if typeset == "REAL":
        return isinstance(value, (int, Fraction))
    raise EvaluationError(f"unknown type set {typeset}")


def evaluate(expr: Expr, env: Mapping[str, Value], formulas: Optional[Mapping[str, Expr]] = None) -> Value:
    """Evaluate ``expr`` exactly under ``env``.

    ``formulas`` resolves :class:`FormulaRef` nodes of translated models.
    """
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise EvaluationError(f"unbound identifier '{expr.name}'") from None
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, RatLit):
        return normalize(expr.value)
    if isinstance(expr, ToReal):
        return _num(evaluate(expr.operand, env, formulas), expr)
    if isinstance(expr, Neg):
        return -_num(evaluate(expr.operand, env, formulas), expr)
    if isinstance(expr, BinOp):
        a = _num(evaluate(expr.left, env, formulas), expr)
        b = _num(evaluate(expr.right, env, formulas), expr)
        if expr.op == "+":
            return normalize(a + b)
        if expr.op == "-":
            return normalize(a - b)
        return normalize(a * b)
    if isinstance(expr, Compare):
        a = _num(evaluate(expr.left, env, formulas), expr)
        b = _num(evaluate(expr.right, env, formulas), expr)
        op = expr.op
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == "=":
            return a == b
        if op == ">=":
            return a >= b
        return a > b
    if isinstance(expr, And):
        return all(_bool(evaluate(o, env, formulas), expr) for o in expr.operands)
    if isinstance(expr, TypeAtom):
        for n in expr.names:
            if n not in env:
                raise EvaluationError(f"unbound identifier '{n}'")
        return all(in_typeset(env[n], expr.typeset) for n in expr.names)
    if isinstance(expr, Not):
        return not _bool(evaluate(expr.operand, env, formulas), expr)
    if isinstance(expr, FormulaRef):
        if formulas is None or expr.name not in formulas:
            raise EvaluationError(f"unknown formula '{expr.name}'")
        return evaluate(formulas[expr.name], env, formulas)
    if isinstance(expr, Ite):
        if _bool(evaluate(expr.cond, env, formulas), expr):
            return evaluate(expr.then, env, formulas)
        return evaluate(expr.other, env, formulas)
    if isinstance(expr, Assume):
        if not _bool(evaluate(expr.cond, env, formulas), expr):
            raise PreconditionViolated(f"precondition {expr.cond} does not hold")
        return evaluate(expr.body, env, formulas)
    if isinstance(expr, _MemberOf):
        return in_typeset(evaluate(expr.operand, env, formulas), expr.typeset)
    if isinstance(expr, ProbChoice):
        p = _num(evaluate(expr.prob, env, formulas), expr)
        if not 0 <= p <= 1:
            raise EvaluationError(f"probability {p} outside [0, 1]")
        # Skip the branch with zero weight so it may stay undefined.
        if p == 1:
            return evaluate(expr.left, env, formulas)
        if p == 0:
            return evaluate(expr.right, env, formulas)
        a = _num(evaluate(expr.left, env, formulas), expr)
        b = _num(evaluate(expr.right, env, formulas), expr)
        return normalize(p * a + (1 - p) * b)
    raise EvaluationError(f"cannot evaluate {expr!r}")


# --------------------------------------------------------------------------
# Substitution of expressions for identifiers


def substitute(expr: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Simultaneously replace variables in ``expr`` according to ``bindings``."""
    if not bindings:
        return expr
    return _subst(expr, bindings)


def _subst(e: Expr, b: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return b.get(e.name, e)
    if isinstance(e, (IntLit, RatLit, FormulaRef)):
        return e
    if isinstance(e, TypeAtom):
        hit = [n for n in e.names if n in b]
        if not hit:
            return e
        parts = []
        for n in e.names:
            target = b.get(n)
            if target is None:
                parts.append(TypeAtom((n,), e.typeset))
            elif isinstance(target, Var):
                parts.append(TypeAtom((target.name,), e.typeset))
            else:
                parts.append(_MemberOf(target, e.typeset))
        return conjunction(parts)
    if isinstance(e, ToReal):
        return ToReal(_subst(e.operand, b))
    if isinstance(e, Neg):
        return Neg(_subst(e.operand, b))
    if isinstance(e, BinOp):
        return BinOp(e.op, _subst(e.left, b), _subst(e.right, b))
    if isinstance(e, Compare):
        return Compare(e.op, _subst(e.left, b), _subst(e.right, b))
    if isinstance(e, And):
        return And(tuple(_subst(o, b) for o in e.operands))
    if isinstance(e, Not):
        return Not(_subst(e.operand, b))
    if isinstance(e, Ite):
        return Ite(_subst(e.cond, b), _subst(e.then, b), _subst(e.other, b))
    if isinstance(e, Assume):
        return Assume(_subst(e.cond, b), _subst(e.body, b))
    if isinstance(e, ProbChoice):
        return ProbChoice(_subst(e.prob, b), _subst(e.left, b), _subst(e.right, b))
    if isinstance(e, _MemberOf):
        return _MemberOf(_subst(e.operand, b), e.typeset)
    raise TypeError(f"cannot substitute into {e!r}")
