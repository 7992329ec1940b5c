"""Expectation-transformer semantics evaluated pointwise, and the
probabilistic proof obligations checked by exhaustive enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from . import ast as A
from .normal import normalize, transform

DEFAULT_WITNESS_CAP = 10


@dataclass(frozen=True)
class StateBox:
    """Finite box of integer valuations, iterated in declaration order."""

    bounds: Tuple[Tuple[str, int, int], ...]

    def __post_init__(self):
        for name, lo, hi in self.bounds:
            if lo > hi:
                raise ValueError(f"empty range for {name}: [{lo}, {hi}]")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(b[0] for b in self.bounds)

    def __len__(self) -> int:
        n = 1
        for _, lo, hi in self.bounds:
            n *= hi - lo + 1
        return n

    def __iter__(self) -> Iterator[Dict[str, int]]:
        names = self.names
        ranges = [range(lo, hi + 1) for _, lo, hi in self.bounds]
        for values in itertools.product(*ranges):
            yield dict(zip(names, values))

    def __contains__(self, state: Mapping[str, int]) -> bool:
        return all(lo <= state[n] <= hi for n, lo, hi in self.bounds)

    @classmethod
    def for_machine(cls, machine: A.Machine, bound: int) -> "StateBox":
        """INT variables range over [-bound, bound], NATURAL ones over [0, bound].

        Output parameters are not part of the box: no expectation may read them.
        """
        typing = machine.typing()
        rows = []
        for v in machine.variables:
            ts = typing.get(v, "INT")
            lo = 0 if ts in A.NATURAL_SETS else -bound
            rows.append((v, lo, bound))
        return cls(tuple(rows))


def wp(sub: A.Substitution, post: A.Expr, outputs: Sequence[str] = ()) -> A.Expr:
    """The pre-expectation ``wp.sub.post`` as an expression over the pre-state."""
    return transform(normalize(sub, outputs), post)


def wp_eval(sub: A.Substitution, post: A.Expr, state: Mapping[str, A.Value],
            outputs: Sequence[str] = ()) -> A.Number:
    """Evaluate ``wp.sub.post`` at ``state``.

    ``state`` must also bind any constants the expressions mention.  Raises
    :class:`~pamn2prism.ast.PreconditionViolated` when a precondition of
    ``sub`` does not hold there.
    """
    value = A.evaluate(wp(sub, post, outputs), state)
    if isinstance(value, bool):
        raise A.EvaluationError("expectation evaluated to a boolean")
    return value


def expected_value(dist: Iterable[Tuple[Mapping[str, A.Value], A.Number]], rv: A.Expr,
                   constants: Optional[Mapping[str, A.Value]] = None) -> A.Number:
    """Sum of ``rv(s) * p`` over a sub-distribution given as (state, p) pairs."""
    total: A.Number = 0
    mass: A.Number = 0
    for state, p in dist:
        if p < 0:
            raise ValueError(f"negative probability {p}")
        mass += p
        if mass > 1:
            raise ValueError("probability mass exceeds 1")
        env = dict(constants or {})
        env.update(state)
        total += A.evaluate(rv, env) * Fraction(p)
    return A.normalize(Fraction(total))


@dataclass(frozen=True)
class Witness:
    state: Dict[str, int]
    lhs: A.Number
    rhs: A.Number


@dataclass(frozen=True)
class InitCheck:
    initial: A.Number
    wp_init: A.Number
    holds: bool


@dataclass(frozen=True)
class ObligationReport:
    operation: str
    holds: bool
    witnesses: Tuple[Witness, ...]
    checked_states: int
    failing_states: int

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "fails"


@dataclass(frozen=True)
class ObligationSummary:
    machine: str
    box: StateBox
    constants: Dict[str, A.Value]
    init: InitCheck
    reports: Tuple[ObligationReport, ...] = field(default=())

    @property
    def holds(self) -> bool:
        return self.init.holds and all(r.holds for r in self.reports)

    def failing(self) -> List[str]:
        return [r.operation for r in self.reports if not r.holds]

    def __iter__(self):
        return iter(self.reports)


def invariant_filter(machine: A.Machine) -> A.Expr:
    """INVARIANT conjuncts other than typing atoms; the box enforces those."""
    return A.conjunction([c for c in A.conjuncts(machine.invariant) if not isinstance(c, A.TypeAtom)])


def check_obligations(machine: A.Machine, box: StateBox,
                      constants: Optional[Mapping[str, A.Value]] = None,
                      witness_cap: int = DEFAULT_WITNESS_CAP) -> ObligationSummary:
    """Check ``xi <= wp.Op.xi`` on the box for every operation, and ``e <= wp.INIT.xi``.

    States violating an operation's precondition, or the non-typing part of
    the INVARIANT, are not checked.
    """
    constants = dict(constants or {})
    xi = machine.random_variable
    e_value = A.evaluate(machine.initial_expr, constants)

    init_expr = wp(machine.initialisation, xi)
    if A.free_identifiers(init_expr) <= set(constants):
        init_values = [A.evaluate(init_expr, constants)]
    else:
        init_values = [A.evaluate(init_expr, {**constants, **s}) for s in box]
    worst_init = min(init_values)
    init = InitCheck(e_value, worst_init, e_value <= worst_init)

    inv = invariant_filter(machine)
    states = [s for s in box if A.evaluate(inv, {**constants, **s})]

    reports = []
    for op in machine.operations:
        pre_expectation = wp(op.body, xi, op.outputs)
        witnesses: List[Witness] = []
        checked = failing = 0
        for s in states:
            env = {**constants, **s}
            try:
                rhs = A.evaluate(pre_expectation, env)
            except A.PreconditionViolated:
                continue
            checked += 1
            lhs = A.evaluate(xi, env)
            if lhs > rhs:
                failing += 1
                if len(witnesses) < witness_cap:
                    witnesses.append(Witness(dict(s), lhs, rhs))
        reports.append(ObligationReport(op.name, failing == 0, tuple(witnesses), checked, failing))
    return ObligationSummary(machine.name, box, constants, init, tuple(reports))
