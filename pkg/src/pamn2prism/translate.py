"""Translation of a pAMN machine into a PRISM MDP model.

The model carries a main module named after the machine, a ``Counter``
module that numbers the steps, an ``"expectations"`` label, and a reward
structure worth ``xi + MAX_COUNT`` once the counter saturates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import ast as A
from .linear import implies, linearize
from .normal import Choice, Cond, Guard, Leaf, Tree, UnsupportedConstruct, normalize

MAX_COUNT = "MAX_COUNT"
COUNT = "count"
BOUND = "BOUND"
COUNTER_MODULE = "Counter"
EXPECTATIONS_LABEL = "expectations"
RESERVED = (MAX_COUNT, COUNT)


class TranslationError(Exception):
    pass


@dataclass(frozen=True)
class ConstantDecl:
    name: str
    ctype: Optional[str] = None  # None means PRISM's default int
    value: Optional[A.Expr] = None

    @property
    def undefined(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class FormulaDef:
    name: str
    predicate: A.Expr

    @property
    def free_identifiers(self) -> frozenset:
        return A.free_identifiers(self.predicate)


@dataclass(frozen=True)
class VarDecl:
    name: str
    low: A.Expr
    high: A.Expr
    init: A.Expr


@dataclass(frozen=True)
class Branch:
    """``prob : (v1' = e1) & ...``; ``prob`` is None for a certain update."""

    prob: Optional[A.Expr]
    updates: Tuple[Tuple[str, A.Expr], ...]


@dataclass(frozen=True)
class GuardedCommand:
    action: str  # "" for the unsynchronised command
    guard: Tuple[A.Expr, ...]  # conjuncts, in emission order
    branches: Tuple[Branch, ...]

    @property
    def guard_expr(self) -> A.Expr:
        return A.conjunction(self.guard) if self.guard else A.TRUE


@dataclass(frozen=True)
class Module:
    name: str
    variables: Tuple[VarDecl, ...]
    commands: Tuple[GuardedCommand, ...]


@dataclass(frozen=True)
class RewardItem:
    guard: A.Expr
    reward: A.Expr  # unpadded random variable
    padding: A.Expr

    @property
    def value(self) -> A.Expr:
        return A.BinOp("+", self.reward, self.padding)


@dataclass(frozen=True)
class PrismModel:
    model_type: str
    constants: Tuple[ConstantDecl, ...]
    formulas: Tuple[FormulaDef, ...]
    main: Module
    label: A.Expr
    counter: Module
    rewards: Tuple[RewardItem, ...]
    random_variable: A.Expr
    initial_expr: A.Expr
    bound_constant: Optional[str] = None
    integer_symbols: frozenset = field(default=frozenset(), compare=False)

    @property
    def modules(self) -> Tuple[Module, Module]:
        return (self.main, self.counter)

    def formula_map(self) -> Dict[str, A.Expr]:
        return {f.name: f.predicate for f in self.formulas}

    def actions(self) -> Tuple[str, ...]:
        return tuple(main_actions(self.main.commands))

    def undefined_constants(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.constants if c.undefined)


# --------------------------------------------------------------------------
# Formula selection


def _statements(sub: A.Substitution) -> List[frozenset]:
    """Identifier sets of the update statements of ``sub`` in textual order.

    A PCHOICE contributes its probability before the first branch and the
    complementary probability before the second.  Preconditions and IF
    conditions are guards, not update statements.
    """
    if isinstance(sub, A.Assign):
        return [frozenset({t}) | A.free_identifiers(v) for t, v in zip(sub.targets, sub.values)]
    if isinstance(sub, (A.Parallel, A.Sequence)):
        out: List[frozenset] = []
        for p in sub.parts:
            out.extend(_statements(p))
        return out
    if isinstance(sub, (A.Pre, A.Block)):
        return _statements(sub.body)
    if isinstance(sub, A.PChoice):
        prob = A.free_identifiers(sub.prob)
        return [prob] + _statements(sub.left) + [prob] + _statements(sub.right)
    if isinstance(sub, A.If):
        return _statements(sub.left) + _statements(sub.right)
    return []


def formula_selection(operation: A.Operation, formulas: Sequence[FormulaDef]) -> List[FormulaDef]:
    """Formulas strengthening the guard of ``operation``'s command.

    Every formula sharing an identifier with the operation (guards,
    probabilities and updates) is selected.  Ordering: each update statement
    in turn claims the lowest-numbered unclaimed formula it depends on; the
    remaining formulas follow in number order.
    """
    chosen: List[FormulaDef] = []
    for ids in _statements(operation.body):
        for f in formulas:
            if f not in chosen and f.free_identifiers & ids:
                chosen.append(f)
                break
    touched = A.substitution_identifiers(operation.body)
    for f in formulas:
        if f not in chosen and f.free_identifiers & touched:
            chosen.append(f)
    return chosen


# --------------------------------------------------------------------------
# Range guards


@dataclass(frozen=True)
class _Range:
    low: A.Expr
    high: A.Expr


def range_guards(command: GuardedCommand, ranges: Dict[str, _Range],
                 premises: Sequence[A.Expr] = (), integers: frozenset = frozenset()) -> Tuple[A.Expr, ...]:
    """Conjuncts keeping every linear update of ``command`` inside its variable's range.

    A conjunct is omitted when the command guard, ``premises`` (typically the
    selected formulas' bodies) and the declared ranges already imply it.
    Updates whose right-hand side is non-linear are not guarded.
    """
    base = list(premises) + list(command.guard)
    for v, r in ranges.items():
        base.append(A.Compare("<=", r.low, A.Var(v)))
        base.append(A.Compare("<=", A.Var(v), r.high))
    emitted: List[A.Expr] = []
    for branch in command.branches:
        for v, rhs in branch.updates:
            if linearize(rhs) is None:
                continue
            r = ranges[v]
            for candidate in (A.Compare("<=", rhs, r.high), A.Compare(">=", rhs, r.low)):
                if candidate in emitted:
                    continue
                if not implies(base + emitted, candidate, integers):
                    emitted.append(candidate)
    return tuple(emitted)


# --------------------------------------------------------------------------
# Commands


def _probabilistic_branches(tree: Tree) -> List[Tuple[Optional[A.Expr], Dict[str, A.Expr]]]:
    if isinstance(tree, Leaf):
        return [(None, tree.as_dict())]
    if isinstance(tree, Choice):
        out = []
        for weight, sub in ((tree.prob, tree.left), (A.BinOp("-", A.IntLit(1), tree.prob), tree.right)):
            for p, updates in _probabilistic_branches(sub):
                out.append((weight if p is None else A.BinOp("*", weight, p), updates))
        return out
    raise UnsupportedConstruct("preconditions and conditionals must not occur inside a PCHOICE branch")


def _commands_of(tree: Tree, guard: Tuple[A.Expr, ...] = ()) -> List[Tuple[Tuple[A.Expr, ...], List]]:
    if isinstance(tree, Guard):
        return _commands_of(tree.body, guard + A.conjuncts(tree.cond))
    if isinstance(tree, Cond):
        return _commands_of(tree.then, guard + A.conjuncts(tree.cond)) + _commands_of(tree.other, guard + (A.Not(tree.cond),))
    return [(guard, _probabilistic_branches(tree))]


# --------------------------------------------------------------------------
# Algorithm


def translate(machine: A.Machine, range_bound: Optional[int] = None) -> PrismModel:
    """Translate ``machine`` into a :class:`PrismModel`.

    Variable upper bounds come from the first machine parameter, or from a
    synthesised ``BOUND`` constant when there are no parameters.
    ``range_bound`` replaces that bound by a literal.
    """
    for name in RESERVED:
        if name in machine.state_variables() + machine.params + machine.constants:
            raise TranslationError(f"'{name}' is reserved")
    typing = machine.typing()

    constants = []
    for name in machine.params + machine.constants:
        constants.append(ConstantDecl(name, "double" if typing.get(name) == "REAL" else None))
    bound_constant: Optional[str] = None
    if range_bound is not None:
        bound: A.Expr = A.IntLit(range_bound)
    elif machine.params:
        bound_constant = machine.params[0]
        bound = A.Var(bound_constant)
    else:
        bound_constant = BOUND
        constants.append(ConstantDecl(BOUND))
        bound = A.Var(BOUND)
    constants.append(ConstantDecl(MAX_COUNT))

    atoms = [c for c in A.conjuncts(machine.invariant) + A.conjuncts(machine.properties)
             if not isinstance(c, A.TypeAtom)]
    formulas = [FormulaDef(f"formula{i}", atom) for i, atom in enumerate(atoms)]

    init_tree = normalize(machine.initialisation)
    if not isinstance(init_tree, Leaf):
        raise TranslationError("INITIALISATION must be a deterministic, unguarded substitution")
    init_values = init_tree.as_dict()
    const_names = set(machine.params) | set(machine.constants)
    ranges: Dict[str, _Range] = {}
    decls = []
    for v in machine.state_variables():
        ts = typing.get(v)
        if ts is None and v in machine.variables:
            raise TranslationError(f"variable '{v}' has no typing atom")
        low = A.IntLit(0) if ts in A.NATURAL_SETS else A.Neg(bound)
        init = init_values.get(v)
        if init is None:
            if v in machine.variables:
                raise TranslationError(f"variable '{v}' is not initialised")
            init = A.IntLit(0)
        if not A.free_identifiers(init) <= const_names:
            raise TranslationError(f"initial value of '{v}' must be constant")
        ranges[v] = _Range(low, bound)
        decls.append(VarDecl(v, low, bound, init))

    integers = frozenset(
        [v for v in machine.state_variables()]
        + [c.name for c in constants if c.ctype is None]
    )
    formula_bodies = {f.name: f.predicate for f in formulas}

    commands = []
    for op in machine.operations:
        try:
            tree = normalize(op.body, op.outputs)
            split = _commands_of(tree)
        except UnsupportedConstruct as exc:
            raise TranslationError(f"operation {op.name}: {exc}") from None
        selected = formula_selection(op, formulas)
        refs = tuple(A.FormulaRef(f.name) for f in selected)
        premises = [formula_bodies[f.name] for f in selected]
        for pre, branches in split:
            for p, _ in branches:
                if p is not None and not A.free_identifiers(p) <= const_names:
                    raise TranslationError(f"operation {op.name}: probability must be constant")
            cmd = GuardedCommand(
                op.name,
                pre + refs,
                tuple(Branch(p, tuple(u.items())) for p, u in branches),
            )
            extra = range_guards(cmd, ranges, premises, integers)
            commands.append(GuardedCommand(op.name, cmd.guard + extra, cmd.branches))
    main = Module(machine.name, tuple(decls), tuple(commands))

    xi = machine.random_variable
    label = A.Compare(">=", xi, machine.initial_expr)

    max_count = A.Var(MAX_COUNT)
    count = A.Var(COUNT)
    saturation = A.BinOp("+", max_count, A.IntLit(1))
    step_guard = (A.Compare("<=", A.BinOp("+", count, A.IntLit(1)), saturation),)
    step = (Branch(None, ((COUNT, A.BinOp("+", count, A.IntLit(1))),)),)
    counter_cmds = [GuardedCommand(a, step_guard, step) for a in main_actions(commands)]
    counter_cmds.append(GuardedCommand("", step_guard, step))
    counter = Module(COUNTER_MODULE, (VarDecl(COUNT, A.IntLit(0), saturation, A.IntLit(0)),), tuple(counter_cmds))

    rewards = (RewardItem(A.Compare("=", count, saturation), xi, max_count),)
    return PrismModel(
        "mdp", tuple(constants), tuple(formulas), main, label, counter, rewards,
        xi, machine.initial_expr, bound_constant, integers | {COUNT, MAX_COUNT},
    )


def main_actions(commands: Sequence[GuardedCommand]) -> List[str]:
    seen: List[str] = []
    for c in commands:
        if c.action not in seen:
            seen.append(c.action)
    return seen
