"""Exact bounded model checking of translated models.

The reachable MDP of a :class:`~pamn2prism.translate.PrismModel` is built
under concrete constants, then the minimal expected value of the random
variable after ``k`` steps is computed by backward induction over
time-dependent policies.  All arithmetic is exact.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import ast as A
from .translate import COUNT, MAX_COUNT, GuardedCommand, PrismModel, translate

DEFAULT_STATE_CAP = 10 ** 7
SAFE = "SAFE-UP-TO-BOUND"
UNSAFE = "UNSAFE"
IDLE = ""

State = Tuple[int, ...]


class ModelError(Exception):
    """The model cannot be explored: bad constants, range or probability errors."""


class StateCapExceeded(ModelError):
    pass


class NoViolation(ValueError):
    pass


# --------------------------------------------------------------------------
# Expression compilation: closures over a state tuple


def _compile(e: A.Expr, slots: Mapping[str, int], consts: Mapping[str, A.Value],
             formulas: Mapping[str, A.Expr]) -> Callable[[State], A.Value]:
    if isinstance(e, A.Var):
        if e.name in slots:
            i = slots[e.name]
            return lambda s: s[i]
        if e.name in consts:
            v = consts[e.name]
            return lambda s: v
        raise ModelError(f"unbound identifier '{e.name}'")
    if isinstance(e, (A.IntLit, A.RatLit)):
        v = A.normalize(e.value)
        return lambda s: v
    if isinstance(e, A.ToReal):
        return _compile(e.operand, slots, consts, formulas)
    if isinstance(e, A.FormulaRef):
        if e.name not in formulas:
            raise ModelError(f"unknown formula '{e.name}'")
        return _compile(formulas[e.name], slots, consts, formulas)
    sub = [_compile(c, slots, consts, formulas) for c in _children(e)]
    if isinstance(e, A.Neg):
        (f,) = sub
        return lambda s: -f(s)
    if isinstance(e, A.BinOp):
        f, g = sub
        if e.op == "+":
            return lambda s: f(s) + g(s)
        if e.op == "-":
            return lambda s: f(s) - g(s)
        return lambda s: f(s) * g(s)
    if isinstance(e, A.Compare):
        f, g = sub
        return {
            "<": lambda s: f(s) < g(s),
            "<=": lambda s: f(s) <= g(s),
            "=": lambda s: f(s) == g(s),
            ">=": lambda s: f(s) >= g(s),
            ">": lambda s: f(s) > g(s),
        }[e.op]
    if isinstance(e, A.And):
        return lambda s: all(f(s) for f in sub)
    if isinstance(e, A.Not):
        (f,) = sub
        return lambda s: not f(s)
    raise ModelError(f"unsupported expression in model: {e!r}")


def _children(e: A.Expr) -> Tuple[A.Expr, ...]:
    if isinstance(e, A.Neg):
        return (e.operand,)
    if isinstance(e, (A.BinOp, A.Compare)):
        return (e.left, e.right)
    if isinstance(e, A.And):
        return e.operands
    if isinstance(e, A.Not):
        return (e.operand,)
    return ()


# --------------------------------------------------------------------------
# Reachable MDP


@dataclass(frozen=True)
class TransitionChoice:
    action: str  # IDLE for the counter's unsynchronised step
    outcomes: Tuple[Tuple[A.Number, int], ...]  # (probability, successor index)
    command: int  # index of the main command, len(commands) for idle


@dataclass(frozen=True)
class ReachableMdp:
    variables: Tuple[str, ...]  # slot order; ``count`` is last
    states: Tuple[State, ...]
    choices: Tuple[Tuple[TransitionChoice, ...], ...]
    initial: int
    reward: Tuple[A.Number, ...]  # unpadded xi per state
    max_count: int
    index: Dict[State, int] = field(compare=False, repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    def valuation(self, i: int) -> Dict[str, int]:
        return dict(zip(self.variables, self.states[i]))

    def absorbing(self, i: int) -> bool:
        return not self.choices[i]


def _bind_constants(model: PrismModel, constants: Mapping[str, A.Value]) -> Dict[str, A.Value]:
    env: Dict[str, A.Value] = {}
    missing = [n for n in model.undefined_constants() if n not in constants]
    if missing:
        raise ModelError(f"unbound constants: {', '.join(missing)}")
    known = {c.name for c in model.constants}
    for name in constants:
        if name not in known:
            raise ModelError(f"'{name}' is not a constant of the model")
    for c in model.constants:
        value = constants[c.name] if c.undefined else A.evaluate(c.value, env)
        if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
            raise ModelError(f"constant {c.name} must be a number")
        value = A.normalize(Fraction(value))
        if c.ctype is None and not isinstance(value, int):
            raise ModelError(f"constant {c.name} must be an integer, got {value}")
        env[c.name] = value
    if env[MAX_COUNT] < 0:
        raise ModelError("MAX_COUNT must be non-negative")
    return env


@dataclass(frozen=True)
class _Compiled:
    action: str
    guard: Callable[[State], bool]
    branches: Tuple[Tuple[Callable, Tuple[Tuple[int, Callable], ...]], ...]


def _compile_command(cmd: GuardedCommand, slots, consts, formulas) -> _Compiled:
    guard = _compile(cmd.guard_expr, slots, consts, formulas)
    branches = []
    for b in cmd.branches:
        prob = _compile(b.prob, slots, consts, formulas) if b.prob is not None else (lambda s: 1)
        ups = tuple((slots[v], _compile(e, slots, consts, formulas)) for v, e in b.updates)
        branches.append((prob, ups))
    return _Compiled(cmd.action, guard, tuple(branches))


def build_mdp(model: PrismModel, constants: Mapping[str, A.Value],
              state_cap: int = DEFAULT_STATE_CAP) -> ReachableMdp:
    """Breadth-first closure of the model's MDP from its initial state.

    A choice is a main command synchronised with the counter command of the
    same action, or the counter's idle step.  States where the counter is
    saturated have no choices.
    """
    consts = _bind_constants(model, constants)
    formulas = model.formula_map()
    decls = model.main.variables + model.counter.variables
    variables = tuple(d.name for d in decls)
    slots = {v: i for i, v in enumerate(variables)}
    lows, highs, init = [], [], []
    for d in decls:
        lo, hi, v0 = (A.evaluate(x, consts) for x in (d.low, d.high, d.init))
        if not all(isinstance(x, int) for x in (lo, hi, v0)):
            raise ModelError(f"range of {d.name} is not integral")
        if lo > hi or not lo <= v0 <= hi:
            raise ModelError(f"initial value {v0} of {d.name} outside [{lo}..{hi}]")
        lows.append(lo)
        highs.append(hi)
        init.append(v0)

    main = [_compile_command(c, slots, consts, formulas) for c in model.main.commands]
    counter = {}
    idle = None
    for c in model.counter.commands:
        compiled = _compile_command(c, slots, consts, formulas)
        if c.action == IDLE:
            idle = compiled
        else:
            counter[c.action] = compiled
    saturated = consts[MAX_COUNT] + 1
    count_slot = slots[COUNT]
    xi = _compile(model.random_variable, slots, consts, formulas)

    def successors(s: State, parts: Sequence[_Compiled]) -> List[Tuple[A.Number, State]]:
        # Product of the synchronising modules' branches.
        combos: List[Tuple[A.Number, List[Tuple[int, Callable]]]] = [(1, [])]
        for part in parts:
            nxt = []
            for p, ups in combos:
                for prob, pups in part.branches:
                    q = prob(s)
                    if isinstance(q, bool) or not 0 <= q <= 1:
                        raise ModelError(f"probability {q} outside [0, 1] in [{part.action}]")
                    nxt.append((p * q, ups + list(pups)))
            combos = nxt
        total = sum(p for p, _ in combos)
        if total != 1:
            raise ModelError(f"probabilities of [{parts[0].action}] sum to {total} at {s}")
        out = []
        for p, ups in combos:
            if p == 0:
                continue
            t = list(s)
            for i, f in ups:
                t[i] = A.normalize(Fraction(f(s)))
            for i, v in enumerate(t):
                if not isinstance(v, int) or not lows[i] <= v <= highs[i]:
                    raise ModelError(
                        f"[{parts[0].action}] drives {variables[i]} to {v} outside "
                        f"[{lows[i]}..{highs[i]}] from {dict(zip(variables, s))}"
                    )
            out.append((A.normalize(Fraction(p)), tuple(t)))
        return out

    start: State = tuple(init)
    index: Dict[State, int] = {start: 0}
    states: List[State] = [start]
    choices: List[Tuple[TransitionChoice, ...]] = []
    queue = deque([start])
    while queue:
        s = queue.popleft()
        here: List[TransitionChoice] = []
        if s[count_slot] < saturated:
            enabled = []
            for ci, cmd in enumerate(main):
                partner = counter.get(cmd.action) if cmd.action else None
                if cmd.action and partner is None:
                    continue
                if cmd.guard(s) and (partner is None or partner.guard(s)):
                    enabled.append((ci, cmd.action, [cmd] + ([partner] if partner else [])))
            if idle is not None and idle.guard(s):
                enabled.append((len(main), IDLE, [idle]))
            for ci, action, parts in enabled:
                merged: Dict[State, A.Number] = {}
                for p, t in successors(s, parts):
                    merged[t] = merged.get(t, 0) + p
                outcomes = []
                for t, p in merged.items():
                    if t not in index:
                        if len(states) >= state_cap:
                            raise StateCapExceeded(f"more than {state_cap} reachable states")
                        index[t] = len(states)
                        states.append(t)
                        queue.append(t)
                    outcomes.append((A.normalize(Fraction(p)), index[t]))
                here.append(TransitionChoice(action, tuple(outcomes), ci))
        choices.append(tuple(here))
    reward = tuple(A.normalize(Fraction(xi(s))) for s in states)
    return ReachableMdp(variables, tuple(states), tuple(choices), 0, reward,
                        consts[MAX_COUNT], index)


# --------------------------------------------------------------------------
# Backward induction


@dataclass(frozen=True)
class InductionTables:
    """``values[j][s]`` is V_j(s); ``policy[j][s]`` the choice index attaining it (None when absorbing)."""

    values: Tuple[Tuple[A.Number, ...], ...]
    policy: Tuple[Tuple[Optional[int], ...], ...]
    initial: int

    @property
    def horizons(self) -> List[Tuple[int, A.Number]]:
        return [(k, v[self.initial]) for k, v in enumerate(self.values)]


def backward_induction(mdp: ReachableMdp, horizon_max: int,
                       reward: Optional[Sequence[A.Number]] = None) -> InductionTables:
    if horizon_max < 0:
        raise ValueError("horizon must be non-negative")
    current = tuple(mdp.reward if reward is None else reward)
    values = [current]
    policy: List[Tuple[Optional[int], ...]] = [tuple(None for _ in mdp.states)]
    for _ in range(horizon_max):
        nxt: List[A.Number] = []
        chosen: List[Optional[int]] = []
        for cs, v in zip(mdp.choices, current):
            if not cs:
                nxt.append(v)
                chosen.append(None)
                continue
            best = None
            arg = 0
            for i, c in enumerate(cs):
                total = sum(p * current[t] for p, t in c.outcomes)
                if best is None or total < best:
                    best, arg = total, i
            nxt.append(A.normalize(Fraction(best)))
            chosen.append(arg)
        current = tuple(nxt)
        values.append(current)
        policy.append(tuple(chosen))
    return InductionTables(tuple(values), tuple(policy), mdp.initial)


def min_instantaneous_reward(mdp: ReachableMdp, horizon_max: int,
                             xi: Optional[Callable[[Dict[str, int]], A.Number]] = None
                             ) -> List[Tuple[int, A.Number]]:
    """``[(k, W_k)]`` for ``k = 0..horizon_max``; ``xi`` overrides the model's random variable."""
    reward = None
    if xi is not None:
        reward = [xi(mdp.valuation(i)) for i in range(len(mdp))]
    return backward_induction(mdp, horizon_max, reward).horizons


# --------------------------------------------------------------------------
# Schedulers


@dataclass(frozen=True)
class Scheduler:
    """Deterministic time-dependent policy: (state index, steps remaining) -> choice index."""

    horizon: int
    decisions: Dict[Tuple[int, int], int]

    def action(self, mdp: ReachableMdp, state: int, steps: int) -> str:
        return mdp.choices[state][self.decisions[(state, steps)]].action

    def table(self, mdp: ReachableMdp) -> List[Tuple[Dict[str, int], int, str]]:
        """Rows (valuation, steps remaining, action), most steps first, then by state index."""
        keys = sorted(self.decisions, key=lambda k: (-k[1], k[0]))
        return [(mdp.valuation(s), n, self.action(mdp, s, n)) for s, n in keys]


def extract_scheduler(mdp: ReachableMdp, tables: InductionTables, horizon: int) -> Scheduler:
    """The minimising policy for ``horizon``, restricted to the states it visits."""
    if not 0 <= horizon < len(tables.values):
        raise ValueError(f"horizon {horizon} not computed")
    decisions: Dict[Tuple[int, int], int] = {}
    frontier = {mdp.initial}
    for steps in range(horizon, 0, -1):
        nxt = set()
        for s in sorted(frontier):
            i = tables.policy[steps][s]
            if i is None:
                nxt.add(s)
                continue
            decisions[(s, steps)] = i
            nxt.update(t for _, t in mdp.choices[s][i].outcomes)
        frontier = nxt
    return Scheduler(horizon, decisions)


def replay(mdp: ReachableMdp, scheduler: Scheduler) -> A.Number:
    """Expected reward after following ``scheduler`` forward for its horizon."""
    dist: Dict[int, A.Number] = {mdp.initial: 1}
    for steps in range(scheduler.horizon, 0, -1):
        nxt: Dict[int, A.Number] = {}
        for s, p in dist.items():
            if mdp.absorbing(s):
                nxt[s] = nxt.get(s, 0) + p
                continue
            choice = mdp.choices[s][scheduler.decisions[(s, steps)]]
            for q, t in choice.outcomes:
                nxt[t] = nxt.get(t, 0) + p * q
        dist = nxt
    return A.normalize(Fraction(sum(p * mdp.reward[s] for s, p in dist.items())))


# --------------------------------------------------------------------------
# Checking


@dataclass(frozen=True)
class CheckReport:
    machine: str
    constants: Dict[str, A.Value]
    max_count: int
    initial_value: A.Number  # e
    horizons: Tuple[Tuple[int, A.Number], ...]
    states: int
    first_violating_horizon: Optional[int] = None
    scheduler: Optional[List[Tuple[Dict[str, int], int, str]]] = None

    @property
    def verdict(self) -> str:
        return UNSAFE if self.first_violating_horizon is not None else SAFE

    @property
    def values(self) -> List[A.Number]:
        return [w for _, w in self.horizons]

    @property
    def padded_values(self) -> List[A.Number]:
        return [A.normalize(Fraction(w) + self.max_count) for w in self.values]

    @property
    def first_action(self) -> Optional[str]:
        return self.scheduler[0][2] if self.scheduler else None


def check_model(model: PrismModel, constants: Mapping[str, A.Value], name: str = "",
                state_cap: int = DEFAULT_STATE_CAP) -> CheckReport:
    mdp = build_mdp(model, constants, state_cap)
    consts = _bind_constants(model, constants)
    e = A.evaluate(model.initial_expr, consts)
    tables = backward_induction(mdp, mdp.max_count + 1)
    horizons = tables.horizons
    bad = next((k for k, w in horizons if w < e), None)
    sched = None
    if bad is not None:
        sched = extract_scheduler(mdp, tables, bad).table(mdp)
    return CheckReport(name or model.main.name, dict(constants), mdp.max_count, e,
                       tuple(horizons), len(mdp), bad, sched)


def check_expectations(machine: A.Machine, constants: Mapping[str, A.Value], max_count: int,
                       range_bound: Optional[int] = None,
                       state_cap: int = DEFAULT_STATE_CAP) -> CheckReport:
    """Translate ``machine`` and check ``W_k >= e`` for every horizon up to ``max_count + 1``.

    ``constants`` binds the machine's parameters and constants (and ``BOUND``
    when the model synthesises it); ``max_count`` is supplied separately.
    """
    if max_count < 0:
        raise ValueError("max_count must be non-negative")
    model = translate(machine, range_bound)
    bound = dict(constants)
    bound[MAX_COUNT] = max_count
    return check_model(model, bound, machine.name, state_cap)
