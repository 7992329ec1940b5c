import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pamn2prism.mdp import (
    SAFE, UNSAFE, ModelError, StateCapExceeded, backward_induction, build_mdp,
    check_expectations, extract_scheduler, min_instantaneous_reward, replay,
)
from pamn2prism.parser import parse_machine
from pamn2prism.report import check_structured, check_text, decimal_text, rational_text
from pamn2prism.translate import MAX_COUNT, translate
from pamn2prism.wp import StateBox, check_obligations

import machinegen
import oracles
from conftest import LIBRARY_CONSTANTS

HALF = Fraction(1, 2)


def test_initial_state(library_unsafe):
    mdp = build_mdp(translate(library_unsafe), {**LIBRARY_CONSTANTS, MAX_COUNT: 2})
    assert mdp.valuation(mdp.initial) == dict(
        booksLost=0, totalCost=0, loansEnded=0, loansStarted=0, booksInLibrary=1, count=0)


def test_zero_operations_chain():
    m = parse_machine("""MACHINE M VARIABLES x INVARIANT x : INT
EXPECTATIONS real(0) |=> x INITIALISATION x := 0 OPERATIONS END""")
    mdp = build_mdp(translate(m), {"BOUND": 1, MAX_COUNT: 1})
    assert len(mdp) == 3
    assert [c.action for cs in mdp.choices for c in cs] == ["", ""]


def test_demon_state_count_matches_enumerator(demon):
    model = translate(demon)
    env = {"BOUND": 3, MAX_COUNT: 2}
    assert len(build_mdp(model, env)) == len(oracles.ModelInterpreter(model, env).reachable())


def test_unsafe_library_values(library_unsafe):
    r = check_expectations(library_unsafe, LIBRARY_CONSTANTS, 2)
    assert r.values == [0, 0, 0, Fraction(-1, 4)]
    assert r.padded_values[3] == Fraction(7, 4)
    assert r.verdict == UNSAFE and r.first_violating_horizon == 3
    assert r.first_action == "StartLoan"


def test_safe_library_values(library_safe):
    r = check_expectations(library_safe, LIBRARY_CONSTANTS, 2)
    assert r.values == [0, 0, 0, 0]
    assert r.verdict == SAFE and r.scheduler is None


def test_demon_value(demon):
    r = check_expectations(demon, {"BOUND": 3}, 2)
    assert r.values[3] == -HALF


def test_horizon_zero(demon):
    r = check_expectations(demon, {"BOUND": 3}, 0)
    assert [k for k, _ in r.horizons] == [0, 1]
    assert r.values[0] == r.initial_value == 0


def test_scheduler_replays(library_unsafe):
    model = translate(library_unsafe)
    mdp = build_mdp(model, {**LIBRARY_CONSTANTS, MAX_COUNT: 2})
    tables = backward_induction(mdp, 3)
    sched = extract_scheduler(mdp, tables, 3)
    assert replay(mdp, sched) == Fraction(-1, 4)
    assert sched.action(mdp, mdp.initial, 3) == "StartLoan"
    with pytest.raises(ValueError):
        extract_scheduler(mdp, tables, 9)


def test_single_choice_scheduler():
    m = parse_machine("""MACHINE M VARIABLES x INVARIANT x : INT
EXPECTATIONS real(0) |=> x INITIALISATION x := 0 OPERATIONS END""")
    mdp = build_mdp(translate(m), {"BOUND": 1, MAX_COUNT: 1})
    sched = extract_scheduler(mdp, backward_induction(mdp, 2), 2)
    assert {mdp.choices[s][i].action for (s, _), i in sched.decisions.items()} == {""}


def test_tie_prefers_lower_command():
    m = parse_machine("""MACHINE M VARIABLES x INVARIANT x : INT
EXPECTATIONS real(0) |=> x INITIALISATION x := 0
OPERATIONS A = x := x ; B = x := x END""")
    mdp = build_mdp(translate(m), {"BOUND": 1, MAX_COUNT: 0})
    sched = extract_scheduler(mdp, backward_induction(mdp, 1), 1)
    assert sched.action(mdp, mdp.initial, 1) == "A"


def test_errors(library_unsafe, demon):
    model = translate(library_unsafe)
    with pytest.raises(ModelError, match="unbound"):
        build_mdp(model, {"totalBooks": 1, MAX_COUNT: 2})
    with pytest.raises(ModelError, match="integer"):
        build_mdp(model, {**LIBRARY_CONSTANTS, "totalBooks": HALF, MAX_COUNT: 2})
    with pytest.raises(StateCapExceeded):
        build_mdp(model, {**LIBRARY_CONSTANTS, MAX_COUNT: 2}, state_cap=5)
    # StockTake's cost * booksLost is not range-guarded; cost = 2 overflows totalCost
    with pytest.raises(ModelError, match="outside"):
        build_mdp(model, {**LIBRARY_CONSTANTS, "cost": 2, MAX_COUNT: 4})
    # the PROPERTIES formulas guard EndLoan, so an out-of-range pp merely disables it
    assert len(build_mdp(model, {**LIBRARY_CONSTANTS, "pp": 2, MAX_COUNT: 2})) < 12
    unguarded = parse_machine("""MACHINE M CONSTANTS p PROPERTIES p : REAL VARIABLES x
INVARIANT x : INT EXPECTATIONS real(0) |=> x INITIALISATION x := 0
OPERATIONS Op = PCHOICE p OF x := 1 OR x := 0 END END""")
    with pytest.raises(ModelError, match="probability"):
        build_mdp(translate(unguarded), {"p": 2, "BOUND": 1, MAX_COUNT: 1})
    r = check_expectations(library_unsafe, {**LIBRARY_CONSTANTS, "cost": 2}, 4, range_bound=2)
    assert r.verdict == UNSAFE


def test_min_reward_override(demon):
    mdp = build_mdp(translate(demon), {"BOUND": 2, MAX_COUNT: 1})
    values = min_instantaneous_reward(mdp, 2, xi=lambda s: -s["cc"])
    assert values[0] == (0, 0)


def test_probability_conservation_and_padding(library_unsafe):
    mdp = build_mdp(translate(library_unsafe), {"totalBooks": 2, "cost": 1, "pp": Fraction(1, 3), MAX_COUNT: 3})
    for cs in mdp.choices:
        for c in cs:
            assert sum(p for p, _ in c.outcomes) == 1 and all(p > 0 for p, _ in c.outcomes)
    r = check_expectations(library_unsafe, {"totalBooks": 2, "cost": 1, "pp": Fraction(1, 3)}, 3)
    assert [p - r.max_count for p in r.padded_values] == r.values


def test_theorem_contrapositive(demon, library_unsafe):
    for m, consts, bound in ((demon, {"BOUND": 3}, 3), (library_unsafe, LIBRARY_CONSTANTS, 1)):
        assert check_expectations(m, consts, 2).verdict == UNSAFE
        assert check_obligations(m, StateBox.for_machine(m, bound), consts).failing()


def test_report_renderings(library_unsafe):
    r = check_expectations(library_unsafe, LIBRARY_CONSTANTS, 2)
    doc = check_structured(r)
    json.dumps(doc)
    assert doc["schema_version"] == 1
    assert doc["horizons"][3]["value"] == {"exact": "-1/4", "decimal": "-0.25"}
    assert doc["horizons"][3]["padded"]["exact"] == "7/4"
    assert doc["scheduler"][0]["action"] == "StartLoan"
    text = check_text(r)
    assert "verdict: UNSAFE" in text and "first_violating_horizon: 3" in text
    assert rational_text(Fraction(2, 6)) == "1/3" and decimal_text(Fraction(1, 3)) == "0.333333333333"


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_random_machines_monotone_and_oracle(data):
    m = machinegen.machine(machinegen.DrawSource(data))
    bound = data.draw(st.integers(1, 2))
    max_count = data.draw(st.integers(0, 2))
    model = translate(m)
    env = {"BOUND": bound, MAX_COUNT: max_count}
    mdp = build_mdp(model, env)
    tables = backward_induction(mdp, max_count + 1)
    values = [w for _, w in tables.horizons]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert values == oracles.brute_force_min(model, env, max_count + 1)
    k = len(values) - 1
    assert replay(mdp, extract_scheduler(mdp, tables, k)) == values[k]
