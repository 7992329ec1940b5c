"""Acceptance criteria, one test each, all at exact tolerance.

Run ``pytest tests/test_acceptance.py`` (a PASS/FAIL line per criterion is
printed in the terminal summary) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pamn2prism import ast as A  # noqa: E402
from pamn2prism import example_path, load_example  # noqa: E402
from pamn2prism.cli import main as cli_main  # noqa: E402
from pamn2prism.mdp import SAFE, UNSAFE, backward_induction, build_mdp, check_expectations  # noqa: E402
from pamn2prism.parser import check_machine  # noqa: E402
from pamn2prism.prism import emit  # noqa: E402
from pamn2prism.translate import MAX_COUNT, translate  # noqa: E402
from pamn2prism.wp import StateBox, check_obligations, expected_value  # noqa: E402

import machinegen  # noqa: E402
import oracles  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
HALF = Fraction(1, 2)
LIBRARY = {"totalBooks": 1, "cost": 1, "pp": HALF}
RESULTS: dict = {}


def record(n: int, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    ok = ok and elapsed < limit
    RESULTS[n] = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    assert ok, RESULTS[n]


def test_criterion_1_unsafe_library():
    t = time.perf_counter()
    r = check_expectations(load_example("library_unsafe"), LIBRARY, 2)
    w3 = dict(r.horizons)[3]
    ok = w3 == Fraction(-1, 4) and r.verdict == UNSAFE and r.first_violating_horizon == 3
    record(1, "unsafe library", ok,
           f"W_3 = {w3}, verdict {r.verdict}, first violation k={r.first_violating_horizon}",
           time.perf_counter() - t, 1)


def test_criterion_2_safe_library():
    t = time.perf_counter()
    m = load_example("library_safe")
    base = check_expectations(m, LIBRARY, 2)
    ok = base.verdict == SAFE and all(w >= 0 for w in base.values) and len(base.values) == 4
    worst = min(base.values)
    runs = 0
    for books in (1, 2, 3):
        for max_count in range(6):
            r = check_expectations(m, {**LIBRARY, "totalBooks": books}, max_count)
            ok = ok and r.verdict == SAFE and all(w >= 0 for w in r.values)
            worst = min(worst, min(r.values))
            runs += 1
    record(2, "safe library", ok,
           f"W_0..W_3 = {[str(w) for w in base.values]}, min W over {runs} further runs = {worst}",
           time.perf_counter() - t, 5)


def test_criterion_3_demon_obligations():
    t = time.perf_counter()
    m = load_example("demon")
    s = check_obligations(m, StateBox.for_machine(m, 3))
    opx, opy = s.reports
    first = opy.witnesses[0] if opy.witnesses else None
    ok = (s.init.holds and opx.holds and not opy.holds and first is not None
          and first.state == {"cc": 1} and (first.lhs, first.rhs) == (1, 0))
    record(3, "Demon obligations", ok,
           f"INIT {s.init.holds}, OpX {opx.verdict}, OpY {opy.verdict} with witness "
           f"{first.state if first else None}: {first.lhs if first else '?'} > {first.rhs if first else '?'}",
           time.perf_counter() - t, 1)


def test_criterion_4_demon_value():
    t = time.perf_counter()
    fragment = expected_value([({"cc": 0}, HALF), ({"cc": -1}, HALF)], A.Var("cc"))
    m = load_example("demon")
    model = translate(m)
    w3 = dict(check_expectations(m, {"BOUND": 3}, 2).horizons)[3]
    oracle = oracles.brute_force_min(model, {"BOUND": 3, MAX_COUNT: 2}, 3)[3]
    ok = fragment == -HALF and w3 == -HALF and oracle == -HALF
    record(4, "Demon distribution value", ok,
           f"fragment expectation {fragment}, checker W_3 = {w3}, exhaustive schedules {oracle}",
           time.perf_counter() - t, 1)


def test_criterion_5_golden_translation(tmp_path):
    t = time.perf_counter()
    golden = (GOLDEN / "library.nm").read_text(encoding="utf-8")
    text = emit(translate(load_example("library_unsafe")))
    out = tmp_path / "library.nm"
    code = cli_main(["translate", str(example_path("library_unsafe")), "-o", str(out)])
    ok = text == golden and code == 0 and out.read_bytes() == golden.encode()
    ok = ok and "formula2 & formula1 & formula3 & formula0" in text
    ok = ok and "(count = MAX_COUNT + 1) : (pp * loansEnded - booksLost) + MAX_COUNT;" in text
    record(5, "golden translation", ok, "byte-identical" if ok else "differs from golden",
           time.perf_counter() - t, 1)


def test_criterion_6_theorem_cross_check():
    t = time.perf_counter()
    safe = load_example("library_safe")
    ok = check_obligations(safe, StateBox.for_machine(safe, 1), LIBRARY).holds
    ok = ok and all(w >= 0 for w in check_expectations(safe, LIBRARY, 3).values)
    rnd = random.Random(20240601)
    accepted = rejected = 0
    counterexamples = []
    while accepted < 50:
        m = machinegen.machine(rnd, operations=2, name=f"Random{accepted}")
        if check_machine(m):
            continue
        bound = rnd.randint(1, 3)
        if not check_obligations(m, StateBox.for_machine(m, bound)).holds:
            rejected += 1
            continue
        accepted += 1
        r = check_expectations(m, {"BOUND": bound}, 3)  # horizons 0..4
        if not all(w >= r.initial_value for w in r.values):
            counterexamples.append(m.name)
    ok = ok and not counterexamples
    record(6, "theorem cross-check", ok,
           f"safe library + {accepted} random machines ({rejected} rejected by obligations), "
           f"counterexamples: {counterexamples or 'none'}",
           time.perf_counter() - t, 60)


def _fixture_runs():
    for name, consts, bounds in (
        ("library_unsafe", LIBRARY, {"totalBooks": (1, 2)}),
        ("library_safe", LIBRARY, {"totalBooks": (1, 2)}),
        ("library_unsafe", {**LIBRARY, "pp": Fraction(1, 3)}, {"totalBooks": (1, 2)}),
        ("demon", {}, {"BOUND": (1, 2, 3)}),
    ):
        ((key, values),) = bounds.items()
        for v in values:
            for max_count in range(4):  # horizons up to 4
                yield name, {**consts, key: v, MAX_COUNT: max_count}


def test_criterion_7_oracle_equivalence():
    t = time.perf_counter()
    ok, checked, mismatches = True, 0, []
    for name, env in _fixture_runs():
        model = translate(load_example(name))
        mdp = build_mdp(model, env)
        if len(mdp) > 5000:
            continue
        mine = [w for _, w in backward_induction(mdp, env[MAX_COUNT] + 1).horizons]
        if mine != oracles.brute_force_min(model, env, env[MAX_COUNT] + 1):
            mismatches.append((name, env))
        checked += 1
    ok = not mismatches and checked > 0
    record(7, "oracle equivalence", ok, f"{checked} fixture runs, mismatches: {mismatches or 'none'}",
           time.perf_counter() - t, 60)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
