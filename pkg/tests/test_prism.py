from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pamn2prism.parser import parse_machine
from pamn2prism.prism import emit, emit_query
from pamn2prism.translate import translate

import machinegen
import oracles

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name, golden", [("library_unsafe", "library.nm"), ("demon", "demon.nm")])
def test_golden(source, name, golden):
    text = emit(translate(parse_machine(source(name))))
    assert text == (GOLDEN / golden).read_text(encoding="utf-8")


def test_no_formula_section(demon):
    assert "formula" not in emit(translate(demon))


def test_deterministic(library_unsafe):
    assert emit(translate(library_unsafe)) == emit(translate(library_unsafe))


def test_queries():
    assert emit_query(2).splitlines() == [f"Rmin=? [ I={k} ]" for k in range(4)]
    assert len(emit_query(0).splitlines()) == 2
    assert oracles.query_errors(emit_query(5)) == []
    with pytest.raises(ValueError):
        emit_query(-1)


@pytest.mark.parametrize("name", ["library_unsafe", "library_safe", "demon"])
def test_fixture_grammar(source, name):
    assert oracles.prism_subset_errors(emit(translate(parse_machine(source(name))))) == []


def test_grammar_check_rejects_garbage():
    assert oracles.prism_subset_errors("mdp\n\nmodule M\n  x : [0..1] init 0\nendmodule\n")


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_random_models_grammar(data):
    m = machinegen.machine(machinegen.DrawSource(data), operations=data.draw(st.integers(0, 3)))
    assert oracles.prism_subset_errors(emit(translate(m))) == []
