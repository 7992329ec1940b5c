from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pamn2prism import ast as A
from pamn2prism.parser import ErrorKind, MachineSyntaxError, parse_expression, parse_machine
from pamn2prism.printer import pretty_print

import machinegen

MINIMAL = """MACHINE M
VARIABLES x
INVARIANT x : INT
EXPECTATIONS real(0) |=> x
INITIALISATION x := 0
OPERATIONS
  Op = {body}
END
"""


def errors_of(text):
    with pytest.raises(MachineSyntaxError) as info:
        parse_machine(text)
    return info.value.errors


def test_demon(demon):
    assert demon.name == "Demon"
    assert demon.variables == ("cc",)
    assert demon.expectations == (A.RatLit(Fraction(0)), A.Var("cc"))
    assert [op.name for op in demon.operations] == ["OpX", "OpY"]
    assert demon.operation("OpX").outputs == ("nn",)
    assert demon.operation("OpY").outputs == ()
    assert demon.sees == ("Int_TYPE", "Real_TYPE")


def test_library(library_unsafe):
    m = library_unsafe
    assert m.params == ("totalBooks", "cost")
    assert m.constants == ("pp",)
    assert len(m.variables) == 5
    assert [op.name for op in m.operations] == ["StockTake", "StartLoan", "EndLoan"]
    assert m.typing()["pp"] == "REAL"


def test_empty_input():
    errs = errors_of("")
    assert any("missing MACHINE clause" in e.message for e in errs)


def test_missing_required_clauses_reported_together():
    errs = errors_of("MACHINE M\nVARIABLES x\nEND\n")
    missing = {e.message for e in errs if e.kind is ErrorKind.MISSING_CLAUSE}
    assert {"missing INVARIANT clause", "missing EXPECTATIONS clause",
            "missing INITIALISATION clause", "missing OPERATIONS clause"} <= missing


def test_optional_clauses_default_empty():
    m = parse_machine(MINIMAL.format(body="skip"))
    assert m.params == () and m.sees == () and m.constants == ()
    assert A.conjuncts(m.properties) == ()


def test_clause_order_is_free():
    text = """MACHINE M
OPERATIONS Op = skip
INITIALISATION x := 0
EXPECTATIONS real(0) |=> x
INVARIANT x : INT
VARIABLES x
END"""
    assert parse_machine(text) == parse_machine(MINIMAL.format(body="skip"))


def test_duplicate_and_unknown_clause():
    text = MINIMAL.format(body="skip").replace("VARIABLES x", "VARIABLES x\nVARIABLES x\nDEFINITIONS y")
    kinds = {e.kind for e in errors_of(text)}
    assert ErrorKind.DUPLICATE_CLAUSE in kinds
    assert ErrorKind.UNKNOWN_CLAUSE in kinds


def test_multiple_diagnostics():
    text = MINIMAL.format(body="x := y").replace("INVARIANT x : INT", "INVARIANT x : INT & z > 0")
    errs = errors_of(text)
    assert len([e for e in errs if e.kind is ErrorKind.UNDECLARED_IDENTIFIER]) == 2


@pytest.mark.parametrize("body", [
    "PCHOICE frac(1, 2) x := 1 OR x := 2 END",
    "PCHOICE frac(1, 2) OF x := 1 END",
    "PCHOICE frac(1, 2) OF x := 1 OR x := 2 OR x := 3 END",
    "PCHOICE x OF x := 1 OR x := 2 END",
])
def test_malformed_pchoice(body):
    assert any(e.kind is ErrorKind.MALFORMED_PCHOICE for e in errors_of(MINIMAL.format(body=body)))


def test_parallel_double_assignment_rejected():
    errs = errors_of(MINIMAL.format(body="x := 1 || x := 2"))
    assert errs[0].kind is ErrorKind.DUPLICATE_ASSIGNMENT


def test_untyped_variable_rejected():
    errs = errors_of(MINIMAL.format(body="skip").replace("VARIABLES x", "VARIABLES x, y"))
    assert any(e.kind is ErrorKind.TYPING for e in errs)


def test_expectations_arrow():
    m = parse_machine(MINIMAL.format(body="skip").replace("real(0) |=> x", "frac(1, 2) |=> x + 1"))
    assert m.initial_expr == A.RatLit(Fraction(1, 2))
    assert m.random_variable == parse_expression("x + 1")
    errors_of(MINIMAL.format(body="skip").replace("|=>", "<=="))


def test_unicode_spellings():
    text = MINIMAL.format(body="skip").replace("x : INT", "x ∈ INT ∧ x ≥ −3").replace("|=>", "⇛")
    m = parse_machine(text)
    assert m.invariant == parse_machine(MINIMAL.format(body="skip").replace("x : INT", "x : INT & x >= -3")).invariant


def test_comments_skipped():
    plain = parse_machine(MINIMAL.format(body="skip"))
    assert parse_machine("/* c */" + MINIMAL.format(body="/* inner */ skip")) == plain


def test_decimal_literal_is_exact():
    assert parse_expression("0.5") == A.RatLit(Fraction(1, 2))
    assert A.evaluate(parse_expression("0.1"), {}) == Fraction(1, 10)


def test_precedence():
    assert parse_expression("-a * b + c") == A.BinOp("+", A.BinOp("*", A.Neg(A.Var("a")), A.Var("b")), A.Var("c"))
    assert parse_expression("a - b - c") == A.BinOp("-", A.BinOp("-", A.Var("a"), A.Var("b")), A.Var("c"))
    e = parse_expression("a + 1 <= b & c = 2")
    assert isinstance(e, A.And) and isinstance(e.operands[0], A.Compare)


def test_spans_attached():
    m = parse_machine(MINIMAL.format(body="x := 1"))
    span = m.operations[0].body.span
    assert span is not None and span.line == 7 and span.begin <= span.end


@pytest.mark.parametrize("name", ["demon", "library_unsafe", "library_safe"])
def test_round_trip_fixtures(source, name):
    m = parse_machine(source(name))
    assert parse_machine(pretty_print(m)) == m


def test_print_skip():
    assert "skip" in pretty_print(parse_machine(MINIMAL.format(body="skip")))


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_round_trip_random_machines(data):
    m = machinegen.machine(machinegen.DrawSource(data), operations=data.draw(st.integers(0, 3)))
    text = pretty_print(m)
    assert parse_machine(text) == m
