"""Lexer and recursive-descent parser for the pAMN subset.

The normative grammar lives in ``docs/grammar.ebnf``.  Operator precedence,
loosest first: ``&``, comparisons, ``+``/``-``, ``*``, unary minus.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from . import ast as A

CLAUSES = (
    "SEES", "CONSTANTS", "PROPERTIES", "VARIABLES", "INVARIANT",
    "EXPECTATIONS", "INITIALISATION", "OPERATIONS",
)
REQUIRED_CLAUSES = ("VARIABLES", "INVARIANT", "EXPECTATIONS", "INITIALISATION", "OPERATIONS")
KEYWORDS = set(CLAUSES) | {
    "MACHINE", "END", "BEGIN", "PRE", "THEN", "PCHOICE", "OF", "OR",
    "IF", "ELSE", "skip", "real", "frac", "INITIALIZATION",
}
# Library names that SEES may mention; recorded, never resolved.
KNOWN_LIBRARIES = ("Int_TYPE", "Real_TYPE", "Real_type", "Int_type")

_UNICODE = {
    "∧": "&", "∈": ":", "≤": "<=", "≥": ">=", "×": "*", "←": "<--",
    "⇛": "|=>", "−": "-", "∥": "||", "≔": ":=",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>/\*.*?\*/)
  | (?P<decimal>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym><--|\|=>|:=|\|\||<=|>=|[(),;<>=+\-*&:]|[∧∈≤≥×←⇛−∥≔])
    """,
    re.VERBOSE | re.DOTALL,
)


class ErrorKind(enum.Enum):
    UNEXPECTED_TOKEN = "unexpected token"
    UNKNOWN_CLAUSE = "unknown clause"
    DUPLICATE_CLAUSE = "duplicate clause"
    MISSING_CLAUSE = "missing clause"
    UNDECLARED_IDENTIFIER = "undeclared identifier"
    MALFORMED_PCHOICE = "malformed PCHOICE"
    TYPING = "typing"
    DUPLICATE_ASSIGNMENT = "duplicate assignment"


@dataclass(frozen=True)
class ParseError:
    span: A.SourceSpan
    kind: ErrorKind
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.kind.value}: {self.message}"


class MachineSyntaxError(Exception):
    """Raised by :func:`parse_machine`; ``errors`` holds every diagnostic found."""

    def __init__(self, errors: Sequence[ParseError]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'keyword', 'int', 'decimal', 'sym', 'eof'
    text: str
    span: A.SourceSpan

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            span = A.SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise MachineSyntaxError([ParseError(span, ErrorKind.UNEXPECTED_TOKEN, f"unexpected character {source[pos]!r}")])
        kind = m.lastgroup
        text = m.group()
        span = A.SourceSpan(pos, m.end(), line, pos - line_start + 1)
        if kind not in ("ws", "comment"):
            if kind == "sym":
                text = _UNICODE.get(text, text)
            elif kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, span))
        newlines = text.count("\n") if kind in ("ws", "comment") else 0
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", A.SourceSpan(pos, pos, line, pos - line_start + 1)))
    return tokens


class _Abort(Exception):
    def __init__(self, error: ParseError):
        self.error = error


class Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = tokens
        self.pos = 0
        self.errors: List[ParseError] = []

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "keyword") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, expected: str, kind: ErrorKind = ErrorKind.UNEXPECTED_TOKEN, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise _Abort(ParseError(tok.span, kind, f"expected {expected}, found {tok.describe()}"))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail("an identifier")
        return self.advance()

    def ident_list(self) -> Tuple[str, ...]:
        names = [self.ident().text]
        while self.at(","):
            self.advance()
            names.append(self.ident().text)
        return tuple(names)

    # -- machine -----------------------------------------------------------

    def machine(self):
        if not self.at("MACHINE"):
            err = ParseError(self.tok.span, ErrorKind.MISSING_CLAUSE, "missing MACHINE clause")
            self.errors.append(err)
            return None
        self.advance()
        name, params = "?", ()
        try:
            name = self.ident().text
            if self.at("("):
                self.advance()
                params = self.ident_list()
                self.expect(")")
        except _Abort as a:
            self.errors.append(a.error)
            self.sync()

        clauses: Dict[str, object] = {}
        while self.tok.kind != "eof" and not self.at("END"):
            tok = self.tok
            if tok.kind == "keyword" and tok.text in CLAUSES + ("INITIALIZATION",):
                key = "INITIALISATION" if tok.text == "INITIALIZATION" else tok.text
                self.advance()
                try:
                    value = self.clause(key)
                except _Abort as a:
                    self.errors.append(a.error)
                    self.sync()
                    continue
                if key in clauses:
                    self.errors.append(ParseError(tok.span, ErrorKind.DUPLICATE_CLAUSE, f"duplicate {key} clause"))
                else:
                    clauses[key] = value
            else:
                kind = ErrorKind.UNKNOWN_CLAUSE if tok.kind in ("ident", "keyword") and tok.text.isupper() else ErrorKind.UNEXPECTED_TOKEN
                self.errors.append(ParseError(tok.span, kind, f"expected a clause keyword, found {tok.describe()}"))
                self.advance()
                self.sync()
        if self.at("END"):
            self.advance()
            if self.tok.kind != "eof":
                self.errors.append(ParseError(self.tok.span, ErrorKind.UNEXPECTED_TOKEN, f"expected end of input after machine END, found {self.tok.describe()}"))
        else:
            self.errors.append(ParseError(self.tok.span, ErrorKind.UNEXPECTED_TOKEN, "expected 'END' closing the machine"))

        for key in REQUIRED_CLAUSES:
            if key not in clauses:
                self.errors.append(ParseError(self.tok.span, ErrorKind.MISSING_CLAUSE, f"missing {key} clause"))
        if self.errors:
            return None
        return A.Machine(
            name=name,
            params=params,
            sees=clauses.get("SEES", ()),
            constants=clauses.get("CONSTANTS", ()),
            properties=clauses.get("PROPERTIES", A.TRUE),
            variables=clauses["VARIABLES"],
            invariant=clauses["INVARIANT"],
            expectations=clauses["EXPECTATIONS"],
            initialisation=clauses["INITIALISATION"],
            operations=clauses["OPERATIONS"],
        )

    def sync(self) -> None:
        """Skip to the next clause keyword (or the end of input)."""
        while self.tok.kind != "eof" and not (self.tok.kind == "keyword" and self.tok.text in CLAUSES + ("INITIALIZATION",)):
            self.advance()

    def clause(self, key: str):
        if key in ("SEES", "CONSTANTS", "VARIABLES"):
            return self.ident_list()
        if key in ("PROPERTIES", "INVARIANT"):
            return self.predicate()
        if key == "EXPECTATIONS":
            e = self.predicate()
            self.expect("|=>")
            xi = self.predicate()
            return (e, xi)
        if key == "INITIALISATION":
            return self.substitution(allow_seq=True)
        if key == "OPERATIONS":
            return self.operations()
        raise AssertionError(key)

    def operations(self) -> Tuple[A.Operation, ...]:
        ops = []
        while self.tok.kind == "ident":
            start = self.tok
            names = self.ident_list()
            outputs: Tuple[str, ...] = ()
            if self.at("<--"):
                self.advance()
                outputs = names
                name = self.ident().text
            elif len(names) == 1:
                name = names[0]
            else:
                self.fail("'<--' after output list")
            self.expect("=")
            body = self.substitution(allow_seq=False)
            ops.append(A.Operation(name, outputs, body, span=start.span))
            if self.at(";"):
                self.advance()
            else:
                break
        return tuple(ops)

    # -- substitutions -----------------------------------------------------

    def substitution(self, allow_seq: bool) -> A.Substitution:
        start = self.tok.span
        parts = [self.parallel()]
        while allow_seq and self.at(";"):
            self.advance()
            parts.append(self.parallel())
        return parts[0] if len(parts) == 1 else A.Sequence(tuple(parts), span=start)

    def parallel(self) -> A.Substitution:
        start = self.tok.span
        parts = [self.basic_substitution()]
        while self.at("||"):
            self.advance()
            parts.append(self.basic_substitution())
        return parts[0] if len(parts) == 1 else A.Parallel(tuple(parts), span=start)

    def basic_substitution(self) -> A.Substitution:
        tok = self.tok
        span = tok.span
        if self.at("skip"):
            self.advance()
            return A.Skip(span=span)
        if self.at("BEGIN"):
            self.advance()
            body = self.substitution(allow_seq=True)
            self.expect("END")
            return A.Block(body, span=span)
        if self.at("PRE"):
            self.advance()
            cond = self.predicate()
            self.expect("THEN")
            body = self.substitution(allow_seq=True)
            self.expect("END")
            return A.Pre(cond, body, span=span)
        if self.at("PCHOICE"):
            self.advance()
            prob = self.expression()
            if not self.at("OF"):
                self.fail("'OF' after the PCHOICE probability", ErrorKind.MALFORMED_PCHOICE)
            self.advance()
            left = self.substitution(allow_seq=True)
            if not self.at("OR"):
                self.fail("'OR' between the two PCHOICE branches", ErrorKind.MALFORMED_PCHOICE)
            self.advance()
            right = self.substitution(allow_seq=True)
            if not self.at("END"):
                self.fail("'END' closing PCHOICE (exactly two branches)", ErrorKind.MALFORMED_PCHOICE)
            self.advance()
            return A.PChoice(prob, left, right, span=span)
        if self.at("IF"):
            self.advance()
            cond = self.predicate()
            self.expect("THEN")
            left = self.substitution(allow_seq=True)
            right: A.Substitution = A.Skip()
            if self.at("ELSE"):
                self.advance()
                right = self.substitution(allow_seq=True)
            self.expect("END")
            return A.If(cond, left, right, span=span)
        if tok.kind == "ident":
            targets = self.ident_list()
            self.expect(":=")
            values = [self.expression()]
            while self.at(","):
                self.advance()
                values.append(self.expression())
            if len(values) != len(targets):
                raise _Abort(ParseError(span, ErrorKind.UNEXPECTED_TOKEN, f"expected {len(targets)} values in the assignment, found {len(values)}"))
            return A.Assign(targets, tuple(values), span=span)
        self.fail("a substitution")

    # -- expressions -------------------------------------------------------

    def predicate(self) -> A.Expr:
        span = self.tok.span
        parts = [self.relation()]
        while self.at("&"):
            self.advance()
            parts.append(self.relation())
        return parts[0] if len(parts) == 1 else A.And(tuple(parts), span=span)

    def _typing_ahead(self) -> bool:
        i = self.pos
        toks = self.tokens
        if toks[i].kind != "ident":
            return False
        i += 1
        while toks[i].kind == "sym" and toks[i].text == ",":
            if toks[i + 1].kind != "ident":
                return False
            i += 2
        return toks[i].kind == "sym" and toks[i].text == ":"

    def relation(self) -> A.Expr:
        span = self.tok.span
        if self._typing_ahead():
            names = self.ident_list()
            self.expect(":")
            ts = self.tok
            if ts.kind != "ident" or ts.text not in A.TYPE_SETS:
                self.fail("a type set (" + ", ".join(A.TYPE_SETS) + ")")
            self.advance()
            return A.TypeAtom(names, ts.text, span=span)
        left = self.expression()
        if self.tok.kind == "sym" and self.tok.text in A.COMPARE_OPS:
            op = self.advance().text
            right = self.expression()
            return A.Compare(op, left, right, span=span)
        return left

    def expression(self) -> A.Expr:
        span = self.tok.span
        left = self.term()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = A.BinOp(op, left, self.term(), span=span)
        return left

    def term(self) -> A.Expr:
        span = self.tok.span
        left = self.unary()
        while self.at("*"):
            self.advance()
            left = A.BinOp("*", left, self.unary(), span=span)
        return left

    def unary(self) -> A.Expr:
        if self.at("-"):
            span = self.advance().span
            return A.Neg(self.unary(), span=span)
        return self.primary()

    def _signed_int(self) -> int:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        if self.tok.kind != "int":
            self.fail("an integer literal")
        return sign * int(self.advance().text)

    def primary(self) -> A.Expr:
        tok = self.tok
        if tok.kind == "int":
            self.advance()
            return A.IntLit(int(tok.text), span=tok.span)
        if tok.kind == "decimal":
            self.advance()
            return A.RatLit(Fraction(tok.text), span=tok.span)
        if tok.kind == "ident":
            self.advance()
            return A.Var(tok.text, span=tok.span)
        if self.at("real"):
            self.advance()
            self.expect("(")
            inner = self.predicate()
            self.expect(")")
            if isinstance(inner, A.IntLit):
                return A.RatLit(Fraction(inner.value), span=tok.span)
            if isinstance(inner, A.Neg) and isinstance(inner.operand, A.IntLit):
                return A.RatLit(Fraction(-inner.operand.value), span=tok.span)
            return A.ToReal(inner, span=tok.span)
        if self.at("frac"):
            self.advance()
            self.expect("(")
            num = self._signed_int()
            self.expect(",")
            den = self._signed_int()
            self.expect(")")
            if den == 0:
                raise _Abort(ParseError(tok.span, ErrorKind.UNEXPECTED_TOKEN, "expected a non-zero denominator in frac"))
            return A.RatLit(Fraction(num, den), span=tok.span)
        if self.at("("):
            self.advance()
            inner = self.predicate()
            self.expect(")")
            return inner
        self.fail("an expression")


# --------------------------------------------------------------------------
# Post-parse checks


def _span_of(node, fallback: A.SourceSpan) -> A.SourceSpan:
    return getattr(node, "span", None) or fallback


def check_machine(m: A.Machine) -> List[ParseError]:
    """Scope, typing and structural checks that the grammar cannot express."""
    errors: List[ParseError] = []
    origin = A.SourceSpan(0, 0, 1, 1)
    consts = set(m.params) | set(m.constants)
    variables = set(m.variables)

    def undeclared(expr: A.Expr, scope: Set[str], where: str) -> None:
        for node in A.walk(expr):
            names = ()
            if isinstance(node, A.Var):
                names = (node.name,)
            elif isinstance(node, A.TypeAtom):
                names = node.names
            for n in names:
                if n not in scope:
                    errors.append(ParseError(_span_of(node, origin), ErrorKind.UNDECLARED_IDENTIFIER, f"identifier '{n}' in {where} is not declared"))

    for group, label in ((m.params, "parameter"), (m.constants, "constant"), (m.variables, "variable")):
        if len(set(group)) != len(group):
            errors.append(ParseError(origin, ErrorKind.DUPLICATE_CLAUSE, f"duplicate {label} name"))

    undeclared(m.properties, consts, "PROPERTIES")
    undeclared(m.invariant, consts | variables, "INVARIANT")
    undeclared(m.initial_expr, consts, "EXPECTATIONS (initial expression)")
    undeclared(m.random_variable, consts | variables, "EXPECTATIONS (random variable)")

    typed: Dict[str, int] = {}
    for atom in A.conjuncts(m.invariant):
        if isinstance(atom, A.TypeAtom):
            for n in atom.names:
                typed[n] = typed.get(n, 0) + 1
    for v in m.variables:
        count = typed.get(v, 0)
        if count != 1:
            msg = "has no typing atom" if count == 0 else "has more than one typing atom"
            errors.append(ParseError(origin, ErrorKind.TYPING, f"variable '{v}' {msg} in INVARIANT"))
        elif m.typing().get(v) == "REAL":
            errors.append(ParseError(origin, ErrorKind.TYPING, f"variable '{v}' must be INT or NATURAL typed"))

    def check_sub(sub: A.Substitution, scope: Set[str], targets: Set[str], where: str) -> None:
        for e in A.substitution_expressions(sub):
            undeclared(e, scope, where)
        _check_structure(sub, targets, where, errors, origin, variables)

    check_sub(m.initialisation, consts | variables, variables, "INITIALISATION")
    for op in m.operations:
        outs = set(op.outputs)
        check_sub(op.body, consts | variables | outs, variables | outs, f"operation {op.name}")
    names = [op.name for op in m.operations]
    if len(set(names)) != len(names):
        errors.append(ParseError(origin, ErrorKind.DUPLICATE_CLAUSE, "duplicate operation name"))
    return errors


def _check_structure(sub, targets, where, errors, origin, variables) -> None:
    span = _span_of(sub, origin)
    if isinstance(sub, A.Assign):
        for t in sub.targets:
            if t not in targets:
                errors.append(ParseError(span, ErrorKind.UNDECLARED_IDENTIFIER, f"assignment target '{t}' in {where} is not a declared variable"))
        if len(set(sub.targets)) != len(sub.targets):
            errors.append(ParseError(span, ErrorKind.DUPLICATE_ASSIGNMENT, f"variable assigned twice in {where}"))
    elif isinstance(sub, A.Parallel):
        seen: Set[str] = set()
        for p in sub.parts:
            assigned = A.assigned_variables(p)
            if seen & assigned:
                dup = sorted(seen & assigned)[0]
                errors.append(ParseError(span, ErrorKind.DUPLICATE_ASSIGNMENT, f"variable '{dup}' assigned twice in a parallel composition in {where}"))
            seen |= assigned
            _check_structure(p, targets, where, errors, origin, variables)
    elif isinstance(sub, A.Sequence):
        for p in sub.parts:
            _check_structure(p, targets, where, errors, origin, variables)
    elif isinstance(sub, (A.Pre, A.Block)):
        _check_structure(sub.body, targets, where, errors, origin, variables)
    elif isinstance(sub, (A.PChoice, A.If)):
        if isinstance(sub, A.PChoice):
            bad = A.free_identifiers(sub.prob) & (targets | variables)
            if bad:
                errors.append(ParseError(span, ErrorKind.MALFORMED_PCHOICE, f"PCHOICE probability in {where} must be constant, but mentions {', '.join(sorted(bad))}"))
        _check_structure(sub.left, targets, where, errors, origin, variables)
        _check_structure(sub.right, targets, where, errors, origin, variables)


def parse_machine(source: str) -> A.Machine:
    """Parse pAMN ``source`` into a :class:`~pamn2prism.ast.Machine`.

    Raises :class:`MachineSyntaxError` carrying every diagnostic found.
    """
    parser = Parser(tokenize(source))
    machine = parser.machine()
    if parser.errors:
        raise MachineSyntaxError(parser.errors)
    errors = check_machine(machine)
    if errors:
        raise MachineSyntaxError(errors)
    return machine


def parse_expression(source: str) -> A.Expr:
    """Parse a stand-alone predicate or arithmetic expression."""
    parser = Parser(tokenize(source))
    try:
        expr = parser.predicate()
        if parser.tok.kind != "eof":
            parser.fail("end of input")
    except _Abort as a:
        raise MachineSyntaxError([a.error]) from None
    return expr
