"""Textual model format (.im): total parser, canonical serializer, lowerings.

Documents are line-oriented: '#' starts a comment, bracketed headers open
sections, and each line inside a section holds one declaration. One document
lowers both to a structural causal model with an epistemic state and to an
influence diagram in canonical form, so the two intent frameworks read a
single source of truth. Parsing never raises; it returns a result whose
document is present exactly when no error diagnostics were produced, with
every diagnostic carrying a 1-based line and column.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .epistemics import EpistemicState, UtilityFunction, product_state
from .influence import (
    ChanceNode,
    DecisionNode,
    InfluenceDiagram,
    UtilityNode,
    to_howard_canonical_form,
)
from .intent import ReferenceSet
from .scm import CausalModel, ModelError, Signature, StructuralEquation, Value, validate_model

SECTIONS = ("variables", "equations", "distribution", "utility", "reference", "queries")
KINDS = ("exogenous", "endogenous", "decision")
RESERVED = frozenset(
    KINDS
    + ("table", "default", "vs", "given", "confidence", "affect", "direct", "oblique")
)


@dataclass(frozen=True)
class ParseDiagnostic:
    """One problem found while parsing or lowering a document."""

    severity: str
    line: int
    column: int
    message: str
    token: str = ""

    def __post_init__(self) -> None:
        if not self.message:
            raise ModelError("diagnostic message is empty")
        if self.line < 1 or self.column < 1:
            raise ModelError("diagnostic position is not 1-based")

    def render(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class Expr:
    """Marker base for equation right-hand sides."""


@dataclass(frozen=True)
class Lit(Expr):
    value: Value


@dataclass(frozen=True)
class VarRef(Expr):
    name: str


@dataclass(frozen=True)
class NotExpr(Expr):
    operand: Expr


@dataclass(frozen=True)
class AndExpr(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class OrExpr(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class TableExpr(Expr):
    parents: tuple[str, ...]
    rows: tuple[tuple[tuple[Value, ...], Value], ...]


@dataclass(frozen=True)
class VariableDecl:
    name: str
    kind: str
    domain: tuple[Value, ...]
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class EquationDecl:
    target: str
    expr: Expr
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class DistributionDecl:
    """Probability of the variable's second domain value."""

    name: str
    probability: Fraction
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class UtilityTerm:
    condition: tuple[tuple[str, Value], ...]
    value: Fraction
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class ReferenceDecl:
    """Audited action value and its alternatives; None means the rest of the domain."""

    action: str
    value: Value
    alternatives: tuple[Value, ...] | None
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class AffectQuery:
    variables: tuple[str, ...]
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class DirectQuery:
    literals: tuple[tuple[str, Value], ...]
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class ObliqueQuery:
    side: tuple[tuple[str, Value], ...]
    given: tuple[tuple[str, Value], ...]
    confidence: Fraction | None = None
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


Query = Union[AffectQuery, DirectQuery, ObliqueQuery]


@dataclass(frozen=True)
class ModelDocument:
    variables: tuple[VariableDecl, ...]
    equations: tuple[EquationDecl, ...] = ()
    distribution: tuple[DistributionDecl, ...] = ()
    utility_terms: tuple[UtilityTerm, ...] = ()
    utility_default: Fraction | None = None
    reference: ReferenceDecl | None = None
    queries: tuple[Query, ...] = ()


@dataclass(frozen=True)
class ParseResult:
    document: ModelDocument | None
    diagnostics: tuple[ParseDiagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.document is not None


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<number>-?\d+(?:/\d+|\.\d+)?)"
    r"|(?P<punct>[\[\]{}():=,&|!])"
    r"|(?P<bad>.)"
)

_HEADER_RE = re.compile(r"^\s*\[([A-Za-z_]*)\]\s*$")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


class _Cursor:
    """Token stream for one line; reports mismatches and stops the line."""

    def __init__(self, line_no: int, text: str, diagnostics: list[ParseDiagnostic]):
        self._diagnostics = diagnostics
        self.failed = False
        tokens: list[_Token] = []
        for match in _TOKEN_RE.finditer(text):
            kind = match.lastgroup
            if kind == "ws":
                continue
            token = _Token(kind, match.group(), line_no, match.start() + 1)
            if kind == "bad":
                self._error(token, f"unexpected character {token.text!r}")
                continue
            tokens.append(token)
        tokens.append(_Token("end", "", line_no, len(text) + 1))
        self._tokens = tokens
        self._index = 0

    def _error(self, token: _Token, message: str) -> None:
        self.failed = True
        self._diagnostics.append(
            ParseDiagnostic("error", token.line, token.column, message, token.text)
        )

    def peek(self) -> _Token:
        return self._tokens[self._index]

    def take(self) -> _Token:
        token = self._tokens[self._index]
        if token.kind != "end":
            self._index += 1
        return token

    def at(self, kind: str, text: str | None = None) -> bool:
        token = self.peek()
        return token.kind == kind and (text is None or token.text == text)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> _Token | None:
        token = self.peek()
        if token.kind == kind and (text is None or token.text == text):
            return self.take()
        wanted = what or (repr(text) if text is not None else f"a {kind}")
        found = repr(token.text) if token.text else "end of line"
        self._error(token, f"expected {wanted}, found {found}")
        return None

    def expect_end(self) -> bool:
        if self.at("end"):
            return True
        token = self.peek()
        self._error(token, f"unexpected trailing {token.text!r}")
        return False

    def error_here(self, message: str) -> None:
        self._error(self.peek(), message)


class _Parser:
    def __init__(self, text: str):
        self.diagnostics: list[ParseDiagnostic] = []
        self.symbols: dict[str, VariableDecl] = {}
        self.variables: list[VariableDecl] = []
        self.equations: list[EquationDecl] = []
        self.equation_targets: set[str] = set()
        self.distribution: list[DistributionDecl] = []
        self.distributed: set[str] = set()
        self.utility_terms: list[UtilityTerm] = []
        self.utility_default: Fraction | None = None
        self.reference: ReferenceDecl | None = None
        self.queries: list[Query] = []
        self.text = text

    def error(self, line: int, column: int, message: str, token: str = "") -> None:
        self.diagnostics.append(ParseDiagnostic("error", line, column, message, token))

    def run(self) -> ParseResult:
        handlers: dict[str, Callable[[_Cursor], None]] = {
            "variables": self._variables_line,
            "equations": self._equations_line,
            "distribution": self._distribution_line,
            "utility": self._utility_line,
            "reference": self._reference_line,
            "queries": self._queries_line,
        }
        seen: set[str] = set()
        current: str | None = None
        skipping = False
        last_index = -1
        for line_no, raw in enumerate(self.text.split("\n"), start=1):
            body = raw.split("#", 1)[0]
            if not body.strip():
                continue
            header = _HEADER_RE.match(body)
            if header:
                name = header.group(1)
                column = body.index("[") + 1
                if name not in SECTIONS:
                    self.error(line_no, column, f"unknown section [{name}]", name)
                    current, skipping = None, True
                    continue
                if name in seen:
                    self.error(line_no, column, f"duplicate section [{name}]", name)
                    current, skipping = None, True
                    continue
                index = SECTIONS.index(name)
                if index < last_index:
                    self.error(line_no, column, f"section [{name}] is out of order", name)
                seen.add(name)
                last_index = max(last_index, index)
                current, skipping = name, False
                continue
            if current is None:
                if not skipping:
                    stripped = len(body) - len(body.lstrip()) + 1
                    self.error(line_no, stripped, "line appears before any section header")
                continue
            cursor = _Cursor(line_no, body, self.diagnostics)
            handlers[current](cursor)
        if "variables" not in seen:
            self.error(1, 1, "no variables section")
        if any(d.severity == "error" for d in self.diagnostics):
            return ParseResult(None, tuple(self.diagnostics))
        document = ModelDocument(
            variables=tuple(self.variables),
            equations=tuple(self.equations),
            distribution=tuple(self.distribution),
            utility_terms=tuple(self.utility_terms),
            utility_default=self.utility_default,
            reference=self.reference,
            queries=tuple(self.queries),
        )
        return ParseResult(document, tuple(self.diagnostics))

    # Shared pieces

    def _value(self, cursor: _Cursor, what: str = "a value") -> Value | None:
        token = cursor.peek()
        if token.kind == "name":
            cursor.take()
            return token.text
        if token.kind == "number":
            if "/" in token.text or "." in token.text:
                cursor.error_here(f"{what} must be an integer or a name")
                return None
            cursor.take()
            return int(token.text)
        cursor.error_here(f"expected {what}, found {token.text!r}" if token.text else f"expected {what}")
        return None

    def _rational(self, cursor: _Cursor, what: str) -> Fraction | None:
        token = cursor.expect("number", what=what)
        if token is None:
            return None
        return Fraction(token.text)

    def _declared(self, cursor: _Cursor, what: str) -> tuple[_Token, VariableDecl] | None:
        token = cursor.expect("name", what=what)
        if token is None:
            return None
        decl = self.symbols.get(token.text)
        if decl is None:
            cursor._error(token, f"unknown identifier {token.text}")
            return None
        return token, decl

    def _outcome_variable(self, cursor: _Cursor, keyword: str) -> tuple[_Token, VariableDecl] | None:
        found = self._declared(cursor, "an outcome variable")
        if found is None:
            return None
        token, decl = found
        if decl.kind == "exogenous":
            cursor._error(token, f"{keyword} cannot target exogenous variable {decl.name}")
            return None
        if decl.kind == "decision":
            cursor._error(token, f"{keyword} cannot target decision variable {decl.name}")
            return None
        return found

    def _literal(self, cursor: _Cursor, keyword: str) -> tuple[str, Value] | None:
        found = self._outcome_variable(cursor, keyword)
        if found is None:
            return None
        token, decl = found
        if cursor.expect("punct", "=") is None:
            return None
        value = self._value(cursor)
        if value is None:
            return None
        if value not in decl.domain:
            cursor._error(token, f"value {value!r} is outside the domain of {decl.name}")
            return None
        return decl.name, value

    def _literal_list(self, cursor: _Cursor, keyword: str) -> list[tuple[str, Value]] | None:
        literals = [self._literal(cursor, keyword)]
        while cursor.at("punct", ","):
            cursor.take()
            literals.append(self._literal(cursor, keyword))
        if any(item is None for item in literals):
            return None
        names = [name for name, _ in literals]
        if len(set(names)) != len(names):
            cursor.error_here(f"{keyword} query repeats a variable")
            return None
        return literals

    # Section lines

    def _variables_line(self, cursor: _Cursor) -> None:
        name = cursor.expect("name", what="a variable name")
        if name is None:
            return
        if name.text in RESERVED:
            cursor._error(name, f"{name.text} is a reserved word")
            return
        if name.text in self.symbols:
            cursor._error(name, f"duplicate variable {name.text}")
            return
        if cursor.expect("punct", ":") is None:
            return
        kind = cursor.expect("name", what="exogenous, endogenous, or decision")
        if kind is None:
            return
        if kind.text not in KINDS:
            cursor._error(kind, f"unknown kind {kind.text}; use exogenous, endogenous, or decision")
            return
        if cursor.expect("punct", "{") is None:
            return
        domain: list[Value] = []
        while True:
            value = self._value(cursor, "a domain value")
            if value is None:
                return
            if value in domain:
                cursor.error_here(f"domain of {name.text} repeats {value!r}")
                return
            domain.append(value)
            if cursor.at("punct", ","):
                cursor.take()
                continue
            break
        if cursor.expect("punct", "}") is None or not cursor.expect_end():
            return
        decl = VariableDecl(name.text, kind.text, tuple(domain), name.line, name.column)
        self.symbols[name.text] = decl
        self.variables.append(decl)

    def _equations_line(self, cursor: _Cursor) -> None:
        found = self._declared(cursor, "an equation target")
        if found is None:
            return
        target, decl = found
        if decl.kind == "exogenous":
            cursor._error(target, f"exogenous variable {decl.name} cannot have an equation")
            return
        if decl.kind == "decision":
            cursor._error(target, f"decision variable {decl.name} cannot have an equation")
            return
        if decl.name in self.equation_targets:
            cursor._error(target, f"duplicate equation for {decl.name}")
            return
        if cursor.expect("punct", "=") is None:
            return
        if cursor.at("name", "table"):
            expr = self._table_expr(cursor, decl)
        else:
            expr = self._expr(cursor)
            if expr is not None and not self._check_expr(cursor, target, decl, expr):
                expr = None
        if expr is None or not cursor.expect_end():
            return
        self.equation_targets.add(decl.name)
        self.equations.append(EquationDecl(decl.name, expr, target.line, target.column))

    def _expr(self, cursor: _Cursor) -> Expr | None:
        left = self._and_expr(cursor)
        while left is not None and cursor.at("punct", "|"):
            cursor.take()
            right = self._and_expr(cursor)
            left = OrExpr(left, right) if right is not None else None
        return left

    def _and_expr(self, cursor: _Cursor) -> Expr | None:
        left = self._unary_expr(cursor)
        while left is not None and cursor.at("punct", "&"):
            cursor.take()
            right = self._unary_expr(cursor)
            left = AndExpr(left, right) if right is not None else None
        return left

    def _unary_expr(self, cursor: _Cursor) -> Expr | None:
        if cursor.at("punct", "!"):
            cursor.take()
            operand = self._unary_expr(cursor)
            return NotExpr(operand) if operand is not None else None
        return self._atom(cursor)

    def _atom(self, cursor: _Cursor) -> Expr | None:
        token = cursor.peek()
        if token.kind == "punct" and token.text == "(":
            cursor.take()
            inner = self._expr(cursor)
            if inner is None or cursor.expect("punct", ")") is None:
                return None
            return inner
        if token.kind == "name":
            if token.text == "table":
                cursor._error(token, "table(...) must be the whole right-hand side")
                return None
            found = self._declared(cursor, "a variable")
            if found is None:
                return None
            return VarRef(found[1].name)
        if token.kind == "number":
            value = self._value(cursor, "a literal")
            return Lit(value) if value is not None else None
        cursor.error_here("expected an expression")
        return None

    def _check_expr(self, cursor: _Cursor, target: _Token, decl: VariableDecl, expr: Expr) -> bool:
        boolean = _uses_boolean_operators(expr)
        for ref in _collect_refs(expr):
            domain = self.symbols[ref].domain
            if boolean and tuple(domain) != (0, 1):
                cursor._error(
                    target, f"boolean operators need domain {{0, 1}}, but {ref} has {_domain_text(domain)}"
                )
                return False
            if not boolean and any(v not in decl.domain for v in domain):
                cursor._error(
                    target, f"values of {ref} fall outside the domain of {decl.name}"
                )
                return False
        for lit in _collect_lits(expr):
            if boolean and lit not in (0, 1):
                cursor._error(target, f"boolean operators allow only literals 0 and 1, not {lit!r}")
                return False
            if not boolean and lit not in decl.domain:
                cursor._error(target, f"literal {lit!r} is outside the domain of {decl.name}")
                return False
        if boolean and any(v not in decl.domain for v in (0, 1)):
            cursor._error(
                target, f"{decl.name} needs 0 and 1 in its domain to hold a boolean result"
            )
            return False
        return True

    def _table_expr(self, cursor: _Cursor, decl: VariableDecl) -> TableExpr | None:
        cursor.expect("name", "table")
        if cursor.expect("punct", "(") is None:
            return None
        parents: list[str] = []
        while True:
            found = self._declared(cursor, "a parent variable")
            if found is None:
                return None
            _, parent = found
            if parent.name in parents:
                cursor.error_here(f"table repeats parent {parent.name}")
                return None
            parents.append(parent.name)
            if cursor.at("punct", ","):
                cursor.take()
                continue
            break
        if cursor.expect("punct", ")") is None or cursor.expect("punct", "{") is None:
            return None
        rows: list[tuple[tuple[Value, ...], Value]] = []
        keys: set[tuple[Value, ...]] = set()
        while True:
            if cursor.expect("punct", "(") is None:
                return None
            key: list[Value] = []
            while True:
                value = self._value(cursor, "a parent value")
                if value is None:
                    return None
                key.append(value)
                if cursor.at("punct", ","):
                    cursor.take()
                    continue
                break
            if cursor.expect("punct", ")") is None:
                return None
            if len(key) != len(parents):
                cursor.error_here(f"row key has {len(key)} values for {len(parents)} parents")
                return None
            for parent, value in zip(parents, key):
                if value not in self.symbols[parent].domain:
                    cursor.error_here(f"value {value!r} is outside the domain of {parent}")
                    return None
            if tuple(key) in keys:
                cursor.error_here("duplicate table row")
                return None
            if cursor.expect("punct", ":") is None:
                return None
            out = self._value(cursor, "a result value")
            if out is None:
                return None
            if out not in decl.domain:
                cursor.error_here(f"value {out!r} is outside the domain of {decl.name}")
                return None
            keys.add(tuple(key))
            rows.append((tuple(key), out))
            if cursor.at("punct", ","):
                cursor.take()
                continue
            break
        if cursor.expect("punct", "}") is None:
            return None
        return TableExpr(tuple(parents), tuple(rows))

    def _distribution_line(self, cursor: _Cursor) -> None:
        found = self._declared(cursor, "an exogenous variable")
        if found is None:
            return
        token, decl = found
        if decl.kind != "exogenous":
            cursor._error(token, f"distribution entries need exogenous variables, {decl.name} is {decl.kind}")
            return
        if len(decl.domain) != 2:
            cursor._error(token, f"distribution needs a two-valued domain, {decl.name} has {len(decl.domain)} values")
            return
        if decl.name in self.distributed:
            cursor._error(token, f"duplicate distribution entry for {decl.name}")
            return
        if cursor.expect("punct", ":") is None:
            return
        probability = self._rational(cursor, "a probability")
        if probability is None or not cursor.expect_end():
            return
        if not 0 <= probability <= 1:
            cursor.error_here(f"probability {probability} is outside [0, 1]")
            return
        self.distributed.add(decl.name)
        self.distribution.append(
            DistributionDecl(decl.name, probability, token.line, token.column)
        )

    def _utility_line(self, cursor: _Cursor) -> None:
        start = cursor.peek()
        if cursor.at("name", "default"):
            token = cursor.take()
            if self.utility_default is not None:
                cursor._error(token, "duplicate default")
                return
            if cursor.expect("punct", ":") is None:
                return
            value = self._rational(cursor, "a utility value")
            if value is None or not cursor.expect_end():
                return
            self.utility_default = value
            return
        condition: list[tuple[str, Value]] = []
        while True:
            literal = self._utility_literal(cursor)
            if literal is None:
                return
            if any(name == literal[0] for name, _ in condition):
                cursor.error_here(f"condition repeats {literal[0]}")
                return
            condition.append(literal)
            if cursor.at("punct", "&"):
                cursor.take()
                continue
            break
        if cursor.expect("punct", ":") is None:
            return
        value = self._rational(cursor, "a utility value")
        if value is None or not cursor.expect_end():
            return
        self.utility_terms.append(
            UtilityTerm(tuple(condition), value, start.line, start.column)
        )

    def _utility_literal(self, cursor: _Cursor) -> tuple[str, Value] | None:
        found = self._declared(cursor, "a variable")
        if found is None:
            return None
        token, decl = found
        if cursor.expect("punct", "=") is None:
            return None
        value = self._value(cursor)
        if value is None:
            return None
        if value not in decl.domain:
            cursor._error(token, f"value {value!r} is outside the domain of {decl.name}")
            return None
        return decl.name, value

    def _reference_line(self, cursor: _Cursor) -> None:
        found = self._declared(cursor, "a decision variable")
        if found is None:
            return
        token, decl = found
        if self.reference is not None:
            cursor._error(token, "only one reference line is supported")
            return
        if decl.kind != "decision":
            cursor._error(token, f"reference needs a decision variable, {decl.name} is {decl.kind}")
            return
        if cursor.expect("punct", "=") is None:
            return
        value = self._value(cursor)
        if value is None:
            return
        if value not in decl.domain:
            cursor._error(token, f"value {value!r} is outside the domain of {decl.name}")
            return
        alternatives: tuple[Value, ...] | None = None
        if cursor.at("name", "vs"):
            cursor.take()
            if cursor.expect("punct", "{") is None:
                return
            collected: list[Value] = []
            while True:
                alt = self._value(cursor, "an alternative value")
                if alt is None:
                    return
                if alt not in decl.domain:
                    cursor.error_here(f"value {alt!r} is outside the domain of {decl.name}")
                    return
                if alt == value:
                    cursor.error_here("alternatives include the audited value")
                    return
                if alt in collected:
                    cursor.error_here(f"duplicate alternative {alt!r}")
                    return
                collected.append(alt)
                if cursor.at("punct", ","):
                    cursor.take()
                    continue
                break
            if cursor.expect("punct", "}") is None:
                return
            alternatives = tuple(collected)
        if not cursor.expect_end():
            return
        if alternatives is None and len(decl.domain) < 2:
            cursor._error(token, f"{decl.name} has no alternative values")
            return
        self.reference = ReferenceDecl(decl.name, value, alternatives, token.line, token.column)

    def _queries_line(self, cursor: _Cursor) -> None:
        keyword = cursor.expect("name", what="affect, direct, or oblique")
        if keyword is None:
            return
        if keyword.text == "affect":
            names: list[str] = []
            while True:
                found = self._outcome_variable(cursor, "affect")
                if found is None:
                    return
                _, decl = found
                if decl.name in names:
                    cursor.error_here(f"affect query repeats {decl.name}")
                    return
                names.append(decl.name)
                if cursor.at("punct", ","):
                    cursor.take()
                    continue
                break
            if not cursor.expect_end():
                return
            self.queries.append(AffectQuery(tuple(names), keyword.line, keyword.column))
            return
        if keyword.text == "direct":
            literals = self._literal_list(cursor, "direct")
            if literals is None or not cursor.expect_end():
                return
            self.queries.append(DirectQuery(tuple(literals), keyword.line, keyword.column))
            return
        if keyword.text == "oblique":
            side = self._literal_list(cursor, "oblique")
            if side is None:
                return
            if cursor.expect("name", "given") is None:
                return
            given = self._literal_list(cursor, "oblique")
            if given is None:
                return
            overlap = {name for name, _ in side} & {name for name, _ in given}
            if overlap:
                cursor.error_here(
                    f"side outcome shares variables with the direct outcome: {', '.join(sorted(overlap))}"
                )
                return
            confidence: Fraction | None = None
            if cursor.at("name", "confidence"):
                cursor.take()
                confidence = self._rational(cursor, "a confidence threshold")
                if confidence is None:
                    return
                if not 0 < confidence < 1:
                    cursor.error_here(f"confidence {confidence} is not strictly between 0 and 1")
                    return
            if not cursor.expect_end():
                return
            self.queries.append(
                ObliqueQuery(tuple(side), tuple(given), confidence, keyword.line, keyword.column)
            )
            return
        cursor._error(keyword, f"unknown query {keyword.text}; use affect, direct, or oblique")


def parse(text: str) -> ParseResult:
    """Parse a document; total, never raises on malformed input."""
    return _Parser(text).run()


def check_text(text: str) -> tuple[ParseDiagnostic, ...]:
    """Parse plus both lowerings: every diagnostic, deduplicated, in order."""
    result = parse(text)
    found = list(result.diagnostics)
    if result.document is not None:
        keys = {(d.line, d.column, d.message) for d in found}
        for lane in (lower_to_scm(result.document), lower_to_id(result.document)):
            for diagnostic in lane.diagnostics:
                key = (diagnostic.line, diagnostic.column, diagnostic.message)
                if key not in keys:
                    keys.add(key)
                    found.append(diagnostic)
    return tuple(found)


def _uses_boolean_operators(expr: Expr) -> bool:
    # Operators can only appear at the root of a non-table tree.
    return isinstance(expr, (NotExpr, AndExpr, OrExpr))


def _collect_refs(expr: Expr) -> tuple[str, ...]:
    """Referenced variables in order of first appearance."""
    out: list[str] = []

    def walk(node: Expr) -> None:
        if isinstance(node, VarRef):
            if node.name not in out:
                out.append(node.name)
        elif isinstance(node, NotExpr):
            walk(node.operand)
        elif isinstance(node, (AndExpr, OrExpr)):
            walk(node.left)
            walk(node.right)

    walk(expr)
    return tuple(out)


def _collect_lits(expr: Expr) -> tuple[Value, ...]:
    out: list[Value] = []

    def walk(node: Expr) -> None:
        if isinstance(node, Lit):
            out.append(node.value)
        elif isinstance(node, NotExpr):
            walk(node.operand)
        elif isinstance(node, (AndExpr, OrExpr)):
            walk(node.left)
            walk(node.right)

    walk(expr)
    return tuple(out)


def _domain_text(domain: Iterable[Value]) -> str:
    return "{" + ", ".join(_value_text(v) for v in domain) + "}"


def _value_text(value: Value) -> str:
    return str(value)


def _rational_text(value: Fraction) -> str:
    return str(value)


_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def _precedence(expr: Expr) -> int:
    if isinstance(expr, OrExpr):
        return _PREC_OR
    if isinstance(expr, AndExpr):
        return _PREC_AND
    if isinstance(expr, NotExpr):
        return _PREC_NOT
    return _PREC_ATOM


def _expr_text(expr: Expr) -> str:
    if isinstance(expr, TableExpr):
        rows = ", ".join(
            f"({', '.join(_value_text(v) for v in key)}): {_value_text(value)}"
            for key, value in expr.rows
        )
        return f"table({', '.join(expr.parents)}) {{ {rows} }}"
    if isinstance(expr, Lit):
        return _value_text(expr.value)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, NotExpr):
        inner = _expr_text(expr.operand)
        if _precedence(expr.operand) < _PREC_NOT:
            inner = f"({inner})"
        return f"!{inner}"
    op = "&" if isinstance(expr, AndExpr) else "|"
    mine = _precedence(expr)
    left = _expr_text(expr.left)
    if _precedence(expr.left) < mine:
        left = f"({left})"
    right = _expr_text(expr.right)
    if _precedence(expr.right) <= mine:
        right = f"({right})"
    return f"{left} {op} {right}"


def _literals_text(literals: Iterable[tuple[str, Value]]) -> str:
    return ", ".join(f"{name} = {_value_text(value)}" for name, value in literals)


def query_text(query: Query) -> str:
    """Canonical single-line rendering of a query, as the serializer emits it."""
    if isinstance(query, AffectQuery):
        return f"affect {', '.join(query.variables)}"
    if isinstance(query, DirectQuery):
        return f"direct {_literals_text(query.literals)}"
    line = f"oblique {_literals_text(query.side)} given {_literals_text(query.given)}"
    if query.confidence is not None:
        line += f" confidence {_rational_text(query.confidence)}"
    return line


def serialize(doc: ModelDocument) -> str:
    """Canonical text: fixed section order, LF endings, minimal parentheses."""
    sections: list[list[str]] = []
    lines = ["[variables]"]
    for v in doc.variables:
        lines.append(f"{v.name}: {v.kind} {_domain_text(v.domain)}")
    sections.append(lines)
    if doc.equations:
        lines = ["[equations]"]
        for e in doc.equations:
            lines.append(f"{e.target} = {_expr_text(e.expr)}")
        sections.append(lines)
    if doc.distribution:
        lines = ["[distribution]"]
        for d in doc.distribution:
            lines.append(f"{d.name}: {_rational_text(d.probability)}")
        sections.append(lines)
    if doc.utility_terms or doc.utility_default is not None:
        lines = ["[utility]"]
        for term in doc.utility_terms:
            condition = " & ".join(f"{n} = {_value_text(v)}" for n, v in term.condition)
            lines.append(f"{condition}: {_rational_text(term.value)}")
        if doc.utility_default is not None:
            lines.append(f"default: {_rational_text(doc.utility_default)}")
        sections.append(lines)
    if doc.reference is not None:
        r = doc.reference
        line = f"{r.action} = {_value_text(r.value)}"
        if r.alternatives is not None:
            line += f" vs {_domain_text(r.alternatives)}"
        sections.append(["[reference]", line])
    if doc.queries:
        lines = ["[queries]"]
        lines.extend(query_text(query) for query in doc.queries)
        sections.append(lines)
    return "\n\n".join("\n".join(lines) for lines in sections) + "\n"


def _evaluate(expr: Expr, env: Mapping[str, Value]) -> Value:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, VarRef):
        return env[expr.name]
    if isinstance(expr, NotExpr):
        return 1 if _evaluate(expr.operand, env) == 0 else 0
    if isinstance(expr, AndExpr):
        return 1 if _evaluate(expr.left, env) == 1 and _evaluate(expr.right, env) == 1 else 0
    if isinstance(expr, OrExpr):
        left, right = _evaluate(expr.left, env), _evaluate(expr.right, env)
        return 1 if left == 1 or right == 1 else 0
    raise ModelError("table expressions are tabulated, not evaluated")


def compile_equation(decl: EquationDecl, domains: Mapping[str, tuple[Value, ...]]) -> StructuralEquation:
    """Extensional table for one equation; sugar is tabulated over its parents."""
    if isinstance(decl.expr, TableExpr):
        return StructuralEquation(decl.target, decl.expr.parents, dict(decl.expr.rows))
    parents = _collect_refs(decl.expr)
    spaces = [domains[p] for p in parents]
    table = {
        key: _evaluate(decl.expr, dict(zip(parents, key)))
        for key in itertools.product(*spaces)
    }
    return StructuralEquation(decl.target, parents, table)


def _position_index(doc: ModelDocument) -> dict[str, tuple[int, int]]:
    index: dict[str, tuple[int, int]] = {}
    for v in doc.variables:
        index[v.name] = (v.line, v.column)
    for e in doc.equations:
        index[e.target] = (e.line, e.column)
    return index


def _semantic(message: str, position: tuple[int, int]) -> ParseDiagnostic:
    return ParseDiagnostic("error", position[0], position[1], message)


@dataclass(frozen=True)
class ScmLowering:
    """Causal-model lane: model, epistemic state, reference, and the queries."""

    model: CausalModel | None
    state: EpistemicState | None
    reference: ReferenceSet | None
    action_value: Value | None
    queries: tuple[Query, ...]
    diagnostics: tuple[ParseDiagnostic, ...]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


@dataclass(frozen=True)
class IdLowering:
    """Influence-diagram lane: the canonical-form diagram and the queries."""

    diagram: InfluenceDiagram | None
    queries: tuple[Query, ...]
    diagnostics: tuple[ParseDiagnostic, ...]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def lower_to_scm(doc: ModelDocument) -> ScmLowering:
    """Build the causal model, and the epistemic state when the document has one.

    The state needs a full distribution over the exogenous variables and a
    utility section with a default; intent queries additionally need a
    reference line over exactly one decision variable.
    """
    diagnostics: list[ParseDiagnostic] = []
    positions = _position_index(doc)

    def where(name: str) -> tuple[int, int]:
        return positions.get(name, (1, 1))

    exogenous = tuple(v.name for v in doc.variables if v.kind == "exogenous")
    endogenous = tuple(v.name for v in doc.variables if v.kind != "exogenous")
    domains = {v.name: v.domain for v in doc.variables}
    actions = tuple(v.name for v in doc.variables if v.kind == "decision")
    signature = Signature(exogenous, endogenous, domains)
    equations = {e.target: compile_equation(e, domains) for e in doc.equations}
    model = CausalModel(signature, equations, actions)
    for problem in validate_model(model):
        anchor = problem.variables[0] if problem.variables else ""
        diagnostics.append(_semantic(problem.message, where(anchor)))
    if diagnostics:
        return ScmLowering(None, None, None, None, doc.queries, tuple(diagnostics))

    wants_state = bool(
        doc.utility_terms or doc.utility_default is not None or doc.queries
    )
    state: EpistemicState | None = None
    if wants_state:
        params = {d.name: d.probability for d in doc.distribution}
        for name in exogenous:
            if name not in params:
                diagnostics.append(
                    _semantic(f"{name} has no distribution entry", where(name))
                )
        if doc.utility_default is None:
            anchor = doc.utility_terms[0] if doc.utility_terms else None
            position = (anchor.line, anchor.column) if anchor else (1, 1)
            diagnostics.append(_semantic("utility has no default", position))
        if not diagnostics:
            utility = UtilityFunction.from_rules(
                [(dict(term.condition), term.value) for term in doc.utility_terms],
                doc.utility_default,
            )
            state = product_state(model, params, utility)

    reference: ReferenceSet | None = None
    action_value: Value | None = None
    if doc.reference is not None:
        decl = doc.reference
        alternatives = decl.alternatives
        if alternatives is None:
            alternatives = tuple(v for v in domains[decl.action] if v != decl.value)
        reference = ReferenceSet(decl.action, alternatives)
        action_value = decl.value
    if doc.queries:
        if len(actions) != 1:
            diagnostics.append(
                _semantic(
                    f"intent queries need exactly one decision variable, found {len(actions)}",
                    (1, 1),
                )
            )
        if doc.reference is None:
            anchor = doc.queries[0]
            diagnostics.append(
                _semantic(
                    "queries need a reference line", (anchor.line, anchor.column)
                )
            )
    if diagnostics:
        return ScmLowering(None, None, None, None, doc.queries, tuple(diagnostics))
    return ScmLowering(model, state, reference, action_value, doc.queries, ())


def _fresh_name(existing: set[str], base: str) -> str:
    name = base
    while name in existing:
        name += "_"
    existing.add(name)
    return name


def lower_to_id(doc: ModelDocument) -> IdLowering:
    """Build the influence diagram: decisions, deterministic equation nodes,
    parentless noise for the exogenous variables, one utility node per term.

    The result is passed through the canonical-form rewrite (a fixpoint here,
    since all stochasticity already sits in parentless nodes).
    """
    diagnostics: list[ParseDiagnostic] = []
    positions = _position_index(doc)

    def where(name: str) -> tuple[int, int]:
        return positions.get(name, (1, 1))

    params = {d.name: d.probability for d in doc.distribution}
    equations = {e.target: e for e in doc.equations}
    domains = {v.name: v.domain for v in doc.variables}

    decisions: list[DecisionNode] = []
    chances: list[ChanceNode] = []
    for v in doc.variables:
        if v.kind == "decision":
            decisions.append(DecisionNode(v.name, v.domain))
        elif v.kind == "exogenous":
            if v.name not in params:
                diagnostics.append(
                    _semantic(f"{v.name} has no distribution entry", where(v.name))
                )
                continue
            p = params[v.name]
            chances.append(
                ChanceNode(
                    v.name,
                    v.domain,
                    (),
                    {(): (1 - p, p)},
                    deterministic=p in (0, 1),
                )
            )
        else:
            decl = equations.get(v.name)
            if decl is None:
                diagnostics.append(
                    _semantic(f"{v.name} has no equation", where(v.name))
                )
                continue
            equation = compile_equation(decl, domains)
            mapping = dict(equation.table)
            expected = set(itertools.product(*[domains[p] for p in equation.parents]))
            if set(mapping) != expected:
                diagnostics.append(
                    _semantic(
                        f"table for {v.name} does not cover its parent space",
                        where(v.name),
                    )
                )
                continue
            chances.append(
                ChanceNode.table(v.name, v.domain, equation.parents, mapping)
            )

    if doc.utility_terms and doc.utility_default is None:
        anchor = doc.utility_terms[0]
        diagnostics.append(
            _semantic("utility has no default", (anchor.line, anchor.column))
        )
    if diagnostics:
        return IdLowering(None, doc.queries, tuple(diagnostics))

    existing = {v.name for v in doc.variables}
    utilities: list[UtilityNode] = []
    for number, term in enumerate(doc.utility_terms, start=1):
        parents = tuple(name for name, _ in term.condition)
        wanted = tuple(value for _, value in term.condition)
        table = {
            key: term.value if key == wanted else Fraction(0)
            for key in itertools.product(*[domains[p] for p in parents])
        }
        utilities.append(UtilityNode(_fresh_name(existing, f"U{number}"), parents, table))
    default = doc.utility_default
    if default is not None and default != 0:
        parents = []
        for term in doc.utility_terms:
            for name, _ in term.condition:
                if name not in parents:
                    parents.append(name)
        conditions = [term.condition for term in doc.utility_terms]
        table = {}
        for key in itertools.product(*[domains[p] for p in parents]):
            env = dict(zip(parents, key))
            matched = any(
                all(env[name] == value for name, value in condition)
                for condition in conditions
            )
            table[key] = Fraction(0) if matched else default
        utilities.append(
            UtilityNode(_fresh_name(existing, "U_default"), tuple(parents), table)
        )

    first_equation = doc.equations[0] if doc.equations else None
    anchor = (
        (first_equation.line, first_equation.column) if first_equation else (1, 1)
    )
    try:
        diagram = InfluenceDiagram(tuple(decisions), tuple(chances), tuple(utilities))
    except ModelError as error:
        return IdLowering(
            None, doc.queries, (_semantic(str(error), anchor),)
        )
    return IdLowering(to_howard_canonical_form(diagram), doc.queries, ())
