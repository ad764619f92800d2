"""Lexer and recursive-descent parser for RCNDL source text.

The language has three clause forms, each terminated by a period:

    ?- A : [0.3, 0.7]; B, C : [ ... ].     query (root cliques with priors)
    A, B -> C : [p00, p01, p10, p11].      inference rule
    D, E.                                  observation declaration

Identifiers start with a letter and continue with letters, digits or
underscores.  ``%`` starts a comment running to end of line.  Probability
literals must lie in [0, 1]; the sentinel ``-1.0`` is accepted to mean
"unknown" and is resolved later by the preprocessor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ArityError, ParseError
from .model import (
    Clause,
    ObservationClause,
    QueryClause,
    RuleClause,
    Scope,
    SourcePos,
    UNKNOWN,
)

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>%[^\n]*)
    | (?P<query>\?\s*-)
    | (?P<arrow>->)
    | (?P<number>-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)
    | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
    | (?P<punct>[\[\],;:.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            tok_kind = lexeme if kind == "punct" else kind
            tokens.append(Token(tok_kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass(frozen=True)
class SourceProgram:
    """The parsed clause list, in source order."""

    clauses: tuple[Clause, ...]

    @property
    def query(self) -> QueryClause | None:
        for c in self.clauses:
            if isinstance(c, QueryClause):
                return c
        return None


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                tok.line, tok.column,
            )
        return self.next()

    # clause := "?-" query "." | head "->" body "." | observations "."
    def program(self) -> SourceProgram:
        clauses: list[Clause] = []
        seen_query = False
        while self.peek().kind != "eof":
            clause = self.clause()
            if isinstance(clause, QueryClause):
                if seen_query:
                    raise ParseError(
                        "multiple query clauses are not supported",
                        clause.pos.line, clause.pos.column,
                    )
                seen_query = True
            clauses.append(clause)
        return SourceProgram(tuple(clauses))

    def clause(self) -> Clause:
        tok = self.peek()
        pos = SourcePos(tok.line, tok.column)
        if tok.kind == "query":
            self.next()
            cliques = [self.clique()]
            while self.peek().kind == ";":
                self.next()
                cliques.append(self.clique())
            self.expect(".")
            return QueryClause(tuple(cliques), pos)

        names = self.proposition_list()
        tok = self.peek()
        if tok.kind == "arrow":
            self.next()
            body = self.expect("ident").text
            self.expect(":")
            head = Scope(names)
            cond = self.pr_list(head.n_states, "rule head")
            self.expect(".")
            return RuleClause(head, body, cond, pos)
        if tok.kind == ".":
            self.next()
            if len(set(names)) != len(names):
                raise ParseError("duplicate variable in observation clause",
                                 pos.line, pos.column)
            return ObservationClause(tuple(names), pos)
        raise ParseError(
            f"expected '->' or '.', found {tok.text or 'end of input'!r}",
            tok.line, tok.column,
        )

    def clique(self) -> tuple[Scope, tuple[float, ...]]:
        names = self.proposition_list()
        self.expect(":")
        scope = Scope(names)
        return scope, self.pr_list(scope.n_states, "query clique")

    def proposition_list(self) -> list[str]:
        names = [self.expect("ident").text]
        while self.peek().kind == ",":
            self.next()
            names.append(self.expect("ident").text)
        return names

    def pr_list(self, expected: int, what: str) -> tuple[float, ...]:
        open_tok = self.expect("[")
        values = [self.pr()]
        while self.peek().kind == ",":
            self.next()
            values.append(self.pr())
        self.expect("]")
        if len(values) != expected:
            raise ArityError(
                f"{open_tok.line}:{open_tok.column}: probability list for "
                f"{what} needs {expected} entries, got {len(values)}"
            )
        return tuple(values)

    def pr(self) -> float:
        tok = self.expect("number")
        value = float(tok.text)
        if value == UNKNOWN:
            return UNKNOWN
        if not 0.0 <= value <= 1.0:
            raise ParseError(
                f"probability literal {tok.text} outside [0, 1]",
                tok.line, tok.column,
            )
        return value


def parse_program(text: str) -> SourceProgram:
    """Parse RCNDL source into a clause list, or raise a positioned ParseError."""
    return _Parser(tokenize(text)).program()


def _fmt(x: float) -> str:
    """Shortest literal that round-trips the float value."""
    return repr(x)


def render_program(program: SourceProgram) -> str:
    """Canonical source text; ``parse_program(render_program(p))`` equals ``p``
    structurally (positions aside)."""
    lines = []
    for clause in program.clauses:
        if isinstance(clause, QueryClause):
            parts = [
                f"{', '.join(scope.vars)} : [{', '.join(_fmt(v) for v in prior)}]"
                for scope, prior in clause.cliques
            ]
            lines.append("?- " + "; ".join(parts) + ".")
        elif isinstance(clause, RuleClause):
            lines.append(
                f"{', '.join(clause.head.vars)} -> {clause.body} : "
                f"[{', '.join(_fmt(v) for v in clause.cond)}]."
            )
        else:
            lines.append(f"{', '.join(clause.vars)}.")
    return "\n".join(lines) + ("\n" if lines else "")
