"""Textual FOL syntax.

    literal  ::= ['~'] NAME ['(' term (',' term)* ')']
    clause   ::= '[]' | literal ('|' literal)*
    rule     ::= literal ('&' literal)* '->' (literal | 'false')
    term     ::= '?'NAME | NUMBER | YYYY-MM-DD | NAME

Names are taken verbatim; numbers and ISO dates become value terms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from typing import Optional

from claimguard.logic.terms import Clause, Literal, Term, const, num, timepoint, var

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<date>\d{4}-\d{2}-\d{2}(?![\w.]))
  | (?P<num>-?\d+(?:\.\d+)?(?![\w]))
  | (?P<var>\?\w+)
  | (?P<name>\w*[^\W\d]\w*)
  | (?P<arrow>->)
  | (?P<empty>\[\])
  | (?P<punct>[(),|~&])
    """,
    re.VERBOSE,
)


class FolParseError(ValueError):
    def __init__(self, message: str, text: str, position: int) -> None:
        self.message = message
        self.text = text
        self.position = position
        super().__init__(self.render())

    def render(self) -> str:
        line_start = self.text.rfind("\n", 0, self.position) + 1
        line_end = self.text.find("\n", self.position)
        if line_end < 0:
            line_end = len(self.text)
        line = self.text[line_start:line_end]
        caret = " " * (self.position - line_start) + "^"
        return f"{self.message} at column {self.position - line_start + 1}\n  {line}\n  {caret}"


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FolParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind if kind != "punct" else m.group(), m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[_Tok] = None) -> FolParseError:
        tok = tok or self.cur
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return FolParseError(f"{message}, found {found}", self.text, tok.pos)

    def take(self, kind: str) -> _Tok:
        if self.cur.kind != kind:
            raise self.error(f"expected {kind!r}")
        tok = self.cur
        self.i += 1
        return tok

    def accept(self, kind: str) -> Optional[_Tok]:
        if self.cur.kind == kind:
            tok = self.cur
            self.i += 1
            return tok
        return None

    def term(self) -> Term:
        tok = self.cur
        if tok.kind == "var":
            self.i += 1
            return var(tok.text[1:])
        if tok.kind == "num":
            self.i += 1
            return num(float(tok.text) if "." in tok.text else int(tok.text))
        if tok.kind == "date":
            self.i += 1
            try:
                return timepoint(date.fromisoformat(tok.text))
            except ValueError:
                raise FolParseError(f"invalid date {tok.text!r}", self.text, tok.pos) from None
        if tok.kind == "name":
            self.i += 1
            return const(tok.text)
        raise self.error("expected a term")

    def literal(self) -> Literal:
        negated = self.accept("~") is not None
        name = self.take("name").text
        args: list[Term] = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.take(")")
        return Literal(name, tuple(args), negated)

    def clause(self) -> Clause:
        if self.accept("empty"):
            return Clause(frozenset())
        lits = [self.literal()]
        while self.accept("|"):
            lits.append(self.literal())
        return Clause(frozenset(lits))

    def rule(self) -> tuple[tuple[Literal, ...], Optional[Literal]]:
        body = [self.literal()]
        while self.accept("&"):
            body.append(self.literal())
        self.take("arrow")
        if self.cur.kind == "name" and self.cur.text == "false" and self.toks[self.i + 1].kind == "eof":
            self.i += 1
            return tuple(body), None
        return tuple(body), self.literal()

    def end(self) -> None:
        if self.cur.kind != "eof":
            raise self.error("unexpected trailing input")


def parse_literal(text: str) -> Literal:
    p = _Parser(text)
    lit = p.literal()
    p.end()
    return lit


def parse_clause(text: str) -> Clause:
    p = _Parser(text)
    c = p.clause()
    p.end()
    return c


def parse_rule_text(text: str) -> tuple[tuple[Literal, ...], Optional[Literal]]:
    """Parse ``body -> head``; a head of ``false`` yields ``None`` (integrity constraint)."""
    p = _Parser(text)
    out = p.rule()
    p.end()
    return out


def format_clause(clause: Clause) -> str:
    return str(clause)
