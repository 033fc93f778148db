"""First-order terms, literals and clauses (function-free)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Iterable, Mapping, Optional

CONST, VAR, NUM, TIME = "const", "var", "num", "time"
TERM_KINDS = (CONST, VAR, NUM, TIME)

# builtin predicates evaluated when their arguments are ground values
BUILTINS = frozenset({"lt", "leq", "eq_num", "before", "after", "same_time", "eq"})
DEFAULT_EQ_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True)
class Term:
    kind: str
    value: Any

    def __post_init__(self) -> None:
        if self.kind not in TERM_KINDS:
            raise ValueError(f"bad term kind {self.kind!r}")

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    def __str__(self) -> str:
        if self.kind == VAR:
            return "?" + self.value
        if self.kind == NUM:
            v = self.value
            return repr(int(v)) if isinstance(v, float) and v.is_integer() else repr(v)
        if self.kind == TIME:
            return self.value.isoformat()
        return self.value

    def __repr__(self) -> str:
        return f"Term({self})"


def var(name: str) -> Term:
    return Term(VAR, name)


def const(name: str) -> Term:
    return Term(CONST, name)


def num(x) -> Term:
    if isinstance(x, float) and x.is_integer():
        x = int(x)
    return Term(NUM, x)


def timepoint(d: date) -> Term:
    return Term(TIME, d)


def term_from_value(value) -> Term:
    """Map a triple object literal to a term."""
    if isinstance(value, bool):
        raise TypeError("booleans are not terms")
    if isinstance(value, (int, float)):
        return num(value)
    if isinstance(value, date):
        return timepoint(value)
    return const(value)


def term_to_value(term: Term):
    if term.kind == VAR:
        raise ValueError(f"variable {term} has no value")
    return term.value


Substitution = Mapping[str, Term]


@dataclass(frozen=True, slots=True)
class Literal:
    predicate: str
    args: tuple[Term, ...]
    negated: bool = False

    @property
    def is_builtin(self) -> bool:
        return self.predicate in BUILTINS

    @property
    def is_ground(self) -> bool:
        return not any(a.kind == VAR for a in self.args)

    def variables(self) -> set[str]:
        return {a.value for a in self.args if a.kind == VAR}

    def complement(self) -> "Literal":
        return Literal(self.predicate, self.args, not self.negated)

    def atom(self) -> "Literal":
        return Literal(self.predicate, self.args, False) if self.negated else self

    def substitute(self, subst: Substitution) -> "Literal":
        if not subst:
            return self
        return Literal(self.predicate, tuple(subst.get(a.value, a) if a.kind == VAR else a for a in self.args), self.negated)

    def __str__(self) -> str:
        body = f"{self.predicate}({','.join(str(a) for a in self.args)})" if self.args else self.predicate
        return ("~" if self.negated else "") + body

    def __repr__(self) -> str:
        return f"Literal({self})"


def literal_sort_key(lit: Literal) -> tuple:
    return (lit.negated, lit.predicate, len(lit.args), tuple(str(a) for a in lit.args))


@dataclass(frozen=True)
class Clause:
    """Disjunction of literals; the empty clause is a contradiction.

    ``source`` carries the object a premise was built from (a graph edge, a
    rule) and is ignored by equality.
    """

    literals: frozenset[Literal]
    origin: str = field(default="premise", compare=False)
    source: Any = field(default=None, compare=False)

    @classmethod
    def of(cls, *literals: Literal, origin: str = "premise", source: Any = None) -> "Clause":
        return cls(frozenset(literals), origin, source)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    @property
    def is_unit(self) -> bool:
        return len(self.literals) == 1

    @property
    def is_horn(self) -> bool:
        return sum(1 for lit in self.literals if not lit.negated) <= 1

    def variables(self) -> set[str]:
        out: set[str] = set()
        for lit in self.literals:
            out |= lit.variables()
        return out

    def substitute(self, subst: Substitution) -> "Clause":
        return Clause(frozenset(lit.substitute(subst) for lit in self.literals), self.origin, self.source)

    def sorted_literals(self) -> list[Literal]:
        return sorted(self.literals, key=literal_sort_key)

    def __len__(self) -> int:
        return len(self.literals)

    def __str__(self) -> str:
        if not self.literals:
            return "[]"
        return " | ".join(str(lit) for lit in self.sorted_literals())


def evaluate_builtin(lit: Literal, tolerance: float = DEFAULT_EQ_TOLERANCE) -> Optional[bool]:
    """Truth value of the atom of a builtin literal, or None if not evaluable.

    Ordering builtins need two numbers (``lt``, ``leq``, ``eq_num``) or two
    timepoints (``before``, ``after``, ``same_time``; ``lt``/``leq`` also
    accept timepoints). ``eq`` decides identity of any two ground terms under
    unique names, with numbers compared within ``tolerance``. Kind mismatches
    evaluate to False once the arguments are ground values.
    """
    if lit.predicate not in BUILTINS or len(lit.args) != 2:
        return None
    a, b = lit.args
    if a.kind == VAR or b.kind == VAR:
        return None
    p = lit.predicate
    if p == "eq":
        if a.kind != b.kind:
            return False
        if a.kind == NUM:
            return abs(a.value - b.value) <= tolerance
        return a.value == b.value
    if p in ("lt", "leq", "eq_num"):
        if a.kind == NUM and b.kind == NUM:
            x, y = a.value, b.value
        elif a.kind == TIME and b.kind == TIME and p != "eq_num":
            x, y = a.value, b.value
        elif a.kind == CONST or b.kind == CONST:
            return None
        else:
            return False
        if p == "lt":
            return x < y
        if p == "leq":
            return x <= y
        return math.isclose(x, y, rel_tol=0.0, abs_tol=tolerance)
    # temporal builtins; constants name events and stay uninterpreted
    if a.kind == CONST or b.kind == CONST:
        return None
    if a.kind != TIME or b.kind != TIME:
        return False
    if p == "before":
        return a.value < b.value
    if p == "after":
        return a.value > b.value
    return a.value == b.value


def literal_truth(lit: Literal, tolerance: float = DEFAULT_EQ_TOLERANCE) -> Optional[bool]:
    val = evaluate_builtin(lit, tolerance)
    if val is None:
        return None
    return (not val) if lit.negated else val


def make_literal(predicate: str, *args: Any, negated: bool = False) -> Literal:
    """Convenience builder: strings starting with '?' are variables."""
    terms = []
    for a in args:
        if isinstance(a, Term):
            terms.append(a)
        elif isinstance(a, str) and a.startswith("?"):
            terms.append(var(a[1:]))
        else:
            terms.append(term_from_value(a))
    return Literal(predicate, tuple(terms), negated)


def clause_variables(clauses: Iterable[Clause]) -> set[str]:
    out: set[str] = set()
    for c in clauses:
        out |= c.variables()
    return out
