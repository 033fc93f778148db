"""Proof traces emitted by the prover."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from claimguard.logic.syntax import parse_clause, parse_literal
from claimguard.logic.terms import Clause, Literal, Term

INPUT, RESOLVE, FACTOR, BUILTIN = "input", "resolve", "factor", "builtin"


def _term_from_text(text: str) -> Term:
    return parse_literal(f"t({text})").args[0]


@dataclass(frozen=True)
class ProofStep:
    """One derivation step.

    ``resolve``: ``literals`` holds the resolved-upon literal of each parent as
    it appears in that parent; the second parent's variables are first renamed
    by ``renaming`` and both sides then instantiated by ``unifier``.
    ``factor``: two literals of the parent merged by ``unifier``.
    ``builtin``: ground builtin literals of the parent that evaluated false
    were dropped.
    """

    id: int
    rule: str
    parents: tuple[int, ...]
    clause: Clause
    unifier: tuple[tuple[str, Term], ...] = ()
    literals: tuple[Literal, ...] = ()
    renaming: tuple[tuple[str, str], ...] = ()
    label: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "rule": self.rule,
            "parents": list(self.parents),
            "clause": str(self.clause),
            "unifier": {k: str(v) for k, v in self.unifier},
            "literals": [str(lit) for lit in self.literals],
            "renaming": {k: v for k, v in self.renaming},
            "label": self.label,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProofStep":
        return cls(
            id=int(d["id"]),
            rule=d["rule"],
            parents=tuple(int(p) for p in d["parents"]),
            clause=parse_clause(d["clause"]),
            unifier=tuple((k, _term_from_text(v)) for k, v in sorted(d["unifier"].items())),
            literals=tuple(parse_literal(s) for s in d["literals"]),
            renaming=tuple(sorted(d["renaming"].items())),
            label=d.get("label", ""),
        )

    def describe(self) -> str:
        if self.rule == INPUT:
            return f"[{self.id}] {self.clause}    ({self.label or 'input'})"
        if self.rule == RESOLVE:
            mgu = ", ".join(f"?{k}:={v}" for k, v in self.unifier)
            return (
                f"[{self.id}] {self.clause}    (resolve {self.parents[0]},{self.parents[1]}"
                f" on {self.literals[0]}" + (f" with {{{mgu}}}" if mgu else "") + ")"
            )
        if self.rule == FACTOR:
            mgu = ", ".join(f"?{k}:={v}" for k, v in self.unifier)
            return f"[{self.id}] {self.clause}    (factor {self.parents[0]} with {{{mgu}}})"
        dropped = ", ".join(str(lit) for lit in self.literals)
        return f"[{self.id}] {self.clause}    (evaluate {self.parents[0]}: {dropped} is false)"


@dataclass(frozen=True)
class ProofTrace:
    steps: tuple[ProofStep, ...]
    goal: Optional[Literal] = None

    @property
    def conclusion(self) -> Clause:
        return self.steps[-1].clause

    @property
    def inputs(self) -> list[ProofStep]:
        return [s for s in self.steps if s.rule == INPUT]

    @property
    def resolution_steps(self) -> int:
        return sum(1 for s in self.steps if s.rule == RESOLVE)

    def input_sources(self) -> list[Any]:
        return [s.clause.source for s in self.inputs if s.clause.source is not None]

    def render(self) -> list[str]:
        return [s.describe() for s in self.steps]

    def to_json(self) -> dict:
        return {
            "goal": None if self.goal is None else str(self.goal),
            "steps": [s.to_json() for s in self.steps],
        }

    @classmethod
    def from_json(cls, d: Any) -> "ProofTrace":
        return cls(
            steps=tuple(ProofStep.from_json(s) for s in d["steps"]),
            goal=None if d.get("goal") is None else parse_literal(d["goal"]),
        )
