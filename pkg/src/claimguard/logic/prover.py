"""Given-clause resolution prover for function-free clauses.

Clause sets that are entirely Horn are saturated with unit resolution, which
is refutation complete for Horn sets and terminates here because every
resolvent is shorter than its non-unit parent. Other sets fall back to binary
resolution plus factoring under the clause and depth budgets.

Given clauses are picked smallest first, ties by creation order, so traces
are reproducible run to run.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Optional

from claimguard.logic.terms import (
    DEFAULT_EQ_TOLERANCE,
    VAR,
    Clause,
    Literal,
    Term,
    literal_truth,
)
from claimguard.logic.trace import BUILTIN, FACTOR, INPUT, RESOLVE, ProofStep, ProofTrace
from claimguard.logic.unify import unify

PROVED = "proved"
SATURATED = "saturated"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class ProverLimits:
    max_clauses: int = 50_000
    max_depth: int = 40
    eq_tolerance: float = DEFAULT_EQ_TOLERANCE

    def __post_init__(self) -> None:
        if self.max_clauses <= 0 or self.max_depth <= 0:
            raise ValueError("prover limits must be positive")


@dataclass(frozen=True)
class ProveResult:
    proof: Optional[ProofTrace]
    outcome: str
    premises_inconsistent: bool = False
    clauses_generated: int = 0
    strategy: str = "unit"

    @property
    def proved(self) -> bool:
        return self.proof is not None


def canonical_form(clause: Clause) -> tuple[tuple, Clause]:
    """Variant-insensitive key plus a copy with variables renamed v0, v1, ..."""

    def shape(lit: Literal) -> tuple:
        return (lit.negated, lit.predicate, tuple("?" if a.kind == VAR else str(a) for a in lit.args))

    ordered = sorted(clause.literals, key=shape)
    names: dict[str, Term] = {}
    for lit in ordered:
        for a in lit.args:
            if a.kind == VAR and a.value not in names:
                names[a.value] = Term(VAR, f"v{len(names)}")
    renamed = clause.substitute(names) if names else clause
    key = tuple(sorted((l.negated, l.predicate, tuple(str(a) for a in l.args)) for l in renamed.literals))
    return key, renamed


def _is_tautology(lits: frozenset[Literal]) -> bool:
    return any(lit.complement() in lits for lit in lits if not lit.negated)


def simplify(clause: Clause, tolerance: float = DEFAULT_EQ_TOLERANCE) -> tuple[Optional[Clause], tuple[Literal, ...]]:
    """Evaluate ground builtins: true literals satisfy the clause (returns None),
    false ones are dropped. Tautologies also return None."""
    dropped = []
    kept = []
    for lit in clause.literals:
        truth = literal_truth(lit, tolerance) if lit.is_builtin else None
        if truth is True:
            return None, ()
        if truth is False:
            dropped.append(lit)
        else:
            kept.append(lit)
    lits = frozenset(kept)
    if _is_tautology(lits):
        return None, ()
    if not dropped:
        return clause, ()
    return Clause(lits, clause.origin, clause.source), tuple(sorted(dropped, key=str))


class _Record:
    __slots__ = ("id", "clause", "depth", "tracked")

    def __init__(self, id: int, clause: Clause, depth: int, tracked: bool) -> None:
        self.id = id
        self.clause = clause
        self.depth = depth
        self.tracked = tracked


class _Session:
    def __init__(self, limits: ProverLimits, tracking: bool, horn: bool) -> None:
        self.limits = limits
        self.tracking = tracking
        self.horn = horn
        self.steps: dict[int, ProofStep] = {}
        self.records: dict[int, _Record] = {}
        self.next_id = 0
        self.seen: set[tuple] = set()
        self.passive: list[tuple[int, int]] = []
        self.active_units: dict[tuple[str, bool], list[int]] = {}
        self.active_lits: dict[tuple[str, bool], list[tuple[int, Literal]]] = {}
        self.depth_pruned = False
        self.found: Optional[int] = None

    def _new_id(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i

    def admit(self, step: ProofStep, depth: int, tracked: bool) -> None:
        """Record a derived clause, simplify it, dedupe and queue it."""
        self.steps[step.id] = step
        clause, dropped = simplify(step.clause, self.limits.eq_tolerance)
        if clause is None:
            return
        parent = step.id
        if dropped:
            key, canon = canonical_form(clause)
            sid = self._new_id()
            self.steps[sid] = ProofStep(sid, BUILTIN, (parent,), canon, literals=dropped)
            parent = sid
        else:
            key, canon = canonical_form(clause)
            if canon != step.clause:
                # keep stored clauses canonical; the step records the same clause up to renaming
                self.steps[step.id] = ProofStep(
                    step.id, step.rule, step.parents, canon, step.unifier, step.literals, step.renaming, step.label
                )
        tracked = tracked and self.tracking
        dedupe_key = (key, tracked)
        if dedupe_key in self.seen:
            return
        self.seen.add(dedupe_key)
        rec = _Record(parent, canon, depth, tracked)
        self.records[parent] = rec
        if canon.is_empty and (tracked or not self.tracking):
            self.found = parent
            return
        heapq.heappush(self.passive, (len(canon), parent))

    def add_input(self, clause: Clause, label: str, tracked: bool) -> None:
        _, canon = canonical_form(clause)
        sid = self._new_id()
        self.admit(ProofStep(sid, INPUT, (), canon, label=label), 0, tracked)

    def activate(self, rec: _Record) -> None:
        for lit in rec.clause.literals:
            self.active_lits.setdefault((lit.predicate, lit.negated), []).append((rec.id, lit))
        if rec.clause.is_unit:
            (lit,) = rec.clause.literals
            self.active_units.setdefault((lit.predicate, lit.negated), []).append(rec.id)

    def resolve(self, a: _Record, la: Literal, b: _Record, lb: Literal) -> None:
        renaming = {v: Term(VAR, v + "_r") for v in b.clause.variables()}
        lb_r = lb.substitute(renaming)
        sigma = unify(la, lb_r)
        if sigma is None:
            return
        depth = max(a.depth, b.depth) + 1
        if depth > self.limits.max_depth:
            self.depth_pruned = True
            return
        lits = {l.substitute(sigma) for l in a.clause.literals if l != la}
        lits |= {l.substitute(renaming).substitute(sigma) for l in b.clause.literals if l != lb}
        sid = self._new_id()
        step = ProofStep(
            sid,
            RESOLVE,
            (a.id, b.id),
            Clause(frozenset(lits), origin="resolvent"),
            unifier=tuple(sorted(sigma.items())),
            literals=(la, lb),
            renaming=tuple(sorted((k, v.value) for k, v in renaming.items())),
        )
        self.admit(step, depth, a.tracked or b.tracked)

    def factor(self, rec: _Record) -> None:
        lits = rec.clause.sorted_literals()
        for i, x in enumerate(lits):
            for y in lits[i + 1 :]:
                if x.negated != y.negated or x.predicate != y.predicate:
                    continue
                sigma = unify(x, y)
                if not sigma:
                    continue
                depth = rec.depth + 1
                if depth > self.limits.max_depth:
                    self.depth_pruned = True
                    continue
                sid = self._new_id()
                step = ProofStep(
                    sid,
                    FACTOR,
                    (rec.id,),
                    rec.clause.substitute(sigma),
                    unifier=tuple(sorted(sigma.items())),
                    literals=(x, y),
                )
                self.admit(step, depth, rec.tracked)
                if self.found is not None:
                    return

    def infer(self, given: _Record) -> None:
        records = self.records
        if self.horn:
            if given.clause.is_unit:
                (lit,) = given.clause.literals
                for rid, other in list(self.active_lits.get((lit.predicate, not lit.negated), ())):
                    self.resolve(given, lit, records[rid], other)
                    if self.found is not None or self.over_budget():
                        return
            else:
                for lit in given.clause.sorted_literals():
                    for rid in list(self.active_units.get((lit.predicate, not lit.negated), ())):
                        unit = records[rid]
                        (other,) = unit.clause.literals
                        self.resolve(given, lit, unit, other)
                        if self.found is not None or self.over_budget():
                            return
            return
        self.factor(given)
        if self.found is not None:
            return
        for lit in given.clause.sorted_literals():
            for rid, other in list(self.active_lits.get((lit.predicate, not lit.negated), ())):
                self.resolve(given, lit, records[rid], other)
                if self.found is not None or self.over_budget():
                    return

    def over_budget(self) -> bool:
        return len(self.records) >= self.limits.max_clauses

    def run(self) -> str:
        if self.found is not None:
            return PROVED
        while self.passive:
            _, gid = heapq.heappop(self.passive)
            given = self.records[gid]
            self.activate(given)
            self.infer(given)
            if self.found is not None:
                return PROVED
            if self.over_budget():
                return BUDGET_EXHAUSTED
        return BUDGET_EXHAUSTED if self.depth_pruned else SATURATED

    def extract(self, goal: Optional[Literal]) -> ProofTrace:
        needed: set[int] = set()
        stack = [self.found]
        while stack:
            sid = stack.pop()
            if sid in needed:
                continue
            needed.add(sid)
            stack.extend(self.steps[sid].parents)
        return ProofTrace(tuple(self.steps[i] for i in sorted(needed)), goal)


def theorem_prove(
    premises: Iterable[Clause],
    goal: Optional[Literal] = None,
    limits: ProverLimits = ProverLimits(),
    require_goal: bool = False,
) -> ProveResult:
    """Refute ``premises`` plus the negated ``goal``.

    With ``require_goal`` only refutations that use the negated goal count,
    so inconsistent premises do not prove arbitrary goals. Without it such a
    refutation is returned and flagged via ``premises_inconsistent``.
    """
    if goal is not None and not goal.is_ground:
        raise ValueError(f"goal must be ground: {goal}")
    premises = list(premises)
    negated_goal = Clause.of(goal.complement(), origin="negated-goal") if goal is not None else None
    all_inputs = premises + ([negated_goal] if negated_goal is not None else [])
    horn = all(c.is_horn for c in all_inputs)
    tracking = require_goal and negated_goal is not None
    session = _Session(limits, tracking, horn)
    for clause in premises:
        session.add_input(clause, clause.origin, tracked=False)
        if session.found is not None:
            break
    goal_input_id = None
    if negated_goal is not None and session.found is None:
        goal_input_id = session.next_id
        session.add_input(negated_goal, "negated-goal", tracked=True)
    outcome = session.run()
    strategy = "unit" if horn else "binary"
    generated = session.next_id
    if outcome != PROVED:
        return ProveResult(None, outcome, False, generated, strategy)
    proof = session.extract(goal)
    used_goal = goal_input_id is not None and any(s.id == goal_input_id for s in proof.steps)
    inconsistent = goal is None or not used_goal
    return ProveResult(proof, PROVED, inconsistent, generated, strategy)
