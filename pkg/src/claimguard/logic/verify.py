"""Symbolic verification of claims against a closed knowledge graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from claimguard.logic.prover import ProverLimits, theorem_prove
from claimguard.logic.terms import Clause, Literal, const, term_from_value, var
from claimguard.logic.trace import ProofTrace

# event order and causation over entities; dated events order through the
# ``before`` builtin. kgraph.Rule objects are built by ``shipped_rules``
TEMPORAL_AXIOMS = (
    "precedes(?a,?b) & precedes(?b,?c) -> precedes(?a,?c)",
    "follows(?a,?b) -> precedes(?b,?a)",
    "precedes(?a,?b) -> follows(?b,?a)",
    "coincides(?a,?b) -> coincides(?b,?a)",
    "happened_on(?a,?d) & happened_on(?b,?e) & before(?d,?e) -> precedes(?a,?b)",
    "precedes(?a,?b) & precedes(?b,?a) -> false",
)
CAUSAL_AXIOMS = (
    "causes(?a,?b) & causes(?b,?c) -> causes(?a,?c)",
    "causes(?a,?b) & causes(?b,?a) -> false",
)


def shipped_rules():
    from claimguard.kgraph import parse_rule

    return [parse_rule(line) for line in TEMPORAL_AXIOMS + CAUSAL_AXIOMS]


def translate_to_fol(claim) -> Literal:
    """Ground literal ``predicate(subject, object)``, negated for negated claims."""
    t = claim.triple
    return Literal(t.predicate, (const(t.subject), term_from_value(t.object)), claim.polarity == "negated")


def edge_clause(triple) -> Clause:
    return Clause.of(
        Literal(triple.predicate, (const(triple.subject), term_from_value(triple.object))),
        origin="edge",
        source=triple,
    )


def rule_clause(rule) -> Clause:
    lits = {lit.complement() for lit in rule.body}
    if rule.head is not None:
        lits.add(rule.head)
    return Clause(frozenset(lits), origin="constraint" if rule.head is None else "rule", source=rule)


def functional_clause(predicate: str, range_kind: Optional[str] = None) -> Clause:
    """``~p(x,y) | ~p(x,z) | eq(y,z)`` with the equality suited to the range."""
    eq = {"number": "eq_num", "date": "same_time"}.get(range_kind or "", "eq")
    x, y, z = var("x"), var("y"), var("z")
    return Clause.of(
        Literal(predicate, (x, y), True),
        Literal(predicate, (x, z), True),
        Literal(eq, (y, z)),
        origin="functional",
        source=f"functional {predicate}",
    )


def declaration_clauses(declarations) -> list[Clause]:
    if declarations is None:
        return []
    return [functional_clause(p, declarations.range_of(p)) for p in sorted(declarations.functional)]


def _constants(lit: Literal) -> set[str]:
    return {a.value for a in lit.args if a.kind == "const"}


def extract_premises(graph, goal: Literal, rules: Sequence = (), declarations=None) -> list[Clause]:
    """Premises relevant to ``goal``.

    Edges in the connected neighbourhood of the goal's entities, plus any
    edge over the goal predicate; rules mentioning a selected predicate;
    every declaration constraint.
    """
    neighbourhood = graph.component(_constants(goal))
    selected = []
    for t in sorted(graph.edges, key=lambda t: t.sort_key()):
        if t.predicate == goal.predicate or t.subject in neighbourhood or (
            t.object_kind == "entity" and t.object in neighbourhood
        ):
            selected.append(t)
    predicates = {goal.predicate} | {t.predicate for t in selected}
    clauses = [edge_clause(t) for t in selected]
    clauses += [rule_clause(r) for r in rules if r.predicates & predicates]
    clauses += declaration_clauses(declarations)
    return clauses


def _evidence(proof: ProofTrace) -> tuple:
    from claimguard.model import sorted_triples

    return tuple(sorted_triples(s for s in proof.input_sources() if hasattr(s, "subject")))


@dataclass(frozen=True)
class Contradiction:
    evidence: tuple
    derivation: ProofTrace


@dataclass(frozen=True)
class ConsistencyResult:
    status: str
    evidence: tuple = ()
    proof: Optional[ProofTrace] = None
    outcome: str = ""
    premises: tuple[Clause, ...] = ()


def _refute(graph, claim_literal: Literal, rules, declarations, limits):
    premises = extract_premises(graph, claim_literal, rules, declarations)
    return premises, theorem_prove(premises, claim_literal.complement(), limits, require_goal=True)


def find_contradictions(
    graph, claim_literal: Literal, rules: Sequence = (), declarations=None, limits: ProverLimits = ProverLimits()
) -> list[Contradiction]:
    """Refute the graph's premises together with the claim.

    Only refutations that use the claim count. At most one contradiction is
    reported; an empty list covers both saturation and budget exhaustion.
    """
    _, result = _refute(graph, claim_literal, rules, declarations, limits)
    if result.proof is None:
        return []
    return [Contradiction(_evidence(result.proof), result.proof)]


def check_consistent(claim, graph, rules: Sequence = (), declarations=None, limits: ProverLimits = ProverLimits()) -> ConsistencyResult:
    """Contradicted if refutable together with the graph, supported if the
    graph entails it, otherwise unverifiable (including budget exhaustion)."""
    goal = translate_to_fol(claim)
    premises, refutation = _refute(graph, goal, rules, declarations, limits)
    if refutation.proof is not None:
        # a claim refuted by the axioms alone cites itself
        evidence = _evidence(refutation.proof) or (claim.triple,)
        return ConsistencyResult("contradicted", evidence, refutation.proof, refutation.outcome, tuple(premises))
    support = theorem_prove(premises, goal, limits, require_goal=True)
    if support.proof is not None:
        return ConsistencyResult("supported", _evidence(support.proof), support.proof, support.outcome, tuple(premises))
    outcome = "budget_exhausted" if "budget_exhausted" in (refutation.outcome, support.outcome) else "saturated"
    return ConsistencyResult("unverifiable", (), None, outcome, tuple(premises))


def verify_claims(claims: Iterable, graph, rules: Sequence = (), declarations=None, limits: ProverLimits = ProverLimits()):
    """Per-claim symbolic verification; returns (verified claims, all results)."""
    results = [(c, check_consistent(c, graph, rules, declarations, limits)) for c in claims]
    verified = [c for c, r in results if r.status == "supported"]
    return verified, results
