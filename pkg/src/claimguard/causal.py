"""Structural causal model over symbolic knowledge states.

A knowledge state K is a set of weighted triples. Interventions replace K
wholesale (``do``), responses are regenerated from the intervened state, and
the agreement between the original and regenerated claim sets measures how
much each claim leans on the facts that were severed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from claimguard.kgraph import KnowledgeBase, collect_entities, graph_from_triples, mine_relations
from claimguard.logic.verify import check_consistent
from claimguard.model import Claim, KnowledgeState, QueryContext, Response, Triple, unique_claims

CONFOUNDERS = ("drop_rare_facts",)
INTERVENTION_KINDS = ("remove_fact", "replace_object", "inject_fact")

# indicator(state, claim) -> 0 or 1
Indicator = Callable[[KnowledgeState, Claim], int]


@dataclass(frozen=True)
class ScmConfig:
    hops: int = 2
    u_k: int = 0
    u_y: int = 0
    u_h: int = 0
    confounders: Mapping[str, float] = field(default_factory=dict)
    n_draws: int = 1
    indicator: Optional[Indicator] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.hops < 0:
            raise ValueError("hops must be >= 0")
        if self.n_draws < 1:
            raise ValueError("n_draws must be >= 1")
        for name, rate in self.confounders.items():
            if name not in CONFOUNDERS:
                raise ValueError(f"unknown confounder {name!r}; known: {', '.join(CONFOUNDERS)}")
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"confounder rate for {name} must lie in [0,1], got {rate}")
        object.__setattr__(self, "confounders", dict(self.confounders))


@dataclass(frozen=True)
class Intervention:
    kind: str
    target: Triple
    replacement: Optional[Triple] = None

    def __post_init__(self) -> None:
        if self.kind not in INTERVENTION_KINDS:
            raise ValueError(f"unknown intervention kind {self.kind!r}")
        if self.kind == "replace_object":
            r = self.replacement
            if r is None or (r.subject, r.predicate) != (self.target.subject, self.target.predicate):
                raise ValueError("replace_object needs a replacement with the same subject and predicate")


def do(k: KnowledgeState, intervention: Intervention) -> KnowledgeState:
    """Apply one intervention, returning a new state; ``k`` is left untouched."""
    facts = {t.key: t for t in k.facts}
    prov = dict(k.provenance)
    removed = set(k.removed)
    target = intervention.target
    if intervention.kind in ("remove_fact", "replace_object"):
        old = facts.pop(target.key, None)
        if old is not None:
            prov.pop(old.key)
            removed.add(old)
    if intervention.kind == "replace_object":
        new = intervention.replacement
    elif intervention.kind == "inject_fact":
        new = target
    else:
        new = None
    if new is not None:
        facts[new.key] = new
        prov[new.key] = "intervened"
    return KnowledgeState(frozenset(facts.values()), prov, frozenset(removed))


def estimate_knowledge_state(
    context: QueryContext, claims: Sequence[Claim], kb: KnowledgeBase, hops: int = 2
) -> KnowledgeState:
    facts = mine_relations(collect_entities(context, claims), kb, hops)
    return KnowledgeState.from_triples(facts, "kb")


def generate_counterfactual(k: KnowledgeState, claim: Claim) -> KnowledgeState:
    """Sever the claim's support: drop every fact with the claim's subject and predicate."""
    s, p = claim.triple.subject, claim.triple.predicate
    k_prime = k
    for t in sorted(k.facts, key=lambda t: t.sort_key()):
        if t.subject == s and t.predicate == p:
            k_prime = do(k_prime, Intervention("remove_fact", t))
    return k_prime


def generate_alternative(context: QueryContext, k_prime: KnowledgeState, generator) -> Response:
    return generator.generate(context, k_prime)


def check_consistency(y: Response, y_prime: Response) -> float:
    """Jaccard similarity of the two responses' claim-id sets."""
    a, b = y.claim_ids, y_prime.claim_ids
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass(frozen=True)
class CausalDetection:
    p_causal: float
    consistencies: tuple[tuple[str, float], ...]
    state: KnowledgeState
    notes: tuple[str, ...] = ()

    def consistency_of(self, claim_id: str) -> Optional[float]:
        return dict(self.consistencies).get(claim_id)


def detect(context: QueryContext, response: Response, kb: KnowledgeBase, generator, hops: int = 2) -> CausalDetection:
    """Counterfactual loop with per-claim detail.

    For each distinct claim: intervene on K, regenerate, compare. The score
    is the mean inconsistency over claims.
    """
    claims = unique_claims(response.claims)
    k = estimate_knowledge_state(context, claims, kb, hops)
    if not claims:
        return CausalDetection(0.0, (), k, ("no claims extracted; causal score set to 0",))
    notes = []
    per_claim = []
    total = 0.0
    for claim in claims:
        k_prime = generate_counterfactual(k, claim)
        y_prime = generate_alternative(context, k_prime, generator)
        c = check_consistency(response, y_prime)
        per_claim.append((claim.id, c))
        total += 1.0 - c
        notes.append(
            f"counterfactual for {claim}: removed {len(k_prime.removed) - len(k.removed)} fact(s), "
            f"alternative has {len(y_prime.claims)} claim(s), consistency {c:.6f}"
        )
    return CausalDetection(total / len(claims), tuple(per_claim), k, tuple(notes))


def causal_detect(context: QueryContext, response: Response, kb: KnowledgeBase, generator, hops: int = 2) -> float:
    return detect(context, response, kb, generator, hops).p_causal


def rare_facts(k: KnowledgeState) -> list[Triple]:
    """Facts whose predicate occurs exactly once in the state."""
    counts: dict[str, int] = {}
    for t in k.facts:
        counts[t.predicate] = counts.get(t.predicate, 0) + 1
    return sorted((t for t in k.facts if counts[t.predicate] == 1), key=lambda t: t.sort_key())


def confounded(k: KnowledgeState, confounders: Mapping[str, float], rng: random.Random) -> KnowledgeState:
    rate = confounders.get("drop_rare_facts", 0.0)
    if rate <= 0.0:
        return k
    state = k
    for t in rare_facts(k):
        if rng.random() < rate:
            state = do(state, Intervention("remove_fact", t))
    return state


def default_indicator(rules: Sequence = (), declarations=None) -> Indicator:
    """H = 1 when the claim is not supported by the closure of the state."""

    def indicator(state: KnowledgeState, claim: Claim) -> int:
        graph = graph_from_triples(state.facts, rules)
        return int(check_consistent(claim, graph, rules, declarations).status != "supported")

    return indicator


def hallucination_probability(
    k: KnowledgeState, scm: ScmConfig, claim: Claim, indicator: Indicator
) -> float:
    """P(H=1 | do(K=k)) averaged over ``n_draws`` seeded noise draws."""
    cache: dict[frozenset, int] = {}
    hits = 0
    for i in range(scm.n_draws):
        rng = random.Random(f"{scm.u_h}:{i}")
        state = confounded(k, scm.confounders, rng)
        key = state.facts
        if key not in cache:
            cache[key] = indicator(state, claim)
        hits += cache[key]
    return hits / scm.n_draws


def estimate_causal_effect(
    k: KnowledgeState,
    k0: Optional[KnowledgeState],
    scm: ScmConfig,
    claim: Claim,
    rules: Sequence = (),
    declarations=None,
) -> float:
    """P(H=1 | do(K=k)) - P(H=1 | do(K=k0)); ``k0`` defaults to the empty state.

    Both terms use the same noise draws, so swapping the states negates the
    result exactly.
    """
    if k0 is None:
        k0 = KnowledgeState()
    indicator = scm.indicator or default_indicator(rules, declarations)
    return hallucination_probability(k, scm, claim, indicator) - hallucination_probability(k0, scm, claim, indicator)
