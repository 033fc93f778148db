"""End-to-end verification: extract, build graph, prove, intervene, fuse."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from claimguard.causal import detect
from claimguard.extraction import ClaimGrammar, parse_structured_claims, with_claims
from claimguard.fusion import FusionWeights, fuse, p_symbolic, uncertainty
from claimguard.generator import MockGenerator
from claimguard.kgraph import KnowledgeBase, KnowledgeGraph, Rule, build_graph
from claimguard.logic.prover import ProverLimits
from claimguard.logic.verify import ConsistencyResult, check_consistent, shipped_rules
from claimguard.model import (
    ClaimResult,
    KnowledgeState,
    QueryContext,
    Response,
    Thresholds,
    VerdictReport,
    unique_claims,
)


@dataclass(frozen=True)
class Features:
    p_causal: float
    p_symbolic: float
    uncertainty: float

    def as_dict(self) -> dict:
        return {"p_causal": self.p_causal, "p_symbolic": self.p_symbolic, "uncertainty": self.uncertainty}


@dataclass(frozen=True)
class Analysis:
    """Everything computed for one (context, response) pair before thresholding."""

    context: QueryContext
    response: Response
    graph: KnowledgeGraph
    state: KnowledgeState
    results: tuple[tuple, ...]  # (claim, ConsistencyResult, consistency)
    features: Features
    trace: tuple[str, ...]

    @property
    def statuses(self) -> list[str]:
        return [r.status for _, r, _ in self.results]


@dataclass
class Verifier:
    kb: KnowledgeBase
    grammar: ClaimGrammar
    rules: Sequence[Rule] = ()
    weights: FusionWeights = field(default_factory=FusionWeights)
    thresholds: Thresholds = field(default_factory=Thresholds)
    hops: int = 2
    limits: ProverLimits = field(default_factory=ProverLimits)
    generator: object = None
    axioms: bool = True

    def __post_init__(self) -> None:
        if self.generator is None:
            self.generator = MockGenerator(self.grammar)
        self.rules = tuple(self.rules) + (tuple(shipped_rules()) if self.axioms else ())

    @property
    def declarations(self):
        return self.kb.declarations

    def context(self, text: Union[str, QueryContext]) -> QueryContext:
        return text if isinstance(text, QueryContext) else self.kb.context(text)

    def response(self, text: Union[str, Response], trace: Optional[list[str]] = None) -> Response:
        if isinstance(text, Response):
            if text.claims or not text.text.strip():
                return text
            return Response(text.text, with_claims(text.text, self.grammar, trace).claims, text.claim_confidences)
        if "@claim" in text:
            return Response(text, tuple(parse_structured_claims(text)))
        return with_claims(text, self.grammar, trace)

    def check(self, claim, graph: KnowledgeGraph) -> ConsistencyResult:
        return check_consistent(claim, graph, self.rules, self.declarations, self.limits)

    def analyze(self, context: Union[str, QueryContext], response: Union[str, Response]) -> Analysis:
        trace: list[str] = []
        ctx = self.context(context)
        resp = self.response(response, trace)
        claims = unique_claims(resp.claims)
        trace.insert(0, f"extracted {len(claims)} claim(s) from {len(resp.text)} characters")
        if ctx.mentioned_entities:
            trace.append("context mentions " + ", ".join(ctx.mentioned_entities))

        graph = build_graph(ctx, claims, self.kb, self.rules, self.hops)
        n_inferred = sum(1 for p in graph.provenance.values() if p == "inferred")
        trace.append(f"knowledge graph: {len(graph.vertices)} vertices, {len(graph.edges)} edges ({n_inferred} inferred)")

        checked = [(c, self.check(c, graph)) for c in claims]
        for c, r in checked:
            line = f"{c}: {r.status}"
            if r.evidence:
                line += " by " + "; ".join(str(e) for e in r.evidence)
            if r.outcome == "budget_exhausted":
                line += " (prover budget exhausted)"
            trace.append(line)

        causal = detect(ctx, resp, self.kb, self.generator, self.hops)
        trace.extend(causal.notes)
        statuses = [r.status for _, r in checked]
        u = uncertainty(resp, statuses)
        if not claims:
            trace.append("uncertainty defaults to 0.5 with no claims")
        elif resp.claim_confidences:
            trace.append("uncertainty from generator confidences")
        else:
            trace.append("uncertainty from the unverifiable fraction")
        feats = Features(causal.p_causal, p_symbolic(statuses), u)
        results = tuple((c, r, causal.consistency_of(c.id)) for c, r in checked)
        return Analysis(ctx, resp, graph, causal.state, results, feats, tuple(trace))

    def report(self, analysis: Analysis) -> VerdictReport:
        f, w = analysis.features, self.weights
        score = fuse(f.p_causal, f.p_symbolic, f.uncertainty, w)
        verdict = self.thresholds.verdict(score, w.verdict_offset)
        trace = list(analysis.trace)
        trace.append(
            f"score = {w.alpha:.6f}*{f.p_causal:.6f} + {w.beta:.6f}*{f.p_symbolic:.6f} "
            f"+ {w.gamma:.6f}*{f.uncertainty:.6f} = {score:.6f}"
        )
        trace.append(f"verdict {verdict}")
        per_claim = tuple(
            ClaimResult(c, r.status, r.evidence, r.proof, consistency) for c, r, consistency in analysis.results
        )
        return VerdictReport(score, verdict, f.p_causal, f.p_symbolic, f.uncertainty, w, per_claim, tuple(trace))

    def verify(self, context: Union[str, QueryContext], response: Union[str, Response]) -> VerdictReport:
        return self.report(self.analyze(context, response))

    def score(self, context, response) -> float:
        return self.verify(context, response).score
