"""Acting on a verdict: regenerate, edit contradicted claims, explain."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from claimguard.extraction import ClaimGrammar, render_claim, with_claims
from claimguard.model import Claim, KnowledgeState, QueryContext, Response, Triple, VerdictReport, format_value

CORRECTION_MODES = ("replace_object", "delete_claim")


class NoReplacementAvailable(LookupError):
    pass


@dataclass(frozen=True)
class InterventionPolicy:
    prevent_threshold: float = 0.65
    max_regenerations: int = 3
    correction_mode: str = "replace_object"

    def __post_init__(self) -> None:
        if not 0.0 <= self.prevent_threshold <= 1.0:
            raise ValueError("prevent_threshold must lie in [0,1]")
        if self.max_regenerations < 0:
            raise ValueError("max_regenerations must be >= 0")
        if self.correction_mode not in CORRECTION_MODES:
            raise ValueError(f"correction_mode must be one of {CORRECTION_MODES}")


@dataclass(frozen=True)
class PreventionResult:
    response: Response
    score: float
    regenerated: bool
    budget_exhausted: bool
    attempts: int
    notes: tuple[str, ...] = ()


def prevent(
    context: QueryContext,
    response: Response,
    score: float,
    generator,
    knowledge_state: KnowledgeState,
    policy: InterventionPolicy,
    rescore: Callable[[Response], float],
) -> PreventionResult:
    """Regenerate under ``knowledge_state`` when ``score`` reaches the threshold.

    Candidates are ranked by ``rescore``; the original is kept unless a
    candidate scores strictly lower. When no candidate gets below the
    threshold the result is flagged ``budget_exhausted``.
    """
    if score < policy.prevent_threshold:
        return PreventionResult(response, score, False, False, 0)
    best, best_score = response, score
    notes = []
    attempts = 0
    for attempt in range(policy.max_regenerations):
        attempts += 1
        candidate = generator.generate(context, knowledge_state)
        s = rescore(candidate)
        notes.append(f"regeneration {attempt + 1}: score {s:.6f}")
        if s < best_score:
            best, best_score = candidate, s
        if best_score < policy.prevent_threshold:
            break
    exhausted = best_score >= policy.prevent_threshold
    if exhausted:
        notes.append(f"regeneration budget of {policy.max_regenerations} exhausted")
    return PreventionResult(best, best_score, best is not response, exhausted, attempts, tuple(notes))


def replacement_for(claim: Claim, graph, declarations) -> Claim:
    """The claim with its object swapped for the graph's unique functional object."""
    t = claim.triple
    if claim.negated or t.predicate not in declarations.functional:
        raise NoReplacementAvailable(f"{t.predicate} is not functional" if not claim.negated else "negated claim")
    objects = {e.object for e in graph.edges_with(t.subject, t.predicate)}
    if len(objects) != 1:
        raise NoReplacementAvailable(f"{len(objects)} candidate objects for {t.subject} {t.predicate}")
    (obj,) = objects
    return Claim(Triple(t.subject, t.predicate, obj))


def _delete_span(text: str, a: int, b: int) -> str:
    while b < len(text) and text[b].isspace():
        b += 1
    if b == len(text):
        while a > 0 and text[a - 1].isspace():
            a -= 1
    return text[:a] + text[b:]


@dataclass(frozen=True)
class CorrectionResult:
    response: Response
    notes: tuple[str, ...] = ()
    edits: int = 0


def correct(
    response: Response,
    statuses,
    graph,
    policy: InterventionPolicy,
    declarations,
    grammar: ClaimGrammar,
) -> CorrectionResult:
    """Edit every contradicted claim in place.

    ``statuses`` maps claim id to status (or is a sequence of ClaimResult).
    Sentences are replaced or deleted from the end of the text backwards so
    earlier spans stay valid.
    """
    if not isinstance(statuses, dict):
        statuses = {r.claim.id: r.status for r in statuses}
    targets = [c for c in response.claims if statuses.get(c.id) == "contradicted" and c.source_span]
    if not targets:
        return CorrectionResult(response)
    text = response.text
    notes = []
    for claim in sorted(targets, key=lambda c: c.source_span, reverse=True):
        a, b = claim.source_span
        sentence = None
        if policy.correction_mode == "replace_object":
            try:
                fixed = replacement_for(claim, graph, declarations)
                sentence = render_claim(fixed, grammar)
                notes.append(f"replaced object of {claim} with {format_value(fixed.triple.object)}")
            except NoReplacementAvailable as exc:
                notes.append(f"no replacement for {claim} ({exc}); sentence deleted")
        else:
            notes.append(f"deleted {claim}")
        text = _delete_span(text, a, b) if sentence is None else text[:a] + sentence + text[b:]
    return CorrectionResult(with_claims(text, grammar), tuple(reversed(notes)), len(targets))


def score_terms(report: VerdictReport) -> list[tuple[str, float, float, float]]:
    """(name, weight, value, weight*value) for each fused term."""
    w = report.weights
    return [
        ("p_causal", w.alpha, report.p_causal, w.alpha * report.p_causal),
        ("p_symbolic", w.beta, report.p_symbolic, w.beta * report.p_symbolic),
        ("uncertainty", w.gamma, report.uncertainty, w.gamma * report.uncertainty),
    ]


def explanation_dict(report: VerdictReport) -> dict:
    return {
        "terms": [
            {"name": n, "weight": wt, "value": v, "contribution": c} for n, wt, v, c in score_terms(report)
        ],
        "total": sum(c for *_, c in score_terms(report)),
    }


def explain(report: VerdictReport) -> str:
    lines = [f"verdict: {report.verdict} (score {report.score:.6f})", "score decomposition:"]
    total = 0.0
    for name, weight, value, contrib in score_terms(report):
        lines.append(f"  {weight:.6f} x {name} {value:.6f} = {contrib:.6f}")
        total += contrib
    lines.append(f"  total {total:.6f}")
    if not report.per_claim:
        lines.append("no verifiable claims extracted")
    for i, r in enumerate(report.per_claim, 1):
        lines.append(f"claim {i}: {r.claim}")
        lines.append(f"  status: {r.status}")
        if r.evidence:
            lines.append("  evidence:")
            lines.extend(f"    {e}" for e in r.evidence)
        if r.consistency is not None:
            lines.append(f"  counterfactual consistency: {r.consistency:.6f}")
        if r.proof is not None:
            label = "refutation" if r.status == "contradicted" else "proof"
            lines.append(f"  {label}:")
            lines.extend("    " + ln for ln in r.proof.render())
    if report.trace:
        lines.append("trace:")
        lines.extend(f"  {t}" for t in report.trace)
    return "\n".join(lines) + "\n"
