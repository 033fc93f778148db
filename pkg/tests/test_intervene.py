import random

import pytest

from claimguard.fusion import FusionWeights
from claimguard.generator import MockGenerator
from claimguard.intervene import (
    InterventionPolicy,
    NoReplacementAvailable,
    correct,
    explain,
    prevent,
    replacement_for,
    score_terms,
)
from claimguard.kgraph import build_graph, parse_kb
from claimguard.model import Claim, QueryContext, Response, Triple
from claimguard.pipeline import Verifier

CTX = "Tell me about Albert Einstein."
WRONG = "Albert Einstein was born in Paris."


def symbolic_only(verifier):
    return Verifier(verifier.kb, verifier.grammar, weights=FusionWeights(0.0, 1.0, 0.0), axioms=False, rules=verifier.rules)


def run_prevent(verifier, text, policy):
    a = verifier.analyze(CTX, text)
    score = verifier.report(a).score
    rescore = lambda r: verifier.score(a.context, r)
    return prevent(a.context, a.response, score, verifier.generator, a.state, policy, rescore), score


def test_prevent_below_threshold_is_identity(bundled_verifier):
    a = bundled_verifier.analyze(CTX, "Albert Einstein was born in Ulm.")
    res, score = run_prevent(bundled_verifier, a.response, InterventionPolicy(prevent_threshold=0.65))
    assert score < 0.65
    assert res.response is a.response and not res.regenerated and res.attempts == 0


def test_prevent_regenerates_from_state(bundled_verifier):
    v = symbolic_only(bundled_verifier)
    res, score = run_prevent(v, WRONG, InterventionPolicy(prevent_threshold=0.5))
    assert score == 1.0
    assert res.regenerated and not res.budget_exhausted and res.score == 0.0
    report = v.verify(CTX, res.response)
    assert report.per_claim and all(r.status == "supported" for r in report.per_claim)


def test_prevent_zero_budget(bundled_verifier):
    v = symbolic_only(bundled_verifier)
    a = v.analyze(CTX, WRONG)
    res, score = run_prevent(v, a.response, InterventionPolicy(prevent_threshold=0.5, max_regenerations=0))
    assert res.budget_exhausted and not res.regenerated
    assert res.response.text == WRONG and res.score == score


class NoisyGenerator:
    reentrancy = "concurrent"

    def __init__(self, options, seed):
        self.options, self.rng = options, random.Random(seed)

    def generate(self, context, constraints):
        return self.rng.choice(self.options)


def test_prevent_never_raises_score():
    options = [Response(str(i)) for i in range(5)]
    scores = {r.text: s for r, s in zip(options, [0.9, 0.7, 0.95, 0.66, 0.8])}
    for seed in range(50):
        start = Response("start")
        res = prevent(
            QueryContext(""), start, 0.8, NoisyGenerator(options, seed), None,
            InterventionPolicy(0.65, 3), lambda r: scores[r.text],
        )
        assert res.score <= 0.8
        assert res.budget_exhausted  # nothing drops below 0.65
        assert res.response is start or scores[res.response.text] < 0.8


def test_policy_validation():
    with pytest.raises(ValueError):
        InterventionPolicy(max_regenerations=-1)
    with pytest.raises(ValueError):
        InterventionPolicy(correction_mode="rewrite")


def correct_text(verifier, text, policy=InterventionPolicy()):
    a = verifier.analyze(CTX, text)
    statuses = {c.id: r.status for c, r, _ in a.results}
    return correct(a.response, statuses, a.graph, policy, verifier.declarations, verifier.grammar)


def test_correct_replaces_object(bundled_verifier):
    res = correct_text(bundled_verifier, WRONG)
    assert res.response.text == "Albert Einstein was born in Ulm."
    assert res.edits == 1 and "ulm" in res.notes[0].lower()
    assert all(r.status != "contradicted" for r in bundled_verifier.verify(CTX, res.response).per_claim)


def test_correct_keeps_clean_response(bundled_verifier):
    a = bundled_verifier.analyze(CTX, "Albert Einstein was born in Ulm. Ulm is located in Germany.")
    statuses = {c.id: r.status for c, r, _ in a.results}
    res = correct(a.response, statuses, a.graph, InterventionPolicy(), bundled_verifier.declarations, bundled_verifier.grammar)
    assert res.response is a.response and res.edits == 0


def test_correct_deletes_when_no_replacement(grammar):
    kb = parse_kb("#!functional likes\neinstein\tlikes\tmusic\neinstein\tborn_in\tulm\n")
    v = Verifier(kb, grammar)
    text = "Einstein likes chess. Einstein was born in Ulm."
    a = v.analyze("Einstein", text)
    statuses = {c.id: r.status for c, r, _ in a.results}
    assert sorted(statuses.values()) == ["contradicted", "supported"]
    res = correct(a.response, statuses, a.graph, InterventionPolicy(), kb.declarations, grammar)
    assert res.response.text == "Einstein likes Music. Einstein was born in Ulm."
    # a negated claim has no object to swap in, so its sentence goes
    a = v.analyze("Einstein", "Einstein likes music. Einstein was not born in Ulm.")
    statuses = {c.id: r.status for c, r, _ in a.results}
    res = correct(a.response, statuses, a.graph, InterventionPolicy(), kb.declarations, grammar)
    assert res.response.text == "Einstein likes music."
    assert "deleted" in res.notes[0]
    kb2 = parse_kb("#!functional likes\neinstein\tborn_in\tulm\nmusic\tlikes\tx\n")
    graph = build_graph(QueryContext("", ("einstein",)), [], kb2, [], 1)
    with pytest.raises(NoReplacementAvailable):
        replacement_for(Claim(Triple("einstein", "likes", "chess")), graph, kb2.declarations)
    with pytest.raises(NoReplacementAvailable):
        replacement_for(Claim(Triple("einstein", "born_in", "paris")), graph, kb2.declarations)


def test_correct_delete_mode(bundled_verifier):
    text = WRONG + " Ulm is located in Germany."
    res = correct_text(bundled_verifier, text, InterventionPolicy(correction_mode="delete_claim"))
    assert res.response.text == "Ulm is located in Germany."
    res = correct_text(bundled_verifier, "Ulm is located in Germany. " + WRONG, InterventionPolicy(correction_mode="delete_claim"))
    assert res.response.text == "Ulm is located in Germany."


def test_correct_idempotent(bundled_verifier):
    once = correct_text(bundled_verifier, WRONG + " Albert Einstein died in Paris.")
    twice = correct_text(bundled_verifier, once.response)
    assert twice.response.text == once.response.text and twice.edits == 0


def test_explain_contradiction(bundled_verifier):
    out = explain(bundled_verifier.verify(CTX, WRONG))
    assert "contradicted" in out and "refutation:" in out
    evidence = out.split("evidence:")[1].splitlines()[1]
    assert "born_in" in evidence and "ulm" in evidence


def test_explain_no_claims(bundled_verifier):
    out = explain(bundled_verifier.verify(CTX, "I am not sure."))
    assert "no verifiable claims extracted" in out


def test_decomposition_sums_to_score(bundled_verifier):
    for text in [WRONG, "Albert Einstein was born in Ulm.", "Nothing.", "Marie Curie was born in Ulm."]:
        report = bundled_verifier.verify(CTX, text)
        assert abs(sum(c for *_, c in score_terms(report)) - report.score) <= 1e-9
