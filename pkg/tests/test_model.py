import json
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimguard.fusion import FusionWeights
from claimguard.model import (
    Claim,
    ClaimResult,
    KnowledgeState,
    NormalizationError,
    QueryContext,
    Response,
    Thresholds,
    Triple,
    VerdictReport,
    canonical_dumps,
    find_mentions,
    normalize_entity,
    parse_report,
    parse_value,
    serialize_report,
)


@pytest.mark.parametrize(
    "surface, expected",
    [("Ulm", "ulm"), ("New  York City", "new_york_city"), ("Einstein.", "einstein"), (" São  Paulo ", "são_paulo")],
)
def test_normalize_examples(surface, expected):
    assert normalize_entity(surface) == expected


@pytest.mark.parametrize("surface", ["", "   ", "...", "?!"])
def test_normalize_rejects_empty(surface):
    with pytest.raises(NormalizationError):
        normalize_entity(surface)


@settings(max_examples=10_000, deadline=None)
@given(st.text())
def test_normalize_idempotent(s):
    try:
        once = normalize_entity(s)
    except NormalizationError:
        return
    assert once and " " not in once
    assert normalize_entity(once) == once


def test_parse_value_kinds():
    assert parse_value("1879") == 1879
    assert parse_value("2.50") == 2.5
    assert parse_value("3.0") == 3 and isinstance(parse_value("3.0"), int)
    assert parse_value("1879-03-14") == date(1879, 3, 14)
    assert parse_value("New York") == "new_york"


def test_triple_confidence_bounds():
    with pytest.raises(ValueError):
        Triple("a", "p", "b", 1.5)


def test_claim_id_is_content_hash():
    a = Claim(Triple("einstein", "born_in", "ulm"), source_span=(0, 10))
    b = Claim(Triple("einstein", "born_in", "ulm", 0.3), source_span=(5, 20))
    assert a.id == b.id and len(a.id) == 16
    assert Claim(Triple("einstein", "born_in", "ulm"), "negated").id != a.id
    # number and entity objects with the same spelling differ
    assert Claim(Triple("x", "p", 1)).id != Claim(Triple("x", "p", "1")).id


def test_response_span_bounds():
    c = Claim(Triple("a", "p", "b"), source_span=(0, 50))
    with pytest.raises(ValueError):
        Response("short", (c,))


def test_knowledge_state_invariants():
    t = Triple("a", "p", "b")
    with pytest.raises(ValueError):
        KnowledgeState(frozenset({t}), {t.key: "mined"})
    with pytest.raises(ValueError):
        KnowledgeState(frozenset({t, Triple("a", "p", "b", 0.5)}), {t.key: "kb"})
    k = KnowledgeState.from_triples([t, Triple("a", "p", "b", 0.5)])
    assert len(k) == 1 and next(iter(k.facts)).confidence == 1.0


def test_find_mentions_longest_first():
    vocab = ["new_york", "new_york_city", "ulm"]
    assert find_mentions("I love New York City and Ulm.", vocab) == ("new_york_city", "ulm")
    assert QueryContext.from_text("", vocab).mentioned_entities == ()


def test_thresholds_verdicts():
    th = Thresholds()
    assert [th.verdict(s) for s in (0.1, 0.35, 0.5, 0.65, 0.9)] == ["accept", "flag", "flag", "reject", "reject"]
    with pytest.raises(ValueError):
        Thresholds(0.7, 0.3)


def test_contradicted_needs_evidence():
    with pytest.raises(ValueError):
        ClaimResult(Claim(Triple("a", "p", "b")), "contradicted")


def _report(score_inputs=(0.5, 0.5, 0.5), claims=()):
    w = FusionWeights()
    pc, ps, u = score_inputs
    score = w.alpha * pc + w.beta * ps + w.gamma * u
    return VerdictReport(score, "flag", pc, ps, u, w, tuple(claims), ("step one", "step two"))


def test_canonical_precision():
    doc = serialize_report(_report())
    assert '"score": 0.500000' in doc
    assert doc == serialize_report(_report())
    assert doc.endswith("\n")


def test_canonical_dumps_sorted_and_stable():
    assert canonical_dumps({"b": 1, "a": [0.1, None, True, "x"]}) == (
        '{\n  "a": [\n    0.100000,\n    null,\n    true,\n    "x"\n  ],\n  "b": 1\n}\n'
    )
    assert json.loads(canonical_dumps({"z": -0.0000001})) == {"z": 0.0}


def test_report_round_trip_with_proof(year_kb, composition_rules):
    from claimguard.kgraph import build_graph
    from claimguard.logic.verify import check_consistent

    claim = Claim(Triple("einstein", "born_in", "paris"), source_span=(0, 27))
    graph = build_graph(QueryContext("x"), [claim], year_kb, composition_rules, hops=1)
    res = check_consistent(claim, graph, composition_rules, year_kb.declarations)
    report = _report((1.0, 1.0, 0.0), [ClaimResult(claim, res.status, res.evidence, res.proof, 0.0)])
    doc = serialize_report(report)
    back = parse_report(doc)
    assert serialize_report(back) == doc
    assert back.per_claim[0].proof.to_json() == res.proof.to_json()


objects = st.one_of(
    st.sampled_from(["ulm", "germany", "new_york"]),
    st.integers(-10**6, 10**6),
    st.floats(-1e6, 1e6, allow_nan=False).map(lambda x: round(x, 6)),
    st.dates(min_value=date(1000, 1, 1), max_value=date(2999, 12, 31)),
)
claims = st.builds(
    lambda s, p, o, neg, c: Claim(Triple(s, p, o, c), "negated" if neg else "asserted"),
    st.sampled_from(["einstein", "curie", "ulm"]),
    st.sampled_from(["born_in", "born_year", "located_in"]),
    objects,
    st.booleans(),
    st.floats(0, 1).map(lambda x: round(x, 6)),
)


@settings(max_examples=1_000, deadline=None)
@given(
    st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).map(lambda t: tuple(round(x, 6) for x in t)),
    st.lists(st.tuples(claims, st.sampled_from(["supported", "unverifiable"])), max_size=4),
    st.lists(st.text(alphabet="abc xyz:.", max_size=20), max_size=3),
)
def test_report_round_trip(inputs, rows, trace):
    w = FusionWeights()
    pc, ps, u = inputs
    score = round(w.alpha * pc + w.beta * ps + w.gamma * u, 6)
    per_claim = tuple(ClaimResult(c, s, (c.triple,) if s == "supported" else ()) for c, s in rows)
    report = VerdictReport(score, "accept", pc, ps, u, w, per_claim, tuple(trace))
    doc = serialize_report(report)
    again = serialize_report(parse_report(doc))
    assert again == doc
