import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from claimguard.extraction import (
    LexiconFormatError,
    MalformedDirective,
    extract_claims,
    parse_lexicon,
    parse_structured_claims,
    render_claim,
    render_claims,
    split_sentences,
)
from claimguard.model import Claim, Triple


def test_simple_sentence(grammar):
    (c,) = extract_claims("Einstein was born in Ulm.", grammar)
    assert c.triple.key == ("einstein", "born_in", "ulm")
    assert c.polarity == "asserted"
    assert c.source_span == (0, 25)


def test_empty_text(grammar):
    assert extract_claims("", grammar) == []


@pytest.mark.parametrize("text", ["Einstein was not born in Paris.", "Einstein never was born in Paris."])
def test_negation(grammar, text):
    (c,) = extract_claims(text, grammar)
    assert c.triple.key == ("einstein", "born_in", "paris")
    assert c.negated


def test_longest_phrase_wins(grammar):
    (c,) = extract_claims("Einstein was born in the year 1879.", grammar)
    assert c.triple.key == ("einstein", "born_year", 1879)


def test_unmatched_sentences_are_traced(grammar):
    trace = []
    claims = extract_claims("Hello there. Ulm is located in Germany. Nice!", grammar, trace)
    assert [c.triple.predicate for c in claims] == ["located_in"]
    assert len(trace) == 2 and "Hello there." in trace[0]


def test_spans_index_the_text(grammar):
    text = "Einstein was born in Ulm.  Ulm is located in Germany."
    claims = extract_claims(text, grammar)
    assert [text[a:b] for a, b in (c.source_span for c in claims)] == [
        "Einstein was born in Ulm.",
        "Ulm is located in Germany.",
    ]


def test_split_sentences_keeps_decimals():
    text = "Pi is 3.14 exactly. Next one"
    assert [text[a:b] for a, b in split_sentences(text)] == ["Pi is 3.14 exactly.", "Next one"]


def test_structured_directives():
    (c,) = parse_structured_claims("@claim(ulm, located_in, germany)")
    assert c.triple.key == ("ulm", "located_in", "germany") and not c.negated
    (n,) = parse_structured_claims("!@claim(einstein, born_in, paris)")
    assert n.negated
    with pytest.raises(MalformedDirective) as err:
        parse_structured_claims("@claim(ulm, located_in)")
    assert err.value.line == 1
    with pytest.raises(MalformedDirective) as err:
        parse_structured_claims("ok\n\n@claim(a,b")
    assert err.value.line == 3


def test_lexicon_file_format():
    g = parse_lexicon("# comment\nwas born in\tborn_in\n\nis located in\tlocated_in\n")
    assert g.phrase_for("born_in") == ("was", "born", "in")
    with pytest.raises(LexiconFormatError):
        parse_lexicon("was born in born_in\n")
    with pytest.raises(LexiconFormatError):
        parse_lexicon("was born in\tborn_in\nwas born in\tdied_in\n")


def test_render(grammar):
    c = Claim(Triple("einstein", "born_in", "ulm"))
    assert render_claim(c, grammar) == "Einstein was born in Ulm."
    assert render_claim(Claim(c.triple, "negated"), grammar) == "Einstein was not born in Ulm."
    assert render_claim(Claim(Triple("a", "unknown", "b")), grammar) is None


def test_determinism(grammar):
    text = "Einstein was born in Ulm. Ulm is located in Germany."
    assert [c.id for c in extract_claims(text, grammar)] == [c.id for c in extract_claims(text, grammar)]


words = st.lists(st.sampled_from(["ada", "bern", "new", "york", "marie", "x9", "zürich", "ulm"]), min_size=1, max_size=3)
entity = words.map("_".join)
number = st.one_of(st.integers(-10**9, 10**9), st.floats(-1e6, 1e6, allow_nan=False).map(lambda x: round(x, 4)))
day = st.dates().filter(lambda d: d.year >= 1000)


@settings(max_examples=1_000, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    st.lists(
        st.tuples(
            entity,
            st.sampled_from(["born_in", "born_year", "located_in", "born_in_country", "likes"]),
            st.one_of(entity, number, day),
            st.booleans(),
        ),
        max_size=5,
    )
)
def test_render_extract_round_trip(grammar, rows):
    claims = [Claim(Triple(s, p, o), "negated" if neg else "asserted") for s, p, o, neg in rows]
    text = render_claims(claims, grammar)
    back = extract_claims(text, grammar)
    assert [(c.triple.key, c.polarity) for c in back] == [(c.triple.key, c.polarity) for c in claims]
