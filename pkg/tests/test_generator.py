import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from claimguard.extraction import extract_claims
from claimguard.generator import (
    GeneratorBinding,
    GeneratorUnavailable,
    MockGenerator,
    RemoteGenerator,
    generate,
    make_generator,
)
from claimguard.model import KnowledgeState, QueryContext, Triple

FACTS = [Triple("einstein", "born_in", "ulm"), Triple("ulm", "located_in", "germany")]


def test_mock_renders_mentioned_subjects(grammar):
    out = generate(QueryContext("Einstein?", ("einstein",)), KnowledgeState.from_triples(FACTS), GeneratorBinding(), grammar)
    assert out.text == "Einstein was born in Ulm."
    assert out.claim_confidences == (1.0,)


def test_mock_without_mentions_renders_all(grammar):
    out = MockGenerator(grammar).generate(QueryContext("?"), KnowledgeState.from_triples(FACTS))
    assert out.text == "Einstein was born in Ulm. Ulm is located in Germany."


def test_mock_empty_and_deterministic(grammar):
    gen = MockGenerator(grammar)
    empty = gen.generate(QueryContext("x"), KnowledgeState())
    assert empty.text == "" and empty.claims == ()
    k = KnowledgeState.from_triples(FACTS)
    assert gen.generate(QueryContext("x"), k) == gen.generate(QueryContext("x"), k)


def test_binding_validation():
    with pytest.raises(ValueError):
        GeneratorBinding(kind="mock", reentrancy="serial")
    with pytest.raises(ValueError):
        GeneratorBinding(kind="remote", endpoint="http://x", timeout=0)


ents = st.sampled_from(["ada", "bern", "new_york", "ulm", "marie_curie", "x1"])
preds = st.sampled_from(["born_in", "born_year", "located_in", "likes", "unrendered"])


@settings(max_examples=1_000, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    st.lists(st.tuples(ents, preds, st.one_of(ents, st.integers(0, 3000))), max_size=8),
    st.lists(ents, max_size=2),
)
def test_mock_closure(grammar, rows, mentions):
    k = KnowledgeState.from_triples(Triple(s, p, o) for s, p, o in rows)
    out = MockGenerator(grammar).generate(QueryContext("q", tuple(mentions)), k)
    got = {c.triple.key for c in extract_claims(out.text, grammar)}
    fact_keys = {t.key for t in k.facts}
    assert got <= fact_keys
    expected = {t.key for t in k.facts if grammar.renders(t.predicate) and (not mentions or t.subject in mentions)}
    assert got == expected


class _Handler(BaseHTTPRequestHandler):
    calls = []
    mode = "ok"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).calls.append((self.path, body))
        if self.mode == "bad":
            payload = b"not json"
        else:
            facts = body["constraints"]
            text = " ".join(f"{f['subject'].title()} was born in {f['object'].title()}." for f in facts if f["predicate"] == "born_in")
            payload = json.dumps({"text": text, "claim_confidences": [0.75] * text.count(".")}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    _Handler.calls = []
    _Handler.mode = "ok"
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}", _Handler
    srv.shutdown()
    srv.server_close()


def test_remote_round_trip(server, grammar):
    url, handler = server
    gen = RemoteGenerator(url, grammar, timeout=5)
    out = gen.generate(QueryContext("Einstein?", ("einstein",)), KnowledgeState.from_triples(FACTS))
    assert out.text == "Einstein was born in Ulm."
    assert out.claim_confidences == (0.75,)
    path, body = handler.calls[0]
    assert path == "/generate" and body["context"] == "Einstein?"
    assert {"subject", "predicate", "object", "confidence"} == set(body["constraints"][0])


def test_remote_protocol_violation(server, grammar):
    url, handler = server
    handler.mode = "bad"
    with pytest.raises(GeneratorUnavailable):
        RemoteGenerator(url, grammar, timeout=5).generate(QueryContext("x"), KnowledgeState())
    assert len(handler.calls) == 1  # malformed replies are not retried


def test_remote_unreachable_retries_bounded(grammar):
    gen = RemoteGenerator(f"http://127.0.0.1:{_free_port()}", grammar, timeout=0.5, retries=2)
    with pytest.raises(GeneratorUnavailable):
        gen.generate(QueryContext("x"), KnowledgeState())


def test_remote_endpoint_from_environment(monkeypatch, grammar, server):
    url, _ = server
    monkeypatch.setenv("CG_GENERATOR_URL", url)
    gen = make_generator(GeneratorBinding(kind="remote", reentrancy="serial"), grammar)
    assert isinstance(gen, RemoteGenerator) and gen.url == url + "/generate"
    monkeypatch.delenv("CG_GENERATOR_URL")
    with pytest.raises(GeneratorUnavailable):
        make_generator(GeneratorBinding(kind="remote"), grammar)


def _free_port():
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serial_remote_serves_concurrent_callers(server, grammar):
    url, handler = server
    gen = RemoteGenerator(url, grammar, timeout=5, reentrancy="serial")
    ks = [KnowledgeState.from_triples([Triple(f"p{i}", "born_in", "ulm")]) for i in range(6)]
    random.Random(0).shuffle(ks)
    threads = [threading.Thread(target=gen.generate, args=(QueryContext("x"), k)) for k in ks]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(handler.calls) == 6
