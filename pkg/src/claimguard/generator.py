"""Text generation boundary: a deterministic mock and a small HTTP client."""

from __future__ import annotations

import json
import os
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Optional, Protocol

from claimguard.extraction import ClaimGrammar, render_claim, with_claims
from claimguard.model import Claim, KnowledgeState, QueryContext, Response, triple_to_json

ENV_URL = "CG_GENERATOR_URL"


class GeneratorUnavailable(RuntimeError):
    pass


class Generator(Protocol):
    reentrancy: str

    def generate(self, context: QueryContext, constraints: KnowledgeState) -> Response: ...


@dataclass(frozen=True)
class GeneratorBinding:
    kind: str = "mock"
    seed: int = 0
    endpoint: Optional[str] = None
    timeout: float = 10.0
    reentrancy: str = "concurrent"
    retries: int = 2

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "remote"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.reentrancy not in ("serial", "concurrent"):
            raise ValueError(f"reentrancy must be serial or concurrent, got {self.reentrancy!r}")
        if self.kind == "mock" and self.reentrancy != "concurrent":
            raise ValueError("the mock generator is always concurrent")
        if self.kind == "remote":
            if self.timeout <= 0:
                raise ValueError("remote timeout must be positive")
            if self.retries < 0:
                raise ValueError("retries must be >= 0")


class MockGenerator:
    """Renders the constraint facts as canonical sentences.

    Only facts about mentioned entities are rendered (all facts when the
    context mentions none), sorted by subject, predicate, object. The output
    can never state anything the constraints do not hold.
    """

    reentrancy = "concurrent"

    def __init__(self, grammar: ClaimGrammar, seed: int = 0) -> None:
        self.grammar = grammar
        self.seed = seed

    def generate(self, context: QueryContext, constraints: KnowledgeState) -> Response:
        mentions = set(context.mentioned_entities)
        facts = [t for t in constraints.sorted_facts() if not mentions or t.subject in mentions]
        sentences = [render_claim(Claim(t.with_confidence(1.0)), self.grammar) for t in facts]
        text = " ".join(s for s in sentences if s is not None)
        response = with_claims(text, self.grammar)
        return Response(response.text, response.claims, tuple(1.0 for _ in response.claims))


class RemoteGenerator:
    """Client for ``POST /generate``.

    Request ``{context, constraints: [{subject, predicate, object, confidence}]}``,
    response ``{text, claim_confidences}``. Generation is read-only, so failed
    attempts are retried up to ``retries`` times.
    """

    def __init__(
        self,
        endpoint: str,
        grammar: ClaimGrammar,
        timeout: float = 10.0,
        retries: int = 2,
        reentrancy: str = "concurrent",
    ) -> None:
        self.url = endpoint.rstrip("/")
        if not self.url.endswith("/generate"):
            self.url += "/generate"
        self.grammar = grammar
        self.timeout = timeout
        self.retries = retries
        self.reentrancy = reentrancy
        self._lock = threading.Lock() if reentrancy == "serial" else None

    def _post(self, payload: bytes) -> dict:
        req = urllib.request.Request(
            self.url, data=payload, headers={"Content-Type": "application/json"}, method="POST"
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            body = resp.read()
        try:
            doc = json.loads(body)
        except ValueError as exc:
            raise GeneratorUnavailable(f"generator returned invalid JSON: {exc}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("text"), str):
            raise GeneratorUnavailable("generator response lacks a 'text' string")
        confs = doc.get("claim_confidences", [])
        if not isinstance(confs, list) or any(
            isinstance(c, bool) or not isinstance(c, (int, float)) or not 0 <= c <= 1 for c in confs
        ):
            raise GeneratorUnavailable("claim_confidences must be a list of numbers in [0,1]")
        return doc

    def generate(self, context: QueryContext, constraints: KnowledgeState) -> Response:
        payload = json.dumps(
            {"context": context.text, "constraints": [triple_to_json(t) for t in constraints.sorted_facts()]},
            sort_keys=True,
            default=str,
        ).encode("utf-8")
        last: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                if self._lock is not None:
                    with self._lock:
                        doc = self._post(payload)
                else:
                    doc = self._post(payload)
                break
            except GeneratorUnavailable:
                raise
            except (urllib.error.URLError, OSError, TimeoutError) as exc:
                last = exc
        else:
            raise GeneratorUnavailable(f"generator at {self.url} unreachable: {last}")
        response = with_claims(doc["text"], self.grammar)
        confs = doc.get("claim_confidences") or None
        return Response(response.text, response.claims, tuple(confs) if confs else None)


def make_generator(binding: GeneratorBinding, grammar: ClaimGrammar):
    if binding.kind == "mock":
        return MockGenerator(grammar, binding.seed)
    endpoint = binding.endpoint or os.environ.get(ENV_URL)
    if not endpoint:
        raise GeneratorUnavailable(f"no generator endpoint configured (set {ENV_URL})")
    return RemoteGenerator(endpoint, grammar, binding.timeout, binding.retries, binding.reentrancy)


def generate(context: QueryContext, constraints: KnowledgeState, binding: GeneratorBinding, grammar: ClaimGrammar) -> Response:
    return make_generator(binding, grammar).generate(context, constraints)
