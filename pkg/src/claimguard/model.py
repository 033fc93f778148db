"""Shared domain vocabulary: entities, triples, claims, knowledge states, reports.

Everything here is immutable after construction. The canonical report format
is a key-sorted JSON document with every real number printed to six decimals,
so equal reports always serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Iterable, Literal, Mapping, Optional, Union

from claimguard.fusion import FusionWeights, fuse

Value = Union[str, int, float, date]

Polarity = Literal["asserted", "negated"]
Status = Literal["supported", "contradicted", "unverifiable"]
Verdict = Literal["accept", "flag", "reject"]
Provenance = Literal["kb", "inferred", "intervened"]

POLARITIES = ("asserted", "negated")
STATUSES = ("supported", "contradicted", "unverifiable")
VERDICTS = ("accept", "flag", "reject")
PROVENANCES = ("kb", "inferred", "intervened")

_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)
_SPACE = re.compile(r"\s+")
_UNDERSCORES = re.compile(r"_+")
NUMBER_RE = re.compile(r"^-?\d+(?:\.\d+)?$")
DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


class NormalizationError(ValueError):
    pass


def normalize_entity(surface: str) -> str:
    """Lowercase, drop punctuation and join words with single underscores."""
    text = _PUNCT.sub("", surface.strip().lower())
    text = _SPACE.sub("_", text.strip())
    text = _UNDERSCORES.sub("_", text).strip("_")
    if not text:
        raise NormalizationError(f"empty entity after normalization: {surface!r}")
    return text


def value_kind(value: Value) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not valid object literals")
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, date):
        return "date"
    if isinstance(value, str):
        return "entity"
    raise TypeError(f"unsupported object literal: {value!r}")


def canonical_number(x: Union[int, float]) -> Union[int, float]:
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite number: {x!r}")
        if x.is_integer():
            return int(x)
    return x


def parse_value(text: str) -> Value:
    """Read an object literal: number, ISO-8601 date, or entity surface form."""
    s = text.strip()
    if DATE_RE.match(s):
        return date.fromisoformat(s)
    if NUMBER_RE.match(s):
        return canonical_number(float(s)) if "." in s else int(s)
    return normalize_entity(s)


def format_value(value: Value) -> str:
    kind = value_kind(value)
    if kind == "number":
        return repr(canonical_number(value))
    if kind == "date":
        return value.isoformat()
    return value


def _value_sort_key(value: Value) -> tuple:
    kind = value_kind(value)
    if kind == "number":
        return (0, float(value), "")
    if kind == "date":
        return (1, 0.0, value.isoformat())
    return (2, 0.0, value)


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Value
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.subject or not self.predicate:
            raise ValueError("triple subject and predicate must be non-empty")
        if value_kind(self.object) == "number":
            object.__setattr__(self, "object", canonical_number(self.object))
        c = float(self.confidence)
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"confidence out of [0,1]: {c}")
        object.__setattr__(self, "confidence", c)

    @property
    def key(self) -> tuple[str, str, Value]:
        return (self.subject, self.predicate, self.object)

    @property
    def object_kind(self) -> str:
        return value_kind(self.object)

    def sort_key(self) -> tuple:
        return (self.subject, self.predicate, _value_sort_key(self.object))

    def with_confidence(self, confidence: float) -> "Triple":
        return Triple(self.subject, self.predicate, self.object, confidence)

    def __str__(self) -> str:
        return f"{self.predicate}({self.subject}, {format_value(self.object)})"


def sorted_triples(triples: Iterable[Triple]) -> list[Triple]:
    return sorted(triples, key=Triple.sort_key)


@dataclass(frozen=True)
class Claim:
    triple: Triple
    polarity: Polarity = "asserted"
    source_span: Optional[tuple[int, int]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.polarity not in POLARITIES:
            raise ValueError(f"bad polarity {self.polarity!r}")
        if self.source_span is not None:
            start, end = self.source_span
            if not 0 <= start <= end:
                raise ValueError(f"bad source span {self.source_span}")

    @property
    def id(self) -> str:
        t = self.triple
        content = "\x1f".join(
            (t.subject, t.predicate, value_kind(t.object), format_value(t.object), self.polarity)
        )
        return hashlib.sha256(content.encode("utf-8")).hexdigest()[:16]

    @property
    def negated(self) -> bool:
        return self.polarity == "negated"

    def __str__(self) -> str:
        return ("~" if self.negated else "") + str(self.triple)


def unique_claims(claims: Iterable[Claim]) -> list[Claim]:
    """First occurrence of each claim id, in order."""
    seen: set[str] = set()
    out = []
    for c in claims:
        if c.id not in seen:
            seen.add(c.id)
            out.append(c)
    return out


@dataclass(frozen=True)
class QueryContext:
    text: str
    mentioned_entities: tuple[str, ...] = ()

    @classmethod
    def from_text(cls, text: str, vocabulary: Iterable[str] = ()) -> "QueryContext":
        return cls(text, find_mentions(text, vocabulary))


def find_mentions(text: str, vocabulary: Iterable[str]) -> tuple[str, ...]:
    """Known entities appearing in ``text``, longest match first, in text order."""
    vocab = set(vocabulary)
    if not vocab or not text.strip():
        return ()
    max_len = max(v.count("_") + 1 for v in vocab)
    tokens = []
    for raw in text.split():
        try:
            tokens.append(normalize_entity(raw))
        except NormalizationError:
            continue
    found: list[str] = []
    i = 0
    while i < len(tokens):
        for n in range(min(max_len, len(tokens) - i), 0, -1):
            cand = "_".join(tokens[i : i + n])
            if cand in vocab:
                if cand not in found:
                    found.append(cand)
                i += n
                break
        else:
            i += 1
    return tuple(found)


@dataclass(frozen=True)
class Response:
    text: str
    claims: tuple[Claim, ...] = ()
    claim_confidences: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        for c in self.claims:
            if c.source_span is not None and c.source_span[1] > len(self.text):
                raise ValueError(f"claim span {c.source_span} outside response text")
        if self.claim_confidences is not None:
            confs = tuple(float(x) for x in self.claim_confidences)
            if any(not 0.0 <= x <= 1.0 for x in confs):
                raise ValueError("claim confidences must lie in [0,1]")
            object.__setattr__(self, "claim_confidences", confs)

    @property
    def claim_ids(self) -> frozenset[str]:
        return frozenset(c.id for c in self.claims)


@dataclass(frozen=True)
class KnowledgeState:
    """Weighted facts treated as known for one query.

    ``removed`` keeps facts severed by do-interventions so the state records
    what was touched, not only what survived.
    """

    facts: frozenset[Triple] = frozenset()
    provenance: Mapping[tuple, str] = field(default_factory=dict)
    removed: frozenset[Triple] = frozenset()

    def __post_init__(self) -> None:
        keys = [t.key for t in self.facts]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (subject, predicate, object) keys in knowledge state")
        if set(self.provenance) != set(keys):
            raise ValueError("provenance must cover exactly the state's facts")
        bad = [p for p in self.provenance.values() if p not in PROVENANCES]
        if bad:
            raise ValueError(f"unknown provenance tags {bad}")
        object.__setattr__(self, "provenance", dict(self.provenance))

    @classmethod
    def from_triples(cls, triples: Iterable[Triple], provenance: str = "kb") -> "KnowledgeState":
        best: dict[tuple, Triple] = {}
        for t in triples:
            cur = best.get(t.key)
            if cur is None or t.confidence > cur.confidence:
                best[t.key] = t
        return cls(frozenset(best.values()), {k: provenance for k in best})

    def __len__(self) -> int:
        return len(self.facts)

    def sorted_facts(self) -> list[Triple]:
        return sorted_triples(self.facts)


@dataclass(frozen=True)
class Thresholds:
    accept: float = 0.35
    reject: float = 0.65

    def __post_init__(self) -> None:
        if not 0.0 <= self.accept <= self.reject <= 1.0:
            raise ValueError(f"thresholds must satisfy 0 <= accept <= reject <= 1, got {self}")

    def verdict(self, score: float, offset: float = 0.0) -> str:
        """Verdict band for ``score``; ``offset`` shifts both cut points."""
        if score < self.accept + offset:
            return "accept"
        if score < self.reject + offset:
            return "flag"
        return "reject"


@dataclass(frozen=True)
class ClaimResult:
    claim: Claim
    status: Status
    evidence: tuple[Triple, ...] = ()
    proof: Any = None  # ProofTrace or None
    consistency: Optional[float] = None

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")
        if self.status == "contradicted" and not self.evidence:
            raise ValueError("contradicted claims must carry evidence")


@dataclass(frozen=True)
class VerdictReport:
    score: float
    verdict: Verdict
    p_causal: float
    p_symbolic: float
    uncertainty: float
    weights: FusionWeights
    per_claim: tuple[ClaimResult, ...] = ()
    trace: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name in ("score", "p_causal", "p_symbolic", "uncertainty"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {v}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")

    def recomputed_score(self) -> float:
        return fuse(self.p_causal, self.p_symbolic, self.uncertainty, self.weights)


# ----------------------------------------------------------------------------
# canonical document format
# ----------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def canonical_dumps(obj: Any) -> str:
    """Key-sorted JSON with floats fixed at six decimals; newline-terminated."""
    out: list[str] = []

    def emit(o: Any, indent: int) -> None:
        pad = "  " * indent
        if o is None:
            out.append("null")
        elif isinstance(o, bool):
            out.append("true" if o else "false")
        elif isinstance(o, int):
            out.append(str(o))
        elif isinstance(o, float):
            out.append(_fmt_float(o))
        elif isinstance(o, str):
            out.append(json.dumps(o, ensure_ascii=True))
        elif isinstance(o, Mapping):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            items = sorted(o.items())
            for i, (k, v) in enumerate(items):
                out.append(pad + "  " + json.dumps(str(k), ensure_ascii=True) + ": ")
                emit(v, indent + 1)
                out.append(",\n" if i < len(items) - 1 else "\n")
            out.append(pad + "}")
        elif isinstance(o, (list, tuple)):
            if not o:
                out.append("[]")
                return
            out.append("[\n")
            for i, v in enumerate(o):
                out.append(pad + "  ")
                emit(v, indent + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(pad + "]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    out.append("\n")
    return "".join(out)


def value_to_json(value: Value) -> Union[str, int, float]:
    kind = value_kind(value)
    if kind == "date":
        return value.isoformat()
    return value


def value_from_json(raw: Union[str, int, float]) -> Value:
    if isinstance(raw, bool):
        raise ValueError("boolean is not an object literal")
    if isinstance(raw, (int, float)):
        return canonical_number(raw)
    if DATE_RE.match(raw):
        return date.fromisoformat(raw)
    return raw


def triple_to_json(t: Triple) -> dict:
    return {
        "subject": t.subject,
        "predicate": t.predicate,
        "object": value_to_json(t.object),
        "confidence": float(t.confidence),
    }


def triple_from_json(d: Mapping) -> Triple:
    return Triple(d["subject"], d["predicate"], value_from_json(d["object"]), float(d["confidence"]))


def report_to_dict(report: VerdictReport) -> dict:
    claims = []
    for r in report.per_claim:
        t = r.claim.triple
        claims.append(
            {
                "id": r.claim.id,
                "subject": t.subject,
                "predicate": t.predicate,
                "object": value_to_json(t.object),
                "polarity": r.claim.polarity,
                "span": list(r.claim.source_span) if r.claim.source_span else None,
                "status": r.status,
                "evidence": [triple_to_json(e) for e in r.evidence],
                "proof": r.proof.to_json() if r.proof is not None else None,
                "consistency": None if r.consistency is None else float(r.consistency),
            }
        )
    w = report.weights
    return {
        "score": float(report.score),
        "verdict": report.verdict,
        "p_causal": float(report.p_causal),
        "p_symbolic": float(report.p_symbolic),
        "uncertainty": float(report.uncertainty),
        "weights": {
            "alpha": float(w.alpha),
            "beta": float(w.beta),
            "gamma": float(w.gamma),
            "bias": float(w.bias),
        },
        "claims": claims,
        "trace": list(report.trace),
    }


def serialize_report(report: VerdictReport) -> str:
    return canonical_dumps(report_to_dict(report))


def parse_report(document: str) -> VerdictReport:
    from claimguard.logic.trace import ProofTrace

    d = json.loads(document)
    per_claim = []
    for c in d["claims"]:
        triple = Triple(c["subject"], c["predicate"], value_from_json(c["object"]))
        span = tuple(c["span"]) if c.get("span") is not None else None
        claim = Claim(triple, c["polarity"], span)
        if claim.id != c["id"]:
            raise ValueError(f"claim id mismatch for {claim}: {c['id']} != {claim.id}")
        proof = ProofTrace.from_json(c["proof"]) if c.get("proof") is not None else None
        per_claim.append(
            ClaimResult(
                claim,
                c["status"],
                tuple(triple_from_json(e) for e in c["evidence"]),
                proof,
                c.get("consistency"),
            )
        )
    w = d["weights"]
    return VerdictReport(
        score=d["score"],
        verdict=d["verdict"],
        p_causal=d["p_causal"],
        p_symbolic=d["p_symbolic"],
        uncertainty=d["uncertainty"],
        weights=FusionWeights(w["alpha"], w["beta"], w["gamma"], w["bias"]),
        per_claim=tuple(per_claim),
        trace=tuple(d["trace"]),
    )
