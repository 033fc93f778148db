"""Claim extraction from response text.

Sentences of the form ``<subject> <verb phrase> <object>.`` are mapped to
triples through a lexicon of verb phrases. A negation marker may sit just
before the phrase or after its first word ("was not born in"). Anything else
is skipped. ``@claim(s, p, o)`` directives give an exact alternative.
"""

from __future__ import annotations

import re
from decimal import Decimal
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from claimguard.model import (
    Claim,
    NormalizationError,
    Response,
    Triple,
    format_value,
    normalize_entity,
    parse_value,
    value_kind,
)

DEFAULT_NEGATION_MARKERS = ("not", "never")
_WORD_PUNCT = re.compile(r"[^\w]")
_DIRECTIVE = re.compile(r"^(!?)@claim\((.*)\)$")


class LexiconFormatError(ValueError):
    pass


class MalformedDirective(ValueError):
    def __init__(self, line: int, detail: str = "") -> None:
        super().__init__(f"malformed @claim directive on line {line}" + (f": {detail}" if detail else ""))
        self.line = line


@dataclass(frozen=True)
class ClaimGrammar:
    """Verb-phrase lexicon in file order plus negation markers."""

    entries: tuple[tuple[tuple[str, ...], str], ...]
    negation_markers: tuple[str, ...] = DEFAULT_NEGATION_MARKERS

    def __post_init__(self) -> None:
        seen: dict[tuple[str, ...], str] = {}
        for phrase, pred in self.entries:
            if not phrase:
                raise LexiconFormatError("empty verb phrase")
            if phrase in seen and seen[phrase] != pred:
                raise LexiconFormatError(f"phrase {' '.join(phrase)!r} maps to both {seen[phrase]} and {pred}")
            if set(phrase) & set(self.negation_markers):
                raise LexiconFormatError(f"phrase {' '.join(phrase)!r} contains a negation marker")
            seen[phrase] = pred

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], negation_markers=DEFAULT_NEGATION_MARKERS) -> "ClaimGrammar":
        entries = []
        for phrase, pred in pairs:
            toks = tuple(_WORD_PUNCT.sub("", w.lower()) for w in phrase.split())
            entries.append((tuple(t for t in toks if t), normalize_entity(pred)))
        return cls(tuple(entries), tuple(negation_markers))

    @property
    def patterns(self) -> list[tuple[tuple[str, ...], str]]:
        """Longest phrase first; ties keep file order."""
        order = {e: i for i, e in enumerate(self.entries)}
        return sorted(dict.fromkeys(self.entries), key=lambda e: (-len(e[0]), order[e]))

    def phrase_for(self, predicate: str) -> Optional[tuple[str, ...]]:
        for phrase, pred in self.entries:
            if pred == predicate:
                return phrase
        return None

    def renders(self, predicate: str) -> bool:
        return self.phrase_for(predicate) is not None


def parse_lexicon(text: str) -> ClaimGrammar:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = raw.strip("\r\n").split("\t")
        if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
            raise LexiconFormatError(f"line {lineno}: expected 'verb phrase<TAB>predicate'")
        pairs.append((cols[0].strip(), cols[1].strip()))
    return ClaimGrammar.from_pairs(pairs)


def load_lexicon(path: Union[str, Path]) -> ClaimGrammar:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Sentence spans; a sentence ends at [.?!] followed by whitespace or end of text."""
    spans = []
    start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch in ".?!" and (i + 1 == n or text[i + 1].isspace()):
            spans.append((start, i + 1))
            start = i + 1
    if start < n:
        spans.append((start, n))
    out = []
    for a, b in spans:
        while a < b and text[a].isspace():
            a += 1
        while b > a and text[b - 1].isspace():
            b -= 1
        if a < b:
            out.append((a, b))
    return out


def _match_at(low: list[str], i: int, phrase: tuple[str, ...], markers: tuple[str, ...]) -> Optional[tuple[int, bool]]:
    j = i
    negated = False
    if j < len(low) and low[j] in markers:
        negated = True
        j += 1
    for k, ptok in enumerate(phrase):
        if k == 1 and not negated and j < len(low) and low[j] in markers:
            negated = True
            j += 1
        if j >= len(low) or low[j] != ptok:
            return None
        j += 1
    return j, negated


def parse_sentence(sentence: str, grammar: ClaimGrammar) -> Optional[tuple[str, str, object, bool]]:
    body = sentence.rstrip()
    if body and body[-1] in ".?!":
        body = body[:-1]
    toks = body.split()
    low = [_WORD_PUNCT.sub("", t.lower()) for t in toks]
    for phrase, pred in grammar.patterns:
        for i in range(1, len(toks)):
            m = _match_at(low, i, phrase, grammar.negation_markers)
            if m is None:
                continue
            j, negated = m
            if j >= len(toks):
                continue
            try:
                subject = normalize_entity(" ".join(toks[:i]))
                obj = parse_value(" ".join(toks[j:]))
            except (NormalizationError, ValueError):
                continue
            return subject, pred, obj, negated
    return None


def extract_claims(
    response: Union[Response, str], grammar: ClaimGrammar, trace: Optional[list[str]] = None
) -> list[Claim]:
    """One claim per sentence the grammar covers, in text order.

    Skipped sentences are noted in ``trace`` when one is supplied.
    """
    text = response.text if isinstance(response, Response) else response
    claims = []
    for a, b in split_sentences(text):
        parsed = parse_sentence(text[a:b], grammar)
        if parsed is None:
            if trace is not None:
                trace.append(f"skipped sentence {text[a:b]!r}: no lexicon pattern matched")
            continue
        s, p, o, negated = parsed
        claims.append(Claim(Triple(s, p, o), "negated" if negated else "asserted", (a, b)))
    return claims


def with_claims(response: Union[Response, str], grammar: ClaimGrammar, trace: Optional[list[str]] = None) -> Response:
    if isinstance(response, str):
        response = Response(response)
    return Response(response.text, tuple(extract_claims(response, grammar, trace)), response.claim_confidences)


def parse_structured_claims(text: str) -> list[Claim]:
    """Parse ``@claim(subject, predicate, object)`` lines; ``!`` negates."""
    claims = []
    offset = 0
    for lineno, raw in enumerate(text.splitlines(keepends=True), 1):
        line = raw.strip()
        start = offset + (len(raw) - len(raw.lstrip()))
        offset += len(raw)
        if "@claim" not in line:
            continue
        m = _DIRECTIVE.match(line)
        if m is None:
            raise MalformedDirective(lineno, "expected [!]@claim(subject, predicate, object)")
        args = [a.strip() for a in m.group(2).split(",")]
        if len(args) != 3 or not all(args):
            raise MalformedDirective(lineno, f"expected 3 arguments, got {len(args)}")
        try:
            triple = Triple(normalize_entity(args[0]), normalize_entity(args[1]), parse_value(args[2]))
        except ValueError as exc:
            raise MalformedDirective(lineno, str(exc)) from None
        polarity = "negated" if m.group(1) else "asserted"
        claims.append(Claim(triple, polarity, (start, start + len(line))))
    return claims


def display_value(value) -> str:
    kind = value_kind(value)
    if kind == "entity":
        return " ".join(w.capitalize() for w in value.split("_"))
    if kind == "number" and isinstance(value, float):
        # positional notation so the sentence parses back to the same number
        return format(Decimal(repr(value)), "f")
    return format_value(value)


def render_claim(claim: Claim, grammar: ClaimGrammar) -> Optional[str]:
    """Canonical sentence for ``claim``, or None if its predicate has no phrase."""
    phrase = grammar.phrase_for(claim.triple.predicate)
    if phrase is None:
        return None
    words = list(phrase)
    if claim.negated:
        marker = grammar.negation_markers[0]
        words.insert(1 if len(words) > 1 else 0, marker)
    t = claim.triple
    return f"{display_value(t.subject)} {' '.join(words)} {display_value(t.object)}."


def render_claims(claims: Sequence[Claim], grammar: ClaimGrammar) -> str:
    return " ".join(s for s in (render_claim(c, grammar) for c in claims) if s is not None)
