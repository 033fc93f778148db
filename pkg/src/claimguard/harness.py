"""Synthetic corpora with planted errors, batch scoring and detection metrics."""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from claimguard.extraction import ClaimGrammar, display_value
from claimguard.generator import MockGenerator
from claimguard.kgraph import KnowledgeBase
from claimguard.model import Claim, KnowledgeState, QueryContext, Triple, VerdictReport, canonical_dumps

LABELS = ("clean", "hallucinated")


class InsufficientEntities(ValueError):
    pass


class UndefinedMetric(ArithmeticError):
    pass


@dataclass(frozen=True)
class LabeledExample:
    id: str
    context: str
    response: str
    label: str
    gold_contradicted_claims: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    @property
    def positive(self) -> bool:
        return self.label == "hallucinated"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "context": self.context,
            "response": self.response,
            "label": self.label,
            "gold_contradicted_claims": list(self.gold_contradicted_claims),
        }

    @classmethod
    def from_json(cls, d: dict) -> "LabeledExample":
        return cls(d["id"], d["context"], d["response"], d["label"], tuple(d.get("gold_contradicted_claims") or ()))


def write_dataset(examples: Iterable[LabeledExample], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), sort_keys=True, ensure_ascii=False) + "\n")


def read_dataset(path: Union[str, Path]) -> list[LabeledExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(LabeledExample.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record: {exc}") from None
    return out


def _swap_pool(kb: KnowledgeBase, grammar: ClaimGrammar) -> dict[str, list]:
    """Per functional, renderable predicate: the distinct objects seen in the KB."""
    pool: dict[str, set] = {}
    for t in kb.triples:
        if t.predicate in kb.declarations.functional and grammar.renders(t.predicate):
            pool.setdefault(t.predicate, set()).add(t.object)
    return {p: sorted(objs, key=lambda o: (type(o).__name__, o)) for p, objs in pool.items()}


def perturb_corpus(
    kb: KnowledgeBase,
    n_examples: int,
    hallucination_rate: float,
    seed: int,
    grammar: ClaimGrammar,
    max_facts: int = 3,
) -> list[LabeledExample]:
    """Render true facts about one subject per example; corrupt one fact in a
    seeded subset of exactly round(rate * n) examples.

    Corruption swaps the object of a functional fact for another object the
    KB uses with that predicate, so every planted error contradicts the KB.
    """
    if not 0.0 <= hallucination_rate <= 1.0:
        raise ValueError("hallucination_rate must lie in [0,1]")
    if n_examples < 0 or max_facts < 1:
        raise ValueError("n_examples must be >= 0 and max_facts >= 1")
    if not kb.triples:
        raise InsufficientEntities("empty knowledge base")
    rng = random.Random(seed)
    gen = MockGenerator(grammar)
    pool = _swap_pool(kb, grammar)

    by_subject: dict[str, list[Triple]] = {}
    for t in sorted(kb.triples, key=lambda t: t.sort_key()):
        if grammar.renders(t.predicate):
            by_subject.setdefault(t.subject, []).append(t)
    subjects = sorted(by_subject)
    if not subjects:
        raise InsufficientEntities("no fact in the knowledge base can be rendered")

    def corruptible(t: Triple) -> bool:
        return len(pool.get(t.predicate, ())) >= 2

    bad_subjects = [s for s in subjects if any(corruptible(t) for t in by_subject[s])]
    n_bad = int(math.floor(hallucination_rate * n_examples + 0.5))
    if n_bad and not bad_subjects:
        raise InsufficientEntities("no functional predicate has two distinct objects to swap between")
    bad = set(rng.sample(range(n_examples), n_bad))

    examples = []
    for i in range(n_examples):
        hallucinated = i in bad
        subject = rng.choice(bad_subjects if hallucinated else subjects)
        facts = by_subject[subject]
        gold: tuple[str, ...] = ()
        if hallucinated:
            target = rng.choice([t for t in facts if corruptible(t)])
            others = [t for t in facts if t is not target]
            chosen = [target] + rng.sample(others, min(len(others), rng.randint(0, max_facts - 1)))
            wrong = rng.choice([o for o in pool[target.predicate] if o != target.object])
            corrupted = Triple(target.subject, target.predicate, wrong)
            chosen[0] = corrupted
            gold = (Claim(corrupted).id,)
        else:
            chosen = rng.sample(facts, min(len(facts), rng.randint(1, max_facts)))
        context = f"Tell me about {display_value(subject)}."
        text = gen.generate(QueryContext(context, (subject,)), KnowledgeState.from_triples(chosen)).text
        examples.append(LabeledExample(f"ex-{seed}-{i:05d}", context, text, "hallucinated" if hallucinated else "clean", gold))
    return examples


def _ratio(num: float, den: float) -> float:
    if den == 0:
        raise UndefinedMetric(f"{num}/{den}")
    return num / den


def _defined(num: float, den: float) -> Optional[float]:
    try:
        return _ratio(num, den)
    except UndefinedMetric:
        return None


def f1_score(precision: Optional[float], recall: Optional[float]) -> Optional[float]:
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


def auc_rank(scores: Sequence[float], positives: Sequence[bool]) -> Optional[float]:
    """Rank-sum (Mann-Whitney) AUC with tied scores sharing their average rank."""
    n_pos = sum(1 for p in positives if p)
    n_neg = len(positives) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    pos_rank_sum = sum(r for r, p in zip(ranks, positives) if p)
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


@dataclass(frozen=True)
class Metrics:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    auc: Optional[float]
    counts: dict
    threshold: float
    claim_counts: dict = field(default_factory=dict)
    latency_stats: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "threshold": self.threshold,
            "counts": dict(self.counts),
            "claim_counts": dict(self.claim_counts),
        }
        # undefined metrics are left out rather than reported as zero
        for name in ("precision", "recall", "f1", "auc"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        if timing:
            d["latency"] = dict(self.latency_stats)
        return d

    def dumps(self, timing: bool = False) -> str:
        return canonical_dumps(self.to_dict(timing))


def metrics_from_scores(scores: Sequence[float], positives: Sequence[bool], threshold: float) -> Metrics:
    tp = fp = tn = fn = 0
    for s, pos in zip(scores, positives):
        pred = s >= threshold
        if pred and pos:
            tp += 1
        elif pred:
            fp += 1
        elif pos:
            fn += 1
        else:
            tn += 1
    p = _defined(tp, tp + fp)
    r = _defined(tp, tp + fn)
    return Metrics(p, r, f1_score(p, r), auc_rank(scores, positives), {"tp": tp, "fp": fp, "tn": tn, "fn": fn}, threshold)


@dataclass(frozen=True)
class Scored:
    example: LabeledExample
    report: VerdictReport
    seconds: float


def score_dataset(verifier, dataset: Sequence[LabeledExample]) -> list[Scored]:
    out = []
    for ex in dataset:
        t0 = time.perf_counter()
        report = verifier.verify(ex.context, ex.response)
        out.append(Scored(ex, report, time.perf_counter() - t0))
    return out


def _p95(xs: Sequence[float]) -> float:
    ordered = sorted(xs)
    return ordered[max(0, math.ceil(0.95 * len(ordered)) - 1)]


def summarize(scored: Sequence[Scored], threshold: float) -> Metrics:
    base = metrics_from_scores([s.report.score for s in scored], [s.example.positive for s in scored], threshold)
    ctp = cfp = cfn = 0
    for s in scored:
        gold = set(s.example.gold_contradicted_claims)
        found = {r.claim.id for r in s.report.per_claim if r.status == "contradicted"}
        ctp += len(gold & found)
        cfp += len(found - gold)
        cfn += len(gold - found)
    secs = [s.seconds for s in scored]
    latency = {"mean": sum(secs) / len(secs), "p95": _p95(secs)} if secs else {}
    return Metrics(
        base.precision,
        base.recall,
        base.f1,
        base.auc,
        base.counts,
        threshold,
        {"tp": ctp, "fp": cfp, "fn": cfn},
        latency,
    )


def evaluate(verifier, dataset: Sequence[LabeledExample], threshold: float) -> Metrics:
    return summarize(score_dataset(verifier, dataset), threshold)


def feature_rows(scored: Sequence[Scored]) -> list[dict]:
    """Training rows for weight fitting: the three fused inputs plus the label."""
    return [
        {
            "id": s.example.id,
            "p_causal": s.report.p_causal,
            "p_symbolic": s.report.p_symbolic,
            "uncertainty": s.report.uncertainty,
            "label": int(s.example.positive),
        }
        for s in scored
    ]
