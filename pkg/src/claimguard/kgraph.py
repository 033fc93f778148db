"""Query-scoped knowledge graphs: KB loading, relation mining, rule closure."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from claimguard.logic.syntax import FolParseError, parse_rule_text
from claimguard.logic.terms import VAR, Literal, Term, literal_truth, term_from_value, term_to_value
from claimguard.model import (
    Claim,
    NormalizationError,
    QueryContext,
    Triple,
    normalize_entity,
    parse_value,
    sorted_triples,
    value_kind,
)

DEFAULT_HOPS = 2
DEFAULT_MAX_INFERRED = 100_000
RANGE_KINDS = ("entity", "number", "date")


class KBFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None) -> None:
        where = f"{path or '<kb>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class RuleFormatError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class FixpointBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Declarations:
    functional: frozenset[str] = frozenset()
    ranges: Mapping[str, str] = field(default_factory=dict)

    def range_of(self, predicate: str) -> Optional[str]:
        return self.ranges.get(predicate)


@dataclass(frozen=True)
class KnowledgeBase:
    triples: frozenset[Triple] = frozenset()
    declarations: Declarations = Declarations()

    @classmethod
    def from_triples(cls, triples: Iterable[Triple], declarations: Declarations = Declarations()) -> "KnowledgeBase":
        best: dict[tuple, Triple] = {}
        for t in triples:
            rng = declarations.range_of(t.predicate)
            if rng is not None and t.object_kind != rng:
                raise KBFormatError(f"{t} has a {t.object_kind} object but {t.predicate} ranges over {rng}")
            cur = best.get(t.key)
            if cur is None or t.confidence > cur.confidence:
                best[t.key] = t
        return cls(frozenset(best.values()), declarations)

    @cached_property
    def adjacency(self) -> dict[str, tuple[Triple, ...]]:
        adj: dict[str, list[Triple]] = {}
        for t in sorted_triples(self.triples):
            adj.setdefault(t.subject, []).append(t)
            if t.object_kind == "entity" and t.object != t.subject:
                adj.setdefault(t.object, []).append(t)
        return {k: tuple(v) for k, v in adj.items()}

    @cached_property
    def entities(self) -> frozenset[str]:
        return frozenset(self.adjacency)

    @cached_property
    def predicates(self) -> frozenset[str]:
        return frozenset(t.predicate for t in self.triples)

    def facts_about(self, subject: str) -> list[Triple]:
        return [t for t in self.adjacency.get(subject, ()) if t.subject == subject]

    def context(self, text: str) -> QueryContext:
        return QueryContext.from_text(text, self.entities)


def parse_kb(text: str, path: Optional[str] = None) -> KnowledgeBase:
    """Read the TSV format ``subject<TAB>predicate<TAB>object[<TAB>confidence]``.

    ``#!functional p`` and ``#!range p kind`` lines declare predicate
    properties; other ``#`` lines are comments.
    """
    functional: set[str] = set()
    ranges: dict[str, str] = {}
    rows: list[tuple[int, Triple]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#!"):
            parts = line[2:].split()
            if not parts:
                raise KBFormatError("empty directive", lineno, path)
            try:
                if parts[0] == "functional" and len(parts) == 2:
                    functional.add(normalize_entity(parts[1]))
                elif parts[0] == "range" and len(parts) == 3:
                    if parts[2] not in RANGE_KINDS:
                        raise KBFormatError(f"range kind must be one of {RANGE_KINDS}", lineno, path)
                    ranges[normalize_entity(parts[1])] = parts[2]
                else:
                    raise KBFormatError(f"unknown directive {line!r}", lineno, path)
            except NormalizationError as exc:
                raise KBFormatError(str(exc), lineno, path) from None
            continue
        if line.startswith("#"):
            continue
        cols = raw.rstrip("\r\n").split("\t")
        if len(cols) not in (3, 4):
            raise KBFormatError(f"expected 3 or 4 tab-separated columns, got {len(cols)}", lineno, path)
        try:
            conf = float(cols[3]) if len(cols) == 4 and cols[3].strip() else 1.0
            rows.append(
                (lineno, Triple(normalize_entity(cols[0]), normalize_entity(cols[1]), parse_value(cols[2]), conf))
            )
        except ValueError as exc:
            raise KBFormatError(str(exc), lineno, path) from None
    decls = Declarations(frozenset(functional), ranges)
    for lineno, t in rows:
        rng = decls.range_of(t.predicate)
        if rng is not None and t.object_kind != rng:
            raise KBFormatError(f"object {t.object!r} is not a {rng} (range of {t.predicate})", lineno, path)
    return KnowledgeBase.from_triples((t for _, t in rows), decls)


def load_kb(path: str | Path) -> KnowledgeBase:
    p = Path(path)
    return parse_kb(p.read_text(encoding="utf-8"), str(p))


@dataclass(frozen=True)
class Rule:
    """Range-restricted Horn rule; a ``None`` head makes it an integrity constraint."""

    body: tuple[Literal, ...]
    head: Optional[Literal]
    text: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError("rule body must be non-empty")
        if any(lit.negated for lit in self.body) or (self.head is not None and self.head.negated):
            raise ValueError("rules use positive atoms only")
        body_vars: set[str] = set()
        for lit in self.body:
            body_vars |= lit.variables()
            if not lit.is_builtin and len(lit.args) != 2:
                raise ValueError(f"relation atoms are binary: {lit}")
        if self.head is not None:
            if self.head.is_builtin or len(self.head.args) != 2:
                raise ValueError(f"rule head must be a binary relation atom: {self.head}")
            if not self.head.variables() <= body_vars:
                raise ValueError(f"head variables not bound by the body: {self}")
        for lit in self.body:
            if lit.is_builtin and not lit.variables() <= {v for l in self.body if not l.is_builtin for v in l.variables()}:
                raise ValueError(f"builtin {lit} uses variables no relation atom binds")

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def predicates(self) -> frozenset[str]:
        preds = {lit.predicate for lit in self.body}
        if self.head is not None:
            preds.add(self.head.predicate)
        return frozenset(preds)

    def __str__(self) -> str:
        head = "false" if self.head is None else str(self.head)
        return " & ".join(str(l) for l in self.body) + " -> " + head


def parse_rule(text: str) -> Rule:
    body, head = parse_rule_text(text)
    return Rule(body, head, text.strip())


def parse_rules(text: str) -> list[Rule]:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rules.append(parse_rule(line))
        except FolParseError as exc:
            raise RuleFormatError(exc.render(), lineno) from None
        except ValueError as exc:
            raise RuleFormatError(str(exc), lineno) from None
    return rules


def load_rules(path: str | Path) -> list[Rule]:
    return parse_rules(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class KnowledgeGraph:
    vertices: frozenset[str] = frozenset()
    edges: frozenset[Triple] = frozenset()
    provenance: Mapping[tuple, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for t in self.edges:
            if t.subject not in self.vertices or (t.object_kind == "entity" and t.object not in self.vertices):
                raise ValueError(f"edge {t} has an endpoint outside the vertex set")

    @classmethod
    def from_edges(
        cls, edges: Iterable[Triple], provenance: str = "mined", extra_vertices: Iterable[str] = ()
    ) -> "KnowledgeGraph":
        edges = frozenset(edges)
        verts = set(extra_vertices)
        for t in edges:
            verts.add(t.subject)
            if t.object_kind == "entity":
                verts.add(t.object)
        return cls(frozenset(verts), edges, {t.key: provenance for t in edges})

    @cached_property
    def by_key(self) -> dict[tuple, Triple]:
        return {t.key: t for t in self.edges}

    @cached_property
    def hop_index(self) -> dict[str, tuple[Triple, ...]]:
        adj: dict[str, list[Triple]] = {v: [] for v in self.vertices}
        for t in sorted_triples(self.edges):
            adj[t.subject].append(t)
            if t.object_kind == "entity" and t.object != t.subject:
                adj[t.object].append(t)
        return {k: tuple(v) for k, v in adj.items()}

    @cached_property
    def by_predicate(self) -> dict[str, tuple[Triple, ...]]:
        out: dict[str, list[Triple]] = {}
        for t in sorted_triples(self.edges):
            out.setdefault(t.predicate, []).append(t)
        return {k: tuple(v) for k, v in out.items()}

    def edges_with(self, subject: str, predicate: str) -> list[Triple]:
        return [t for t in self.hop_index.get(subject, ()) if t.subject == subject and t.predicate == predicate]

    def component(self, seeds: Iterable[str]) -> set[str]:
        """Entities connected to any seed (undirected)."""
        seen = {s for s in seeds if s in self.hop_index}
        queue = deque(sorted(seen))
        while queue:
            v = queue.popleft()
            for t in self.hop_index[v]:
                ends = (t.subject, t.object) if t.object_kind == "entity" else (t.subject,)
                for w in ends:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
        return seen

    def provenance_of(self, triple: Triple) -> Optional[str]:
        return self.provenance.get(triple.key)


def collect_entities(context: QueryContext, claims: Sequence[Claim]) -> frozenset[str]:
    out = set(context.mentioned_entities)
    for c in claims:
        out.add(c.triple.subject)
        if c.triple.object_kind == "entity":
            out.add(c.triple.object)
    return frozenset(out)


def reachable(seeds: Iterable[str], kb: KnowledgeBase, hops: int) -> set[str]:
    """Entities within ``hops`` undirected edges of a seed."""
    if hops < 0:
        raise ValueError("hops must be >= 0")
    adj = kb.adjacency
    seen = set(seeds)
    frontier = sorted(seen)
    for _ in range(hops):
        nxt = []
        for v in frontier:
            for t in adj.get(v, ()):
                w = t.object if t.subject == v else t.subject
                if t.object_kind == "entity" and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    return seen


def mine_relations(entities: Iterable[str], kb: KnowledgeBase, hops: int = DEFAULT_HOPS) -> frozenset[Triple]:
    region = reachable(entities, kb, hops)
    adj = kb.adjacency
    return frozenset(t for v in region for t in adj.get(v, ()))


def _match(body: Sequence[Literal], graph_index: Mapping[str, Sequence[Triple]], tolerance: float):
    """Yield (binding, matched edges) for every ground instantiation of ``body``."""
    relations = [l for l in body if not l.is_builtin]
    guards = [l for l in body if l.is_builtin]

    def bind(term: Term, value, binding: dict) -> Optional[dict]:
        if term.kind == VAR:
            bound = binding.get(term.value)
            if bound is None:
                new = dict(binding)
                new[term.value] = value
                return new
            return binding if bound == value and type(bound) is type(value) else None
        return binding if term_to_value(term) == value else None

    def walk(i: int, binding: dict, used: tuple[Triple, ...]):
        if i == len(relations):
            for g in guards:
                ground = Literal(
                    g.predicate,
                    tuple(term_from_value(binding[a.value]) if a.kind == VAR else a for a in g.args),
                )
                if literal_truth(ground, tolerance) is not True:
                    return
            yield binding, used
            return
        lit = relations[i]
        s_term, o_term = lit.args
        for t in graph_index.get(lit.predicate, ()):
            b = bind(s_term, t.subject, binding)
            if b is None:
                continue
            b = bind(o_term, t.object, b)
            if b is None:
                continue
            yield from walk(i + 1, b, used + (t,))

    yield from walk(0, {}, ())


def apply_rules(
    graph: KnowledgeGraph,
    rules: Sequence[Rule],
    max_inferred: int = DEFAULT_MAX_INFERRED,
    tolerance: float = 1e-9,
) -> KnowledgeGraph:
    """Forward-chain ``rules`` over ``graph`` to a fixpoint.

    Inferred edges carry the minimum confidence of the body edges that
    produced them (the best such derivation when several exist). Mined edges
    are never overwritten.
    """
    derivers = [r for r in rules if r.head is not None]
    if not derivers:
        return graph
    edges: dict[tuple, Triple] = dict(graph.by_key)
    prov: dict[tuple, str] = dict(graph.provenance)
    inferred = sum(1 for p in prov.values() if p == "inferred")
    changed = True
    while changed:
        changed = False
        index: dict[str, list[Triple]] = {}
        for t in sorted_triples(edges.values()):
            index.setdefault(t.predicate, []).append(t)
        new: dict[tuple, Triple] = {}
        for rule in derivers:
            head = rule.head
            for binding, used in _match(rule.body, index, tolerance):
                s = binding[head.args[0].value] if head.args[0].kind == VAR else term_to_value(head.args[0])
                o = binding[head.args[1].value] if head.args[1].kind == VAR else term_to_value(head.args[1])
                if not isinstance(s, str):
                    continue
                conf = min(t.confidence for t in used)
                key = (s, head.predicate, o)
                cur = edges.get(key) or new.get(key)
                if cur is not None and (prov.get(key) == "mined" or cur.confidence >= conf):
                    continue
                new[key] = Triple(s, head.predicate, o, conf)
        for key, t in new.items():
            if key not in edges:
                inferred += 1
                if inferred > max_inferred:
                    raise FixpointBudgetExceeded(f"more than {max_inferred} inferred edges")
            edges[key] = t
            prov[key] = "inferred"
            changed = True
    verts = set(graph.vertices)
    for t in edges.values():
        verts.add(t.subject)
        if t.object_kind == "entity":
            verts.add(t.object)
    return KnowledgeGraph(frozenset(verts), frozenset(edges.values()), prov)


def build_graph(
    context: QueryContext,
    claims: Sequence[Claim],
    kb: KnowledgeBase,
    rules: Sequence[Rule] = (),
    hops: int = DEFAULT_HOPS,
    max_inferred: int = DEFAULT_MAX_INFERRED,
) -> KnowledgeGraph:
    seeds = collect_entities(context, claims)
    mined = mine_relations(seeds, kb, hops)
    graph = KnowledgeGraph.from_edges(mined, "mined", extra_vertices=seeds)
    return apply_rules(graph, rules, max_inferred)


def graph_from_triples(triples: Iterable[Triple], rules: Sequence[Rule] = (), max_inferred: int = DEFAULT_MAX_INFERRED) -> KnowledgeGraph:
    """Close a plain fact set under ``rules`` (used for knowledge-state evaluation)."""
    return apply_rules(KnowledgeGraph.from_edges(triples, "mined"), rules, max_inferred)
