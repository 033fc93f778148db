"""Replay a proof trace step by step.

Shares only the data types with the prover. Substitution, builtin
evaluation and variant matching are re-implemented here so a prover bug
cannot vouch for itself.
"""

from __future__ import annotations

from typing import Iterable, Optional

from claimguard.logic.terms import Clause, Literal, Term
from claimguard.logic.trace import BUILTIN, FACTOR, INPUT, RESOLVE, ProofTrace


class TraceError(AssertionError):
    pass


def _apply(lit: Literal, mapping: dict[str, Term]) -> Literal:
    out = []
    for a in lit.args:
        if a.kind == "var":
            seen = set()
            while a.kind == "var" and a.value in mapping and a.value not in seen:
                seen.add(a.value)
                a = mapping[a.value]
        out.append(a)
    return Literal(lit.predicate, tuple(out), lit.negated)


def _truth(lit: Literal, tol: float) -> Optional[bool]:
    """Truth of a ground builtin literal including its sign."""
    if len(lit.args) != 2:
        return None
    a, b = lit.args
    if a.kind == "var" or b.kind == "var":
        return None
    p = lit.predicate
    val: Optional[bool]
    if p == "eq":
        val = a.kind == b.kind and (abs(a.value - b.value) <= tol if a.kind == "num" else a.value == b.value)
    elif p in ("lt", "leq", "eq_num"):
        if "const" in (a.kind, b.kind):
            return None
        ok_kind = a.kind == b.kind and (a.kind == "num" or (a.kind == "time" and p != "eq_num"))
        if not ok_kind:
            val = False
        elif p == "lt":
            val = a.value < b.value
        elif p == "leq":
            val = a.value <= b.value
        else:
            val = abs(a.value - b.value) <= tol
    elif p in ("before", "after", "same_time"):
        if "const" in (a.kind, b.kind):
            return None
        if a.kind != "time" or b.kind != "time":
            val = False
        else:
            val = {"before": a.value < b.value, "after": a.value > b.value, "same_time": a.value == b.value}[p]
    else:
        return None
    return (not val) if lit.negated else val


def is_variant(a: Iterable[Literal], b: Iterable[Literal]) -> bool:
    """True when the two literal sets differ only by a bijective variable renaming."""
    xs, ys = sorted(set(a), key=str), list(set(b))
    if len(xs) != len(ys):
        return False

    def match_lit(x: Literal, y: Literal, fwd: dict, bwd: dict) -> Optional[tuple[dict, dict]]:
        if x.predicate != y.predicate or x.negated != y.negated or len(x.args) != len(y.args):
            return None
        fwd, bwd = dict(fwd), dict(bwd)
        for s, t in zip(x.args, y.args):
            if s.kind == "var" or t.kind == "var":
                if s.kind != "var" or t.kind != "var":
                    return None
                if fwd.get(s.value, t.value) != t.value or bwd.get(t.value, s.value) != s.value:
                    return None
                fwd[s.value] = t.value
                bwd[t.value] = s.value
            elif s != t:
                return None
        return fwd, bwd

    def search(i: int, used: frozenset, fwd: dict, bwd: dict) -> bool:
        if i == len(xs):
            return True
        for j, y in enumerate(ys):
            if j in used:
                continue
            m = match_lit(xs[i], y, fwd, bwd)
            if m is not None and search(i + 1, used | {j}, *m):
                return True
        return False

    return search(0, frozenset(), {}, {})


def check_trace(
    trace: ProofTrace,
    premises: Iterable[Clause],
    goal: Optional[Literal] = None,
    tolerance: float = 1e-9,
) -> None:
    """Raise TraceError unless every step of ``trace`` is a valid inference
    from ``premises`` (plus the negated goal) ending in the empty clause."""
    allowed = [c.literals for c in premises]
    if goal is not None:
        allowed.append(frozenset({goal.complement()}))
    clauses: dict[int, frozenset[Literal]] = {}
    if not trace.steps:
        raise TraceError("empty trace")
    for step in trace.steps:
        if step.id in clauses:
            raise TraceError(f"duplicate step id {step.id}")
        for p in step.parents:
            if p not in clauses:
                raise TraceError(f"step {step.id} cites unknown or later parent {p}")
        got = step.clause.literals
        if step.rule == INPUT:
            if step.parents or not any(is_variant(got, c) for c in allowed):
                raise TraceError(f"step {step.id}: {step.clause} is not an input clause")
        elif step.rule == RESOLVE:
            if len(step.parents) != 2 or len(step.literals) != 2:
                raise TraceError(f"step {step.id}: resolution needs two parents and two literals")
            c1, c2 = clauses[step.parents[0]], clauses[step.parents[1]]
            l1, l2 = step.literals
            if l1 not in c1 or l2 not in c2:
                raise TraceError(f"step {step.id}: resolved literal missing from its parent")
            rho = {k: Term("var", v) for k, v in step.renaming}
            if len({v for _, v in step.renaming}) != len(step.renaming):
                raise TraceError(f"step {step.id}: renaming is not injective")
            sigma = dict(step.unifier)
            a = _apply(l1, sigma)
            b = _apply(_apply(l2, rho), sigma)
            if a.negated == b.negated or a.predicate != b.predicate or a.args != b.args:
                raise TraceError(f"step {step.id}: {a} and {b} are not complementary under the unifier")
            expected = {_apply(x, sigma) for x in c1 if x != l1}
            expected |= {_apply(_apply(x, rho), sigma) for x in c2 if x != l2}
            if not is_variant(expected, got):
                raise TraceError(f"step {step.id}: resolvent {step.clause} does not follow from its parents")
        elif step.rule == FACTOR:
            (parent,) = step.parents
            c = clauses[parent]
            x, y = step.literals
            sigma = dict(step.unifier)
            if x not in c or y not in c or _apply(x, sigma) != _apply(y, sigma):
                raise TraceError(f"step {step.id}: invalid factoring")
            if not is_variant({_apply(l, sigma) for l in c}, got):
                raise TraceError(f"step {step.id}: factor {step.clause} does not match")
        elif step.rule == BUILTIN:
            (parent,) = step.parents
            c = clauses[parent]
            for lit in step.literals:
                if lit not in c or _truth(lit, tolerance) is not False:
                    raise TraceError(f"step {step.id}: {lit} is not a false ground builtin of the parent")
            if not is_variant(c - set(step.literals), got):
                raise TraceError(f"step {step.id}: simplified clause {step.clause} does not match")
        else:
            raise TraceError(f"step {step.id}: unknown rule {step.rule!r}")
        clauses[step.id] = got
    if trace.steps[-1].clause.literals:
        raise TraceError("trace does not end in the empty clause")
