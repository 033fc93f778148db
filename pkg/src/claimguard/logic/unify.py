"""Most general unifiers for function-free literals."""

from __future__ import annotations

from typing import Mapping, Optional

from claimguard.logic.terms import Literal, Term, VAR


def _walk(t: Term, subst: Mapping[str, Term]) -> Term:
    while t.kind == VAR and t.value in subst:
        t = subst[t.value]
    return t


def unify_terms(pairs, subst: Optional[Mapping[str, Term]] = None) -> Optional[dict[str, Term]]:
    s: dict[str, Term] = dict(subst or {})
    for x, y in pairs:
        x, y = _walk(x, s), _walk(y, s)
        if x == y:
            continue
        if x.kind == VAR:
            s[x.value] = y
        elif y.kind == VAR:
            s[y.value] = x
        else:
            return None
    # no function symbols, so resolving chains is the whole occurs check
    return {k: _walk(v, s) for k, v in s.items()}


def unify(a: Literal, b: Literal, subst: Optional[Mapping[str, Term]] = None) -> Optional[dict[str, Term]]:
    """MGU of the atoms of ``a`` and ``b`` (signs are ignored), or None."""
    if a.predicate != b.predicate or len(a.args) != len(b.args):
        return None
    return unify_terms(zip(a.args, b.args), subst)
