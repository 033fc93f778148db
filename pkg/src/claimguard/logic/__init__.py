"""First-order clauses, resolution proving and claim verification."""

from claimguard.logic.checker import TraceError, check_trace
from claimguard.logic.prover import ProveResult, ProverLimits, theorem_prove
from claimguard.logic.syntax import FolParseError, parse_clause, parse_literal
from claimguard.logic.terms import Clause, Literal, Term
from claimguard.logic.trace import ProofStep, ProofTrace
from claimguard.logic.unify import unify

__all__ = [
    "Clause",
    "FolParseError",
    "Literal",
    "ProofStep",
    "ProofTrace",
    "ProveResult",
    "ProverLimits",
    "Term",
    "TraceError",
    "check_trace",
    "parse_clause",
    "parse_literal",
    "theorem_prove",
    "unify",
]
