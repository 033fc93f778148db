"""Command-line interface: verify, prove, bench, fit."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from claimguard.config import ConfigError, PipelineConfig, bundled
from claimguard.extraction import LexiconFormatError, MalformedDirective
from claimguard.fusion import DegenerateData, WeightsFormatError, fit_weights, save_weights
from claimguard.generator import GeneratorUnavailable
from claimguard.harness import InsufficientEntities, feature_rows, perturb_corpus, score_dataset, summarize
from claimguard.intervene import explain, explanation_dict
from claimguard.kgraph import FixpointBudgetExceeded, KBFormatError, RuleFormatError, graph_from_triples, load_kb, load_rules
from claimguard.logic import FolParseError, check_trace, parse_literal, theorem_prove
from claimguard.logic.verify import extract_premises, shipped_rules
from claimguard.model import canonical_dumps, report_to_dict

EXIT_OK, EXIT_ERROR, EXIT_FLAG, EXIT_REJECT = 0, 1, 2, 3
VERDICT_EXIT = {"accept": EXIT_OK, "flag": EXIT_FLAG, "reject": EXIT_REJECT}

OPERATIONAL_ERRORS = (
    OSError,
    ConfigError,
    KBFormatError,
    RuleFormatError,
    LexiconFormatError,
    MalformedDirective,
    WeightsFormatError,
    GeneratorUnavailable,
    FixpointBudgetExceeded,
    InsufficientEntities,
    DegenerateData,
    ValueError,
)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    cfg = cfg.override(
        kb_path=args.kb,
        rules_path=getattr(args, "rules", None),
        lexicon_path=getattr(args, "lexicon", None),
        hops=getattr(args, "hops", None),
        format=getattr(args, "format", None),
    )
    if getattr(args, "weights", None):
        cfg = replace(cfg, weights_path=args.weights, weights=None)
    gen = cfg.generator
    seed = getattr(args, "seed", None)
    if seed is not None:
        gen = replace(gen, seed=seed)
    if getattr(args, "generator", None):
        gen = replace(gen, kind=args.generator)
    if getattr(args, "gen_timeout_ms", None) is not None:
        gen = replace(gen, timeout_ms=args.gen_timeout_ms)
    cfg = replace(cfg, generator=gen)
    cfg.check_files()
    return cfg


def _with_threshold(verifier, threshold: Optional[float]):
    if threshold is not None:
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("--threshold must lie in [0,1]")
        verifier.weights = replace(verifier.weights, bias=-threshold)
    return verifier


def _format_text(report) -> str:
    lines = [f"verdict: {report.verdict}", f"score: {report.score:.6f}"]
    lines.append(
        f"p_causal: {report.p_causal:.6f}  p_symbolic: {report.p_symbolic:.6f}  uncertainty: {report.uncertainty:.6f}"
    )
    for r in report.per_claim:
        line = f"[{r.status}] {r.claim}"
        if r.evidence:
            line += "  evidence: " + "; ".join(str(e) for e in r.evidence)
        lines.append(line)
    if not report.per_claim:
        lines.append("no verifiable claims extracted")
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    cfg = _config(args)
    verifier = _with_threshold(cfg.build_verifier(), args.threshold)
    if args.response_file:
        response = Path(args.response_file).read_text(encoding="utf-8")
    else:
        response = args.response
    report = verifier.verify(args.context or "", response)
    if cfg.format == "canonical":
        doc = report_to_dict(report)
        if args.explain:
            doc["explanation"] = explanation_dict(report)
        sys.stdout.write(canonical_dumps(doc))
    elif args.explain:
        sys.stdout.write(explain(report))
    else:
        sys.stdout.write(_format_text(report))
    return VERDICT_EXIT[report.verdict]


def cmd_prove(args) -> int:
    try:
        goal = parse_literal(args.goal)
    except FolParseError as exc:
        print(f"error: {exc.render()}", file=sys.stderr)
        return EXIT_ERROR
    kb = load_kb(args.kb or bundled("kb.tsv"))
    rules = list(load_rules(args.rules or bundled("rules.txt"))) + shipped_rules()
    graph = graph_from_triples(kb.triples, rules)
    premises = extract_premises(graph, goal, rules, kb.declarations)
    result = theorem_prove(premises, goal, require_goal=True)
    if result.proof is None:
        print(f"no proof ({result.outcome.replace('_', ' ')})")
        return EXIT_FLAG
    check_trace(result.proof, premises, goal)
    print(f"proof of {goal} ({len(result.proof.steps)} steps)")
    for line in result.proof.render():
        print("  " + line)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.n <= 0:
        return _fail("--n must be positive")
    cfg = _config(args)
    verifier = cfg.build_verifier()
    corpus = perturb_corpus(verifier.kb, args.n, args.rate, args.seed, verifier.grammar)
    fitted = None
    if not args.weights and not (cfg.weights or cfg.weights_path):
        # weights come from a separate corpus so evaluation data stays unseen
        train = perturb_corpus(verifier.kb, max(args.n, 20), 0.5, args.seed + 1, verifier.grammar)
        fitted = fit_weights(feature_rows(score_dataset(verifier, train)), seed=args.seed)
        verifier.weights = fitted.weights
    _with_threshold(verifier, args.threshold)
    scored = score_dataset(verifier, corpus)
    if args.dump_features:
        with open(args.dump_features, "w", encoding="utf-8") as fh:
            for row in feature_rows(scored):
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    metrics = summarize(scored, verifier.weights.decision_threshold)
    doc = metrics.to_dict(timing=args.timing)
    w = verifier.weights
    doc["weights"] = {"alpha": w.alpha, "beta": w.beta, "gamma": w.gamma, "bias": w.bias}
    doc["n"] = len(corpus)
    doc["weights_source"] = "fitted" if fitted is not None else "configured"
    sys.stdout.write(canonical_dumps(doc))
    return EXIT_OK


def _read_examples(path: str) -> list[dict]:
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            for key in ("p_causal", "p_symbolic", "label"):
                row[key]
            if "uncertainty" not in row and "u" not in row:
                raise KeyError("uncertainty")
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}:{lineno}: bad example ({exc})") from None
        rows.append(row)
    return rows


def cmd_fit(args) -> int:
    rows = _read_examples(args.examples_file)
    result = fit_weights(rows, seed=args.seed, epochs=args.epochs, learning_rate=args.lr)
    save_weights(result.weights, args.out)
    print(f"final loss: {result.final_loss:.6f}")
    print(f"accuracy: {result.accuracy:.6f}")
    w = result.weights
    print(f"weights: alpha {w.alpha:.6f} beta {w.beta:.6f} gamma {w.gamma:.6f} bias {w.bias:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="claimguard", description="Verify factual claims against a knowledge base.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pipeline: bool = True):
        p.add_argument("--kb", help="knowledge base TSV (default: bundled demo KB)")
        p.add_argument("--rules", help="rule file (default: bundled rules)")
        if pipeline:
            p.add_argument("--lexicon", help="verb-phrase lexicon TSV (default: bundled)")
            p.add_argument("--config", help="pipeline configuration JSON; flags override it")
            p.add_argument("--weights", help="weights file 'alpha beta gamma bias'")
            p.add_argument("--threshold", type=float, help="decision threshold; overrides the weights' bias")
            p.add_argument("--hops", type=int, help="relation-mining radius")
            p.add_argument("--generator", choices=("mock", "remote"), help="generator kind")
            p.add_argument("--gen-timeout-ms", type=int, help="remote generator timeout in milliseconds")

    v = sub.add_parser("verify", help="score a response and report per-claim verdicts")
    common(v)
    v.add_argument("--context", default="", help="the query text")
    group = v.add_mutually_exclusive_group(required=True)
    group.add_argument("--response", help="response text")
    group.add_argument("--response-file", help="file holding the response text")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--format", choices=("text", "canonical"), default=None)
    v.add_argument("--explain", action="store_true", help="include the full explanation")
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("prove", help="run the prover on a goal over the KB closure")
    common(p, pipeline=False)
    p.add_argument("goal", help="goal literal, e.g. 'born_in_country(albert_einstein, germany)'")
    p.set_defaults(func=cmd_prove)

    b = sub.add_parser("bench", help="evaluate detection on a seeded synthetic corpus")
    common(b)
    b.add_argument("--n", type=int, default=200)
    b.add_argument("--rate", type=float, default=0.5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--timing", action="store_true", help="include latency statistics (not deterministic)")
    b.add_argument("--dump-features", help="write per-example features as JSON lines")
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("fit", help="fit fusion weights from labeled feature rows")
    f.add_argument("--examples-file", required=True, help="JSON lines with p_causal, p_symbolic, uncertainty, label")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--epochs", type=int, default=500)
    f.add_argument("--lr", type=float, default=0.5)
    f.add_argument("--out", required=True, help="weights file to write")
    f.set_defaults(func=cmd_fit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OPERATIONAL_ERRORS as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
