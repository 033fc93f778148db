"""Pipeline configuration: a canonical JSON document plus loaders for its parts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

from claimguard.causal import ScmConfig
from claimguard.extraction import load_lexicon
from claimguard.fusion import FusionWeights, load_weights
from claimguard.generator import GeneratorBinding, make_generator
from claimguard.kgraph import load_kb, load_rules
from claimguard.logic.prover import ProverLimits
from claimguard.model import Thresholds, canonical_dumps

FORMATS = ("text", "canonical")


class ConfigError(ValueError):
    pass


def bundled(name: str) -> str:
    """Path of a data file shipped with the package (kb.tsv, rules.txt, lexicon.tsv)."""
    return str(resources.files("claimguard") / "data" / name)


@dataclass(frozen=True)
class GeneratorSection:
    kind: str = "mock"
    seed: int = 0
    endpoint: Optional[str] = None
    timeout_ms: int = 10_000
    reentrancy: str = "concurrent"
    retries: int = 2

    def binding(self) -> GeneratorBinding:
        return GeneratorBinding(self.kind, self.seed, self.endpoint, self.timeout_ms / 1000.0, self.reentrancy, self.retries)


@dataclass(frozen=True)
class ScmSection:
    u_k: int = 0
    u_y: int = 0
    u_h: int = 0
    n_draws: int = 1
    confounders: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    kb_path: Optional[str] = None
    rules_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    weights_path: Optional[str] = None
    weights: Optional[Mapping[str, float]] = None
    accept: float = 0.35
    reject: float = 0.65
    hops: int = 2
    max_clauses: int = 50_000
    max_depth: int = 40
    scm: ScmSection = field(default_factory=ScmSection)
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    format: str = "text"

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.weights_path is not None and self.weights is not None:
            raise ConfigError("give either weights_path or inline weights, not both")
        if self.weights is not None and set(self.weights) != {"alpha", "beta", "gamma", "bias"}:
            raise ConfigError("inline weights need exactly alpha, beta, gamma and bias")
        Thresholds(self.accept, self.reject)

    # -- documents -------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}

    def dumps(self) -> str:
        return canonical_dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        kw = dict(d)
        try:
            if "scm" in kw:
                kw["scm"] = ScmSection(**kw["scm"])
            if "generator" in kw:
                kw["generator"] = GeneratorSection(**kw["generator"])
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def loads(cls, text: str) -> "PipelineConfig":
        try:
            doc = json.loads(text)
        except ValueError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        cfg = cls.loads(Path(path).read_text(encoding="utf-8"))
        cfg.check_files()
        return cfg

    def override(self, **changes) -> "PipelineConfig":
        """Copy with every non-None keyword applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def check_files(self) -> None:
        for name in ("kb_path", "rules_path", "lexicon_path", "weights_path"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name} does not exist: {p}")

    # -- resolved parts --------------------------------------------------

    def load_weights(self) -> FusionWeights:
        if self.weights_path is not None:
            return load_weights(self.weights_path)
        if self.weights is not None:
            w = self.weights
            return FusionWeights.normalized(w["alpha"], w["beta"], w["gamma"], w["bias"])
        return FusionWeights()

    def thresholds(self) -> Thresholds:
        return Thresholds(self.accept, self.reject)

    def limits(self) -> ProverLimits:
        return ProverLimits(max_clauses=self.max_clauses, max_depth=self.max_depth)

    def scm_config(self) -> ScmConfig:
        s = self.scm
        return ScmConfig(self.hops, s.u_k, s.u_y, s.u_h, s.confounders, s.n_draws)

    def build_verifier(self):
        from claimguard.pipeline import Verifier

        kb = load_kb(self.kb_path or bundled("kb.tsv"))
        rules = load_rules(self.rules_path or bundled("rules.txt"))
        grammar = load_lexicon(self.lexicon_path or bundled("lexicon.tsv"))
        return Verifier(
            kb,
            grammar,
            rules,
            weights=self.load_weights(),
            thresholds=self.thresholds(),
            hops=self.hops,
            limits=self.limits(),
            generator=make_generator(self.generator.binding(), grammar),
        )
