"""Score fusion: uncertainty term, symbolic ratio, convex combination, weight fitting."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

_SUM_TOL = 1e-5


class InputOutOfRange(ValueError):
    pass


class DegenerateData(ValueError):
    pass


class WeightsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FusionWeights:
    """Convex weights for (p_causal, p_symbolic, uncertainty).

    ``bias`` never enters the score. The fitted decision boundary sits at
    ``score == -bias``; the default of -0.5 puts it mid-scale.
    """

    alpha: float = 0.2
    beta: float = 0.6
    gamma: float = 0.2
    bias: float = -0.5

    def __post_init__(self) -> None:
        ws = (self.alpha, self.beta, self.gamma)
        if any(not math.isfinite(w) or w < 0 for w in ws) or not math.isfinite(self.bias):
            raise ValueError(f"weights must be finite and non-negative: {self}")
        if abs(sum(ws) - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {sum(ws)}); use FusionWeights.normalized")

    @classmethod
    def normalized(cls, alpha: float, beta: float, gamma: float, bias: float = -0.5) -> "FusionWeights":
        ws = [max(0.0, float(w)) for w in (alpha, beta, gamma)]
        total = sum(ws)
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        return cls(ws[0] / total, ws[1] / total, ws[2] / total, float(bias))

    @property
    def decision_threshold(self) -> float:
        return min(1.0, max(0.0, -self.bias))

    @property
    def verdict_offset(self) -> float:
        """Shift applied to the verdict thresholds so the band centres on the boundary."""
        return self.decision_threshold - 0.5

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def save_weights(weights: FusionWeights, path: str | Path) -> None:
    Path(path).write_text(
        f"{weights.alpha!r} {weights.beta!r} {weights.gamma!r} {weights.bias!r}\n", encoding="utf-8"
    )


def parse_weights(text: str) -> FusionWeights:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) != 1:
        raise WeightsFormatError("weights file must hold exactly one line 'alpha beta gamma bias'")
    parts = lines[0].split()
    if len(parts) != 4:
        raise WeightsFormatError(f"expected 4 numbers, got {len(parts)}")
    try:
        a, b, g, bias = (float(p) for p in parts)
    except ValueError as exc:
        raise WeightsFormatError(str(exc)) from None
    return FusionWeights.normalized(a, b, g, bias)


def load_weights(path: str | Path) -> FusionWeights:
    return parse_weights(Path(path).read_text(encoding="utf-8"))


def uncertainty(response, statuses: Sequence[str]) -> float:
    """Complement of mean generator confidence, else the unverifiable fraction.

    Returns 0.5 for a response with no claims.
    """
    confs = getattr(response, "claim_confidences", None)
    if confs:
        return 1.0 - sum(confs) / len(confs)
    if not statuses:
        return 0.5
    return sum(1 for s in statuses if s == "unverifiable") / len(statuses)


def p_symbolic(statuses: Sequence[str]) -> float:
    if not statuses:
        return 0.0
    bad = sum(1.0 if s == "contradicted" else 0.5 if s == "unverifiable" else 0.0 for s in statuses)
    return bad / len(statuses)


def fuse(p_causal: float, p_symbolic: float, u: float, w: FusionWeights) -> float:
    for name, v in (("p_causal", p_causal), ("p_symbolic", p_symbolic), ("uncertainty", u)):
        if not 0.0 <= v <= 1.0:
            raise InputOutOfRange(f"{name}={v} not in [0,1]")
    score = w.alpha * p_causal + w.beta * p_symbolic + w.gamma * u
    # float rounding can push a convex combination of ones a hair past 1
    return min(1.0, max(0.0, score))


@dataclass(frozen=True)
class FitResult:
    weights: FusionWeights
    scale: float
    losses: tuple[float, ...]
    accuracy: float
    learning_rate: float = field(default=0.0)

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def _features(examples: Iterable[Mapping]) -> tuple[np.ndarray, np.ndarray]:
    rows, labels = [], []
    for ex in examples:
        u = ex["uncertainty"] if "uncertainty" in ex else ex["u"]
        rows.append((float(ex["p_causal"]), float(ex["p_symbolic"]), float(u)))
        labels.append(int(ex["label"]))
    return np.asarray(rows, dtype=float).reshape(-1, 3), np.asarray(labels, dtype=float)


def _loss(x, y, w, b, t) -> float:
    z = math.exp(t) * (x @ w + b)
    # log(1 + e^z) - y z, stable
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _project(w: np.ndarray) -> np.ndarray:
    w = np.clip(w, 0.0, None)
    total = w.sum()
    return w / total if total > 0 else np.full(3, 1.0 / 3.0)


def fit_weights(
    examples: Sequence[Mapping],
    seed: int = 0,
    epochs: int = 500,
    learning_rate: float = 0.5,
    init_scale: float = 4.0,
) -> FitResult:
    """Fit simplex weights by full-batch gradient descent on logistic loss.

    The model is ``sigmoid(s * (w.x + bias))`` with ``w`` kept on the simplex
    by clip-and-renormalise after every step and ``s = exp(t)`` a learned
    sharpness. A step that raises the loss is rejected and the learning rate
    halved, so the recorded loss curve never increases.
    """
    x, y = _features(examples)
    if len(y) < 2 or y.min() == y.max():
        raise DegenerateData("need at least two examples covering both labels")

    rng = random.Random(seed)
    w = _project(np.array([1.0 + 0.01 * rng.random() for _ in range(3)]))
    b = -float(np.mean(x @ w))
    t = math.log(init_scale)
    lr = float(learning_rate)
    loss = _loss(x, y, w, b, t)
    losses = [loss]
    for _ in range(epochs):
        s = math.exp(t)
        margin = x @ w + b
        p = 1.0 / (1.0 + np.exp(-s * margin))
        g = (p - y) / len(y)
        grad_w = s * (x.T @ g)
        grad_b = s * float(g.sum())
        grad_t = s * float(g @ margin)
        w_new = _project(w - lr * grad_w)
        b_new = b - lr * grad_b
        t_new = t - lr * grad_t
        new_loss = _loss(x, y, w_new, b_new, t_new)
        if new_loss <= loss:
            w, b, t, loss = w_new, b_new, t_new, new_loss
        else:
            lr *= 0.5
        losses.append(loss)

    weights = FusionWeights(float(w[0]), float(w[1]), float(w[2]), float(b))
    return FitResult(
        weights=weights,
        scale=math.exp(t),
        losses=tuple(losses),
        accuracy=accuracy(examples, weights),
        learning_rate=lr,
    )


def accuracy(examples: Sequence[Mapping], weights: FusionWeights, threshold: Optional[float] = None) -> float:
    """Fraction classified correctly by ``w.x >= threshold`` (default: the fitted boundary)."""
    x, y = _features(examples)
    if len(y) == 0:
        return 0.0
    cut = -weights.bias if threshold is None else threshold
    pred = (x @ np.array(weights.as_tuple()) >= cut).astype(float)
    return float(np.mean(pred == y))
