import itertools
import random

import numpy as np
import pytest

from claimguard.fusion import (
    DegenerateData,
    FusionWeights,
    InputOutOfRange,
    WeightsFormatError,
    accuracy,
    fit_weights,
    fuse,
    load_weights,
    p_symbolic,
    parse_weights,
    save_weights,
    uncertainty,
)
from claimguard.model import Response


def test_uncertainty_rules():
    assert uncertainty(Response("", claim_confidences=(1.0, 1.0)), ["supported", "supported"]) == 0.0
    assert uncertainty(Response(""), ["supported", "unverifiable"]) == 0.5
    assert uncertainty(Response("", claim_confidences=(0.8, 0.6)), ["supported"] * 2) == pytest.approx(0.3)
    assert uncertainty(Response(""), []) == 0.5


def test_p_symbolic():
    assert p_symbolic(["supported"] * 3) == 0.0
    assert p_symbolic(["contradicted"] * 2) == 1.0
    assert p_symbolic(["supported", "contradicted", "unverifiable"]) == pytest.approx(0.5)
    assert p_symbolic([]) == 0.0


def test_fuse_examples():
    w = FusionWeights(0.5, 0.3, 0.2)
    assert fuse(0, 0, 0, w) == 0.0
    assert fuse(1, 1, 1, w) == 1.0
    assert fuse(0.6, 0.9, 0.3, w) == pytest.approx(0.63, abs=1e-12)
    with pytest.raises(InputOutOfRange):
        fuse(1.2, 0, 0, w)


def test_weights_validation_and_normalization():
    with pytest.raises(ValueError):
        FusionWeights(0.5, 0.5, 0.5)
    w = FusionWeights.normalized(2, 1, 1, -0.4)
    assert w.as_tuple() == (0.5, 0.25, 0.25) and w.decision_threshold == 0.4


def test_weights_file_round_trip(tmp_path):
    w = FusionWeights.normalized(0.123456789, 0.7, 0.2, -0.3141592653)
    save_weights(w, tmp_path / "w.txt")
    assert load_weights(tmp_path / "w.txt") == w
    assert parse_weights("2 1 1 -0.5\n").as_tuple() == (0.5, 0.25, 0.25)
    for bad in ["1 2 3", "a b c d", "", "1 0 0 0\n1 0 0 0"]:
        with pytest.raises(WeightsFormatError):
            parse_weights(bad)


def test_fuse_bounded_and_monotone():
    rng = random.Random(0)
    for _ in range(10_000):
        w = FusionWeights.normalized(rng.random(), rng.random(), rng.random())
        x = [rng.random() for _ in range(3)]
        s = fuse(*x, w)
        assert 0.0 <= s <= 1.0
        i = rng.randrange(3)
        y = list(x)
        y[i] = x[i] + (1 - x[i]) * rng.random()
        assert fuse(*y, w) >= s


def separable_toy(n=200, seed=3, gap=0.1):
    rng = random.Random(seed)
    rows = []
    while len(rows) < n:
        ps = rng.random()
        if abs(ps - 0.5) < gap:
            continue
        rows.append({"p_causal": rng.random(), "p_symbolic": ps, "uncertainty": rng.random(), "label": int(ps > 0.5)})
    return rows


def grid_has_perfect_separator(rows, step=0.01):
    """Brute force over the weight simplex at ``step`` resolution with any cut point."""
    x = np.array([[r["p_causal"], r["p_symbolic"], r["uncertainty"]] for r in rows])
    y = np.array([r["label"] for r in rows], dtype=bool)
    n = int(round(1 / step))
    for i, j in itertools.product(range(n + 1), repeat=2):
        if i + j > n:
            continue
        w = np.array([i, j, n - i - j]) / n
        s = x @ w
        if s[~y].max() < s[y].min():
            return True
    return False


def test_fit_separable_toy():
    rows = separable_toy()
    assert grid_has_perfect_separator(rows)
    res = fit_weights(rows, seed=0)
    assert res.accuracy == 1.0
    assert accuracy(rows, res.weights, threshold=0.5) == 1.0
    assert all(b <= a for a, b in zip(res.losses, res.losses[1:]))
    assert abs(sum(res.weights.as_tuple()) - 1) < 1e-9 and min(res.weights.as_tuple()) >= 0


def test_fit_deterministic():
    rows = separable_toy(seed=9)
    assert fit_weights(rows, seed=4).weights == fit_weights(rows, seed=4).weights


def test_fit_scale_invariant_direction():
    rng = random.Random(1)
    rows = []
    for _ in range(200):
        pc, ps, u = rng.random(), rng.random(), rng.random()
        z = 0.2 * pc + 0.7 * ps + 0.1 * u + rng.gauss(0, 0.1)
        rows.append({"p_causal": pc, "p_symbolic": ps, "uncertainty": u, "label": int(z > 0.5)})
    doubled = [dict(r, p_causal=2 * r["p_causal"], p_symbolic=2 * r["p_symbolic"], uncertainty=2 * r["uncertainty"]) for r in rows]
    a = fit_weights(rows, epochs=2000).weights.as_tuple()
    b = fit_weights(doubled, epochs=2000).weights.as_tuple()
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-3


def test_fit_degenerate():
    rows = [{"p_causal": 0.5, "p_symbolic": 0.5, "u": 0.5, "label": 1}] * 5
    with pytest.raises(DegenerateData):
        fit_weights(rows)


def test_fit_no_signal():
    rows = [{"p_causal": 0.5, "p_symbolic": 0.5, "uncertainty": 0.5, "label": i % 2} for i in range(10)]
    res = fit_weights(rows, epochs=200)
    assert res.accuracy == 0.5
    assert res.losses[0] - res.losses[-1] < 1e-6
