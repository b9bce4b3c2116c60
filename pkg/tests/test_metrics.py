import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activist_targets.metrics import auc_roc, roc_curve


def brute_auc(s, y):
    pos = [a for a, l in zip(s, y) if l == 1]
    neg = [a for a, l in zip(s, y) if l == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_examples():
    assert auc_roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc_roc([0.4] * 6, [1, 0, 1, 0, 0, 0]) == 0.5
    assert auc_roc([0.7, 0.3, 0.7, 0.2], [1, 0, 0, 0]) == pytest.approx(2.5 / 3, abs=1e-12)


def test_errors():
    with pytest.raises(ValueError):
        auc_roc([0.1, 0.2], [1, 1])
    with pytest.raises(ValueError):
        auc_roc([0.1, 0.2], [1, 0, 0])
    with pytest.raises(ValueError):
        roc_curve([0.1, 0.2], [0, 0])


def test_matches_pairwise_oracle_on_many_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        # coarse scores so that ties are common
        s = rng.integers(0, 6, n) / 5.0
        assert abs(auc_roc(s, y) - brute_auc(s, y)) <= 1e-12


def test_perfect_curve_passes_through_corner():
    c = roc_curve([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert (0.0, 1.0) in set(zip(c.fpr.tolist(), c.tpr.tolist()))


def test_random_labels_near_diagonal():
    rng = np.random.default_rng(1)
    s, y = rng.random(20000), rng.integers(0, 2, 20000)
    assert abs(auc_roc(s, y) - 0.5) <= 0.03
    c = roc_curve(s, y)
    assert np.abs(c.tpr - c.fpr).max() < 0.05


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(0, 1)), min_size=2, max_size=60))
def test_curve_shape_and_area(pairs):
    s = np.array([p[0] for p in pairs], dtype=float) / 4
    y = np.array([p[1] for p in pairs])
    if y.min() == y.max():
        y[0] = 1 - y[0]
    c = roc_curve(s, y)
    assert (c.fpr[0], c.tpr[0]) == (0.0, 0.0) and (c.fpr[-1], c.tpr[-1]) == (1.0, 1.0)
    assert (np.diff(c.fpr) >= 0).all() and (np.diff(c.tpr) >= 0).all()
    assert (np.diff(c.threshold) < 0).all()
    assert len(c.threshold) == len(np.unique(s)) + 1
    assert abs(c.area() - auc_roc(s, y)) <= 1e-12
    # strictly increasing transform
    assert auc_roc(s ** 3 + s, y) == auc_roc(s, y)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=50), st.integers(0, 2**31))
def test_reversal_complements(labels, seed):
    y = np.array(labels)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    s = np.random.default_rng(seed).permutation(len(y)).astype(float)
    assert abs(auc_roc(s, y) + auc_roc(-s, y) - 1.0) <= 1e-12


def test_curve_csv(tmp_path):
    c = roc_curve([0.9, 0.1, 0.5], [1, 0, 1])
    c.to_csv(tmp_path / "roc.csv")
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "fpr,tpr,threshold" and len(lines) == 5
