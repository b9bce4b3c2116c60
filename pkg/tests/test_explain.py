import itertools
import math

import numpy as np
import pytest

from activist_targets.explain import (ExplainError, ShapSummary, coalition_values, explain,
                                      export_explanations, rank_features, sample_background,
                                      shap_exact, shap_kernel, shap_linear)
from activist_targets.impute import impute_simple
from activist_targets.models import train_model, train_on_panel


def additive(X):
    return X[:, 0] + 2 * X[:, 1]


def product(X):
    return X[:, 0] * X[:, 1]


def _oracle(f, x, bg):
    """Shapley values straight from the subset formula, with itertools."""
    d = len(x)

    def v(S):
        rows = bg.copy()
        rows[:, list(S)] = x[list(S)]
        return f(rows).mean()

    phi = np.zeros(d)
    for j in range(d):
        rest = [i for i in range(d) if i != j]
        for r in range(d):
            for S in itertools.combinations(rest, r):
                w = math.factorial(r) * math.factorial(d - r - 1) / math.factorial(d)
                phi[j] += w * (v(S + (j,)) - v(S))
    return phi


def test_exact_examples():
    phi, base = shap_exact(additive, np.array([1.0, 1.0]), np.zeros((1, 2)))
    assert np.allclose(phi, [1, 2]) and base == 0
    phi, _ = shap_exact(product, np.array([1.0, 1.0]), np.zeros((1, 2)))
    assert np.allclose(phi, [0.5, 0.5])
    bg = np.array([[0.3, -2.0]])
    phi, _ = shap_exact(product, bg[0], bg)
    assert (phi == 0).all()


def test_exact_feature_bound():
    with pytest.raises(ExplainError, match="kernel"):
        shap_exact(additive, np.zeros(16), np.zeros((1, 16)))


def _nonlinear(X):
    return np.tanh(X[:, 0] * X[:, 1]) + X[:, 2] ** 2 - 0.5 * X[:, 3] + X[:, 0] * X[:, 4]


@pytest.mark.parametrize("seed", range(3))
def test_exact_matches_subset_formula_and_kernel(seed):
    rng = np.random.default_rng(seed)
    x, bg = rng.normal(size=5), rng.normal(size=(7, 5))
    phi, base = shap_exact(_nonlinear, x, bg)
    assert np.allclose(phi, _oracle(_nonlinear, x, bg), atol=1e-12)
    assert abs(base + phi.sum() - _nonlinear(x[None])[0]) <= 1e-10
    # full coalition enumeration turns kernel SHAP into the exact answer
    k = shap_kernel(_nonlinear, x, bg, n_samples=2 ** 5)
    assert np.allclose(k.phi, phi, atol=1e-10) and not k.ridge


def test_kernel_sampled_local_accuracy_and_determinism():
    rng = np.random.default_rng(4)
    d = 12
    w = rng.normal(size=d)
    f = lambda X: np.sin(X @ w)  # noqa: E731
    x, bg = rng.normal(size=d), rng.normal(size=(5, d))
    a = shap_kernel(f, x, bg, n_samples=400, seed=1)
    b = shap_kernel(f, x, bg, n_samples=400, seed=1)
    assert a.phi.tobytes() == b.phi.tobytes()
    fx = f(x[None])[0]
    assert abs(a.base + a.phi.sum() - fx) <= 1e-6 * (1 + abs(fx))
    with pytest.raises(ExplainError):
        shap_kernel(f, x, bg, n_samples=2 * d + 1)


def _logistic(seed=0, d=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(2, 3, size=(200, d))
    y = (X @ rng.normal(size=d) + rng.normal(size=200) > 0).astype(int)
    return train_model("logistic", X, y, [f"f{j}" for j in range(d)]), X


def test_linear_identities():
    model, X = _logistic()
    bg = X[:50]
    s = shap_linear(model, X, bg)
    assert np.allclose(s.base_value + s.attributions.sum(axis=1), model.margin(X), atol=1e-12)
    at_mean = shap_linear(model, bg.mean(axis=0, keepdims=True), bg)
    assert np.allclose(at_mean.attributions, 0, atol=1e-12)
    # efficiency across instances
    assert abs(s.attributions.sum(axis=1).mean() - (model.margin(X).mean() - s.base_value)) <= 1e-8


def test_linear_equals_exact_and_kernel():
    model, X = _logistic(1)
    bg = X.mean(axis=0, keepdims=True)
    lin = shap_linear(model, X[:4], bg)
    for i in range(4):
        phi, base = shap_exact(model, X[i], bg)
        assert np.allclose(phi, lin.attributions[i], atol=1e-10)
        assert abs(base - lin.base_value) <= 1e-10
        k = shap_kernel(model, X[i], X[:20], n_samples=64)
        ref = shap_linear(model, X[i:i + 1], X[:20]).attributions[0]
        assert np.allclose(k.phi, ref, atol=1e-8)


def test_linear_rejects_other_models():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(30, 2)), np.r_[np.zeros(15), np.ones(15)]
    gbdt = train_model("gbdt", X, y, ["a", "b"], {"n_trees": 3})
    with pytest.raises(ExplainError):
        shap_linear(gbdt, X, X)


def test_dummy_feature_gets_zero():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 4))
    y = (X[:, 0] > 0).astype(int)
    gbdt = train_model("gbdt", X, y, list("abcd"), {"n_trees": 5, "depth": 2})
    unused = sorted(set(range(4)) - gbdt.classifier.used_features())
    assert unused
    phi, _ = shap_exact(gbdt, X[0], X[:10])
    assert (phi[unused] == 0).all()
    k = shap_kernel(gbdt, X[0], X[:10], n_samples=200, seed=0)
    assert np.abs(k.phi[unused]).max() <= 1e-6


def test_symmetric_features_equal():
    f = lambda X: X[:, 0] * X[:, 1] + X[:, 0] + X[:, 1]  # noqa: E731
    bg = np.random.default_rng(2).normal(size=(6, 1)).repeat(2, axis=1)
    phi, _ = shap_exact(f, np.array([1.5, 1.5]), bg)
    assert abs(phi[0] - phi[1]) <= 1e-10


def test_rank_features_rules():
    s = ShapSummary(np.array([[0.3, -0.1, 0.7], [-0.3, 0.1, -0.7]]), 0.0, ["a", "b", "c"])
    assert [j for j, _ in rank_features(s)] == [2, 0, 1]
    z = ShapSummary(np.zeros((2, 4)), 0.0, list("abcd"))
    assert z.feature_order == [0, 1, 2, 3]
    with pytest.raises(ExplainError):
        rank_features(ShapSummary(np.zeros((0, 0)), 0.0, []))


def test_planted_features_rank_high(small_synth):
    panel, truth = small_synth
    panel = impute_simple(panel, "median")
    model = train_on_panel("logistic", panel)
    s = explain(model, panel.values, sample_background(panel.values, 100, seed=0))
    top5 = set(s.feature_order[:5])
    assert set(truth.effects) <= top5


def test_explain_dispatch_and_margins():
    model, X = _logistic(2)
    assert explain(model, X[:3], X[:10]).method == "linear"
    ex = explain(model, X[:3], X[:10], method="exact")
    assert ex.method == "exact"
    assert np.allclose(ex.base_value + ex.attributions.sum(axis=1), ex.margins, atol=1e-10)
    with pytest.raises(ExplainError):
        explain(model, X[:1], X[:10], method="tree")


def test_coalition_values_needs_background():
    with pytest.raises(ExplainError):
        coalition_values(additive, np.zeros(2), np.zeros((0, 2)), np.ones((1, 2), bool))


def test_export_files(tmp_path):
    rng = np.random.default_rng(3)
    names = [f"f{j}" for j in range(46)]
    s = ShapSummary(rng.normal(size=(8, 46)) * np.arange(1, 47), 0.1, names)
    vals = rng.normal(size=(8, 46))
    coef = rng.normal(size=46)
    p1 = export_explanations(s, vals, tmp_path / "a", coefficients=coef)
    p2 = export_explanations(s, vals, tmp_path / "b", coefficients=coef)
    for key in ("bar", "beeswarm", "coefficients"):
        assert p1[key].read_bytes() == p2[key].read_bytes()
    bar = [line.split(",") for line in p1["bar"].read_text().splitlines()[1:]]
    means = [float(m) for _, m in bar]
    assert means == sorted(means, reverse=True) and len(bar) == 46
    bees = p1["beeswarm"].read_text().splitlines()
    assert bees[0] == "feature,instance_id,shap_value,feature_value"
    assert len({row.split(",")[0] for row in bees[1:]}) == 15
    assert p1["coefficients"].read_text().startswith("feature,scaled_coefficient\n")


def test_sample_background():
    X = np.arange(300.0).reshape(150, 2)
    bg = sample_background(X, 100, seed=1)
    assert bg.shape == (100, 2)
    assert np.array_equal(bg, sample_background(X, 100, seed=1))
    assert sample_background(X[:5], 100).shape == (5, 2)
