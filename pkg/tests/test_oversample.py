import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activist_targets.oversample import (OversamplingError, SamplerKind, adasyn_allocation,
                                         classify_borderline, oversample, oversample_adasyn,
                                         oversample_borderline, oversample_random,
                                         oversample_smote)
from conftest import make_panel


def _imbalanced(n_maj=97, n_min=3, d=2, seed=0, shift=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_maj + n_min, d))
    X[n_maj:] += shift
    y = np.r_[np.zeros(n_maj), np.ones(n_min)].astype(int)
    return make_panel(X, y)


def _synthetic(out, n):
    return out.values[n:], out.label[n:]


def test_random_counts():
    p = _imbalanced()
    out = oversample_random(p, 1.0, seed=1)
    assert len(out) == 194 and out.label.sum() == 97
    syn, lab = _synthetic(out, 100)
    assert len(syn) == 94 and (lab == 1).all()
    originals = {tuple(r) for r in p.values[97:]}
    assert all(tuple(r) in originals for r in syn)


def test_random_at_current_ratio_is_identity():
    p = _imbalanced(n_maj=10, n_min=5)
    out = oversample_random(p, 0.5, seed=0)
    assert len(out) == len(p) and out.values.tolist() == p.values.tolist()


def test_random_needs_both_classes():
    with pytest.raises(OversamplingError):
        oversample_random(make_panel(np.zeros((4, 2)), np.zeros(4)))
    with pytest.raises(OversamplingError):
        oversample_random(make_panel(np.zeros((4, 2))))


def test_smote_on_diagonal_segment():
    X = np.vstack([np.random.default_rng(0).normal(5, 1, size=(20, 2)), [[0, 0], [1, 1]]])
    y = np.r_[np.zeros(20), np.ones(2)].astype(int)
    out = oversample_smote(make_panel(X, y), k=1, seed=3)
    syn, _ = _synthetic(out, 22)
    assert len(syn) == 18
    assert np.array_equal(syn[:, 0], syn[:, 1])
    assert ((syn >= 0) & (syn <= 1)).all()


def test_smote_duplicate_minority_points():
    X = np.vstack([np.arange(10.0).reshape(5, 2), [[3, 3], [3, 3], [3, 3]]])
    y = np.r_[np.zeros(5), np.ones(3)].astype(int)
    syn, _ = _synthetic(oversample_smote(make_panel(X, y), k=2), 8)
    assert (syn == 3).all()


def test_smote_needs_two_minority_rows():
    with pytest.raises(OversamplingError):
        oversample_smote(_imbalanced(n_maj=5, n_min=1))


def test_smote_requires_imputed_features():
    p = _imbalanced(n_maj=6, n_min=3)
    X = p.values.copy()
    X[0, 0] = np.nan
    with pytest.raises(OversamplingError):
        oversample_smote(p.with_values(X))


def test_smote_k_capped():
    out = oversample_smote(_imbalanced(n_maj=20, n_min=3), k=10, seed=0)
    assert out.label.sum() == 20


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.sampled_from(["smote", "borderline_smote", "adasyn"]))
def test_synthetics_stay_between_parent_and_partner(seed, k, name):
    p = _imbalanced(n_maj=40, n_min=8, d=3, seed=seed % 1000, shift=1.0)
    out = oversample(p, SamplerKind(name, k=k, m=2 * k), seed=seed)
    syn = out.meta["synthetic"]
    a, b = p.values[syn["parent"]], p.values[syn["partner"]]
    s = out.values[len(p):]
    assert ((np.minimum(a, b) <= s) & (s <= np.maximum(a, b))).all()
    assert (out.label[len(p):] == 1).all()
    # originals first and untouched
    assert out.take(np.arange(len(p))).equals(p)


def test_borderline_rule():
    assert classify_borderline([3, 5, 1], 5).tolist() == ["danger", "noise", "safe"]
    assert classify_borderline([2, 3], 4).tolist() == ["danger", "danger"]


def test_borderline_seeds_only_from_danger():
    p = _imbalanced(n_maj=60, n_min=15, seed=4, shift=1.0)
    out = oversample_borderline(p, k=3, m=6, seed=2)
    danger = set(out.meta["danger"].tolist())
    assert danger and set(out.meta["synthetic"]["parent"].tolist()) <= danger
    assert out.meta["sampler_warnings"] == []


def test_borderline_without_danger_falls_back():
    # minority cluster far from the majority: every minority point is SAFE
    p = _imbalanced(n_maj=30, n_min=10, seed=1, shift=50.0)
    out = oversample_borderline(p, k=3, m=4, seed=0)
    assert out.meta["sampler_warnings"]
    assert out.meta["borderline_counts"]["safe"] == 10
    assert out.label.sum() == 30


def test_adasyn_allocation():
    g = adasyn_allocation([3, 0, 2], 5, 10)
    assert g.tolist() == [6, 0, 4]
    assert adasyn_allocation([0, 0], 5, 10) is None


def test_adasyn_total():
    p = _imbalanced(n_maj=90, n_min=10, seed=2, shift=0.5)
    out = oversample_adasyn(p, k=5, beta=1.0, seed=0)
    assert out.meta["adasyn_total"] == 80
    assert abs(len(out) - 100 - 80) <= 10


def test_adasyn_without_majority_neighbours_falls_back():
    p = _imbalanced(n_maj=30, n_min=10, seed=1, shift=50.0)
    out = oversample_adasyn(p, k=3, seed=0)
    assert out.meta["sampler_warnings"] and len(out) == 40 + 20


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=30), st.integers(0, 500))
def test_adasyn_rounding_drift(counts, total):
    g = adasyn_allocation(counts, 5, total)
    if g is None:
        assert sum(counts) == 0
    else:
        assert total - len(counts) <= g.sum() <= total + len(counts)


@pytest.mark.parametrize("name", ["random", "smote", "borderline_smote", "adasyn"])
def test_samplers_deterministic(name):
    p = _imbalanced(n_maj=50, n_min=10, seed=3, shift=1.0)
    a = oversample(p, SamplerKind(name), seed=7)
    b = oversample(p, SamplerKind(name), seed=7)
    assert a.values.tobytes() == b.values.tobytes()
    assert list(a.company_id) == list(b.company_id)


def test_none_is_identity_and_kind_validation():
    p = _imbalanced()
    assert oversample(p, SamplerKind("none")) is p
    for bad in [dict(name="rose"), dict(name="smote", k=0), dict(name="adasyn", beta=0),
                dict(name="random", target_ratio=1.5)]:
        with pytest.raises(ValueError):
            SamplerKind(**bad)
