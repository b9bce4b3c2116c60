import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activist_targets.preprocess import (apply_standardizer, fit_standardizer, fit_standardizer_array,
                                         one_hot_years, peer_groups, percentile_ranks,
                                         percentile_transform)
from conftest import make_panel, tiny_schema

V = 3  # column of the valuation feature in tiny_schema


def test_rank_percentiles():
    assert np.allclose(percentile_ranks([10, 20, 30]), [1 / 6, 0.5, 5 / 6])
    assert np.allclose(percentile_ranks([5, 5]), [0.5, 0.5])
    assert percentile_ranks([42.0]).tolist() == [0.5]
    out = percentile_ranks([3.0, np.nan, 1.0])
    assert np.isnan(out[1]) and np.allclose(out[[0, 2]], [0.75, 0.25])


def _groups_panel(values, l2, l3, years=None):
    n = len(values)
    X = np.zeros((n, 4))
    X[:, V] = values
    return make_panel(X, schema=tiny_schema(), l2=l2, l3=l3, year=years or [2016] * n,
                      company=[f"C{i}" for i in range(n)])


def test_only_percentile_features_change():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 4))
    panel = make_panel(X, schema=tiny_schema(), l2=["A"] * 12, l3=["A1"] * 12,
                       company=[f"C{i}" for i in range(12)])
    out = percentile_transform(panel)
    assert np.array_equal(out.values[:, :V], X[:, :V])
    assert np.allclose(out.values[:, V], percentile_ranks(X[:, V]))


def test_small_l3_falls_back_to_l2():
    # 9 rows in L3 "A1" and 10 rows in "A2", all under L2 "A"
    vals = list(range(19))
    l3 = ["A1"] * 9 + ["A2"] * 10
    panel = _groups_panel(vals, ["A"] * 19, l3)
    keys = peer_groups(panel)
    assert all(k[0] == "L2" for k in keys[:9]) and all(k[0] == "L3" for k in keys[9:])
    out = percentile_transform(panel).values[:, V]
    # A1 rows ranked among all 19 L2 rows, A2 rows among their own 10
    assert np.allclose(out[:9], (np.arange(9) + 0.5) / 19)
    assert np.allclose(out[9:], (np.arange(10) + 0.5) / 10)


def test_groups_split_by_year():
    panel = _groups_panel([1.0, 2.0, 3.0, 4.0], ["A"] * 4, ["A1"] * 4, [2016, 2016, 2017, 2017])
    out = percentile_transform(panel).values[:, V]
    assert np.allclose(out, [0.25, 0.75, 0.25, 0.75])


def test_singleton_group_maps_to_half():
    panel = _groups_panel([7.0, 1.0], ["A", "B"], ["A1", "B1"])
    assert percentile_transform(panel).values[:, V].tolist() == [0.5, 0.5]


def test_missing_stays_missing():
    panel = _groups_panel([1.0, np.nan, 3.0], ["A"] * 3, ["A1"] * 3)
    out = percentile_transform(panel).values[:, V]
    assert np.isnan(out[1]) and np.allclose(out[[0, 2]], [0.25, 0.75])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 50).map(float), min_size=1, max_size=40),
       st.lists(st.integers(0, 2), min_size=40, max_size=40))
def test_percentile_monotone_and_invariant(vals, groups):
    n = len(vals)
    l2 = [f"L{g}" for g in groups[:n]]
    panel = _groups_panel(vals, l2, [f"{g}x" for g in l2])
    out = percentile_transform(panel).values[:, V]
    assert ((out > 0) & (out < 1)).all()
    x = np.array(vals)
    for g in set(l2):
        idx = [i for i in range(n) if l2[i] == g]
        for i in idx:
            for j in idx:
                if x[i] < x[j]:
                    assert out[i] < out[j]
                if x[i] == x[j]:
                    assert out[i] == out[j]
    warped = _groups_panel(np.exp(x / 10), l2, [f"{g}x" for g in l2])
    assert np.array_equal(percentile_transform(warped).values[:, V], out)


def test_standardizer_examples():
    std = fit_standardizer_array(np.array([[1.0, 7.0], [3.0, 7.0]]))
    Z = std.transform(np.array([[1.0, 7.0], [3.0, 7.0]]))
    assert np.allclose(Z, [[-1, 0], [1, 0]])
    assert np.isnan(std.transform(np.array([[np.nan, 7.0]]))[0, 0])
    const = fit_standardizer_array(np.full((3, 1), 7.0))
    assert const.transform(np.full((3, 1), 7.0)).tolist() == [[0.0]] * 3


def test_standardizer_uses_training_statistics():
    rng = np.random.default_rng(1)
    train = make_panel(rng.normal(5, 2, size=(200, 3)))
    test = make_panel(rng.normal(-3, 9, size=(50, 3)))
    std = fit_standardizer(train)
    out = apply_standardizer(std, test).values
    assert np.allclose(out, (test.values - train.values.mean(0)) / train.values.std(0))
    Z = std.transform(train.values)
    assert np.abs(Z.mean(0)).max() < 1e-9
    assert np.abs(Z.std(0) - 1).max() < 1e-9
    assert np.allclose(std.inverse(Z), train.values, atol=1e-9)


def test_standardizer_ignores_missing():
    X = np.array([[1.0], [np.nan], [3.0]])
    std = fit_standardizer_array(X)
    assert std.mean.tolist() == [2.0] and std.std.tolist() == [1.0]


def test_one_hot_years():
    panel = make_panel(np.zeros((3, 1)), year=[2016, 2017, 2017])
    M, years = one_hot_years(panel)
    assert years == [2016, 2017]
    assert M.tolist() == [[1, 0], [0, 1], [0, 1]]
    single, _ = one_hot_years(make_panel(np.zeros((2, 1)), year=[2020, 2020]))
    assert single.tolist() == [[1], [1]]
    held_out, _ = one_hot_years(make_panel(np.zeros((1, 1)), year=[2030]), years)
    assert held_out.tolist() == [[0, 0]]
    with pytest.raises(ValueError):
        one_hot_years(make_panel(np.zeros((0, 1))))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2000, 2010), min_size=1, max_size=30))
def test_one_hot_rows_sum_to_one(years):
    M, _ = one_hot_years(make_panel(np.zeros((len(years), 1)), year=years,
                                    company=[f"C{i}" for i in range(len(years))]))
    assert (M.sum(axis=1) == 1).all()
