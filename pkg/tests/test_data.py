import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activist_targets.data import (CampaignEvent, PanelParseError, SchemaError, add_months,
                                   assign_labels, load_campaigns, load_panel, split_indices,
                                   stratified_split, write_panel)
from activist_targets.schema import CATEGORIES, canonical_schema
from conftest import make_panel, tiny_schema

HEADER = "company_id,year,industry_l2,industry_l3,g1,g2,o1,v1"


def _csv(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_canonical_schema_counts():
    s = canonical_schema()
    assert len(s) == 46
    counts = [len(s.category_indices()[c]) for c in CATEGORIES]
    assert counts == [10, 3, 6, 7, 10, 10]
    for f in s.features:
        assert f.percentile_transformed == (f.category in ("valuation", "operation"))
    assert len(set(s.names)) == 46


def test_load_three_rows_one_missing(tmp_path):
    p = _csv(tmp_path, HEADER + "\nA,2016,X,X1,1,2,3,4\nB,2016,X,X1,5,,7,8\nC,2017,X,X1,9,10,11,12\n")
    panel = load_panel(p, tiny_schema())
    assert len(panel) == 3
    assert panel.n_missing == 1
    assert np.isnan(panel.values[1, 1])
    assert panel.label is None


def test_missing_year_column_is_schema_error(tmp_path):
    p = _csv(tmp_path, "company_id,industry_l2,industry_l3,g1,g2,o1,v1\nA,X,X1,1,2,3,4\n")
    with pytest.raises(SchemaError):
        load_panel(p, tiny_schema())


def test_unknown_column_is_schema_error(tmp_path):
    p = _csv(tmp_path, HEADER + ",extra\nA,2016,X,X1,1,2,3,4,5\n")
    with pytest.raises(SchemaError):
        load_panel(p, tiny_schema())


def test_wrong_column_count_reports_row(tmp_path):
    p = _csv(tmp_path, HEADER + "\nA,2016,X,X1,1,2,3,4\nB,2016,X,X1,1,2,3\n")
    with pytest.raises(PanelParseError) as err:
        load_panel(p, tiny_schema())
    assert err.value.row == 3


def test_non_numeric_cell(tmp_path):
    p = _csv(tmp_path, HEADER + "\nA,2016,X,X1,1,abc,3,4\n")
    with pytest.raises(PanelParseError):
        load_panel(p, tiny_schema())


def test_binary_feature_must_be_zero_one(tmp_path):
    schema = tiny_schema([("g1", "governance", "binary")])
    p = _csv(tmp_path, "company_id,year,industry_l2,industry_l3,g1\nA,2016,X,X1,2\n")
    with pytest.raises(PanelParseError):
        load_panel(p, schema)
    p = _csv(tmp_path, "company_id,year,industry_l2,industry_l3,g1\nA,2016,X,X1,1\nB,2016,X,X1,\n")
    assert load_panel(p, schema).n_missing == 1


def test_duplicate_company_year_rejected(tmp_path):
    p = _csv(tmp_path, HEADER + "\nA,2016,X,X1,1,2,3,4\nA,2016,X,X1,1,2,3,4\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_panel(p, tiny_schema())


def test_round_trip(tmp_path, small_synth):
    panel, _ = small_synth
    path = tmp_path / "rt.csv"
    write_panel(panel, path)
    back = load_panel(path, panel.schema)
    assert back.equals(panel)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.one_of(st.none(), st.floats(-1e12, 1e12, allow_nan=False)),
                         min_size=4, max_size=4), min_size=1, max_size=8),
       st.booleans())
def test_round_trip_property(tmp_path_factory, rows, labeled):
    values = np.array([[np.nan if v is None else v for v in r] for r in rows], dtype=float)
    label = np.arange(len(rows)) % 2 if labeled else None
    panel = make_panel(values, label, schema=tiny_schema())
    path = tmp_path_factory.mktemp("rt") / "p.csv"
    write_panel(panel, path)
    assert load_panel(path, panel.schema).equals(panel)


# -- labeling ------------------------------------------------------------------

def _one_row(year=2016, company="A"):
    return make_panel([[1.0, 2.0, 3.0, 4.0]], schema=tiny_schema(), year=[year], company=[company])


def test_label_inside_window():
    out = assign_labels(_one_row(), [CampaignEvent("A", dt.date(2017, 6, 1))])
    assert out.label.tolist() == [1]


def test_label_outside_window():
    out = assign_labels(_one_row(), [CampaignEvent("A", dt.date(2018, 2, 1), dt.date(2018, 5, 1))])
    assert out.label.tolist() == [0]


def test_active_campaign_excludes_row():
    out = assign_labels(_one_row(), [CampaignEvent("A", dt.date(2016, 5, 1), dt.date(2017, 3, 1))])
    assert len(out) == 0
    assert out.meta["excluded_active_rows"] == 1


def test_window_edges():
    # the window is (snapshot, snapshot + 12 months]
    on_snapshot = assign_labels(_one_row(), [CampaignEvent("A", dt.date(2016, 12, 31), dt.date(2016, 12, 31))])
    assert len(on_snapshot) == 0
    last_day = assign_labels(_one_row(), [CampaignEvent("A", dt.date(2017, 12, 31), dt.date(2018, 1, 5))])
    assert last_day.label.tolist() == [1]


def test_open_ended_campaign_runs_to_last_panel_year():
    panel = make_panel(np.ones((3, 4)), schema=tiny_schema(), year=[2016, 2017, 2018],
                       company=["A", "A", "A"])
    out = assign_labels(panel, [CampaignEvent("A", dt.date(2017, 3, 1))])
    assert out.year.tolist() == [2016]
    assert out.label.tolist() == [1]


def test_unknown_company_counted():
    out = assign_labels(_one_row(), [CampaignEvent("Z", dt.date(2017, 1, 1))])
    assert out.meta["unknown_campaign_companies"] == 1
    assert out.label.tolist() == [0]


def test_campaign_end_before_start_rejected():
    with pytest.raises(ValueError):
        CampaignEvent("A", dt.date(2017, 1, 1), dt.date(2016, 1, 1))


def test_load_campaigns(tmp_path):
    p = _csv(tmp_path, "company_id,start_date,end_date\nA,2017-06-01,\nB,2015-01-01,2015-06-30\n", "c.csv")
    events = load_campaigns(p)
    assert events[0].end is None and events[1].end == dt.date(2015, 6, 30)


def test_add_months_clamps():
    assert add_months(dt.date(2016, 8, 31), 6) == dt.date(2017, 2, 28)
    assert add_months(dt.date(2016, 12, 31), 12) == dt.date(2017, 12, 31)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2500), st.one_of(st.none(), st.integers(0, 900))),
                max_size=8))
def test_no_surviving_row_inside_a_campaign(events):
    companies = ["A", "B", "C", "D"]
    rows = [(c, y) for c in companies for y in range(2014, 2021)]
    panel = make_panel(np.zeros((len(rows), 4)), schema=tiny_schema(),
                       company=[r[0] for r in rows], year=[r[1] for r in rows])
    base = dt.date(2013, 1, 1)
    camps = [CampaignEvent(companies[c], base + dt.timedelta(days=s),
                           None if e is None else base + dt.timedelta(days=s + e))
             for c, s, e in events]
    out = assign_labels(panel, camps)
    last = dt.date(2020, 12, 31)
    for cid, year, lab in zip(out.company_id, out.year, out.label):
        snap = dt.date(int(year), 12, 31)
        starts = []
        for c in camps:
            if c.company_id != cid:
                continue
            end = c.end or max(last, c.start)
            assert not (c.start <= snap <= end)
            starts.append(c.start)
        assert lab == int(any(snap < s <= add_months(snap, 12) for s in starts))


# -- splitting -----------------------------------------------------------------

def test_stratified_counts():
    label = np.zeros(1000, dtype=int)
    label[:34] = 1
    tr, te = split_indices(label, 0.8, 0)
    assert label[tr].sum() in (27, 28)
    assert abs(len(tr) - 800) <= 1


def test_split_deterministic(small_synth):
    panel, _ = small_synth
    a = stratified_split(panel, 0.8, 5)
    b = stratified_split(panel, 0.8, 5)
    assert a.train.equals(b.train) and a.test.equals(b.test)


def test_single_class_rejected():
    panel = make_panel(np.zeros((10, 2)), label=np.zeros(10))
    with pytest.raises(ValueError):
        stratified_split(panel)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=4, max_size=200), st.integers(0, 2**31),
       st.floats(0.1, 0.9))
def test_split_is_partition(labels, seed, frac):
    y = np.array(labels)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    tr, te = split_indices(y, frac, seed)
    assert set(tr).isdisjoint(te)
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(len(y)))
    for c in (0, 1):
        n_c = (y == c).sum()
        assert abs((y[tr] == c).sum() - frac * n_c) <= 1
