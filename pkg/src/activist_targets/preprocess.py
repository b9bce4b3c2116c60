"""Industry-year percentiles, standardization and year indicators."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import Panel

MIN_L3_GROUP = 10


def percentile_ranks(x: np.ndarray) -> np.ndarray:
    """``(rank - 0.5) / n`` with average ranks; NaN stays NaN and is not counted."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, np.nan)
    ok = ~np.isnan(x)
    n = ok.sum()
    if n:
        out[ok] = (rankdata(x[ok], method="average") - 0.5) / n
    return out


def peer_groups(panel: Panel, min_l3: int = MIN_L3_GROUP) -> np.ndarray:
    """Group key per row: ``("L3", code, year)`` when that group has at least
    ``min_l3`` rows, otherwise ``("L2", code, year)``."""
    l3_size = Counter(zip(panel.industry_l3, panel.year))
    keys = np.empty(len(panel), dtype=object)
    for i, (l2, l3, y) in enumerate(zip(panel.industry_l2, panel.industry_l3, panel.year)):
        if l3_size[(l3, y)] >= min_l3:
            keys[i] = ("L3", l3, int(y))
        else:
            keys[i] = ("L2", l2, int(y))
    return keys


def percentile_transform(panel: Panel, min_l3: int = MIN_L3_GROUP) -> Panel:
    """Replace valuation/operation values by within-peer-group percentiles.

    Rows assigned to an L2 group are ranked against every row sharing that
    L2 code and year, including rows whose own L3 group was large enough.
    """
    cols = panel.schema.percentile_indices()
    if not cols or len(panel) == 0:
        return panel
    keys = peer_groups(panel, min_l3)
    values = np.array(panel.values, copy=True)

    members: dict[tuple, list[int]] = {}
    for i, (l2, l3, y) in enumerate(zip(panel.industry_l2, panel.industry_l3, panel.year)):
        members.setdefault(("L3", l3, int(y)), []).append(i)
        members.setdefault(("L2", l2, int(y)), []).append(i)
    targets: dict[tuple, list[int]] = {}
    for i, k in enumerate(keys):
        targets.setdefault(k, []).append(i)

    sub = panel.values[:, cols]
    for key, rows in targets.items():
        pool = np.asarray(members[key])
        ranks = np.column_stack([percentile_ranks(sub[pool, j]) for j in range(len(cols))])
        where = {r: p for p, r in enumerate(pool)}
        values[np.ix_(rows, cols)] = ranks[[where[r] for r in rows]]
    return panel.with_values(values, percentile_transformed=True)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = (X - self.mean) / safe
        Z[:, self.std == 0] = np.where(np.isnan(X[:, self.std == 0]), np.nan, 0.0)
        return Z

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def fit_standardizer_array(X: np.ndarray) -> Standardizer:
    X = np.asarray(X, dtype=float)
    observed = ~np.isnan(X)
    counts = observed.sum(axis=0)
    filled = np.where(observed, X, 0.0)
    mean = np.divide(filled.sum(axis=0), counts, out=np.zeros(X.shape[1]), where=counts > 0)
    dev = np.where(observed, X - mean, 0.0)
    var = np.divide((dev ** 2).sum(axis=0), counts, out=np.zeros(X.shape[1]), where=counts > 0)
    std = np.sqrt(var)
    # relative floor: float noise on a constant column must not count as spread
    std[std <= 1e-12 * np.maximum(1.0, np.abs(mean))] = 0.0
    return Standardizer(mean, std)


def fit_standardizer(panel: Panel) -> Standardizer:
    """Population mean/stddev per feature over observed training values."""
    return fit_standardizer_array(panel.values)


def apply_standardizer(std: Standardizer, panel: Panel) -> Panel:
    return panel.with_values(std.transform(panel.values))


def one_hot_years(panel: Panel, years=None) -> tuple[np.ndarray, list[int]]:
    """Year indicator matrix and its column years.

    Passing the training ``years`` gives held-out data the same columns; a
    year absent from that list yields an all-zero row.
    """
    if years is None:
        if len(panel) == 0:
            raise ValueError("cannot one-hot encode an empty panel")
        years = sorted(set(panel.year.tolist()))
    years = [int(y) for y in years]
    col = {y: j for j, y in enumerate(years)}
    M = np.zeros((len(panel), len(years)))
    for i, y in enumerate(panel.year):
        j = col.get(int(y))
        if j is not None:
            M[i, j] = 1.0
    return M, years
