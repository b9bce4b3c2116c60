from __future__ import annotations

import numpy as np

from ..data import Panel

STATISTICS = ("mean", "median")


def column_statistic(X: np.ndarray, statistic: str) -> tuple[np.ndarray, list[int]]:
    """Per-column mean or median over observed values.

    Fully-missing columns get 0 and are returned in the second element.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}")
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[1])
    empty = []
    for j in range(X.shape[1]):
        col = X[:, j]
        col = col[~np.isnan(col)]
        if col.size == 0:
            empty.append(j)
        else:
            out[j] = col.mean() if statistic == "mean" else np.median(col)
    return out, empty


def fill_with(X: np.ndarray, fill: np.ndarray) -> np.ndarray:
    X = np.array(X, dtype=float, copy=True)
    rows, cols = np.nonzero(np.isnan(X))
    X[rows, cols] = fill[cols]
    return X


def impute_simple(panel: Panel, statistic: str = "median", reference: Panel | None = None) -> Panel:
    """Fill each missing cell with its column statistic.

    Statistics come from ``reference`` (the training panel) when given,
    otherwise from ``panel`` itself.
    """
    ref = panel if reference is None else reference
    fill, empty = column_statistic(ref.values, statistic)
    out = panel.with_values(fill_with(panel.values, fill))
    if empty:
        out.meta["fully_missing_columns"] = [panel.schema.names[j] for j in empty]
    return out
