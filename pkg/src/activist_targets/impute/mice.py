"""Chained-equation imputation with boosted-tree regressors."""

from __future__ import annotations

import numpy as np

from ..models.gbdt import GradientBoostedTrees


def mice_block(B: np.ndarray, targets, aux: np.ndarray | None = None, iterations: int = 4,
               n_trees: int = 50, depth: int = 3, learning_rate: float = 0.1,
               min_leaf: int = 5, seed: int = 0) -> np.ndarray:
    """Iteratively re-predict the originally missing cells of ``targets``.

    Missing cells start at the column median. Each iteration visits the
    target columns with missingness in ascending missing-count order and
    refits a regressor on the rows where that column is observed, using
    the other block columns (current values) and ``aux`` as predictors.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    B = np.asarray(B, dtype=float)
    miss = np.isnan(B)
    out = B.copy()
    for j in range(B.shape[1]):
        col = B[~miss[:, j], j]
        out[miss[:, j], j] = np.median(col) if col.size else 0.0
    counts = miss.sum(axis=0)
    order = sorted((j for j in targets if 0 < counts[j] < len(B)), key=lambda j: (counts[j], j))
    for it in range(iterations):
        for j in order:
            others = [c for c in range(B.shape[1]) if c != j]
            P = out[:, others]
            if aux is not None:
                P = np.hstack([P, aux])
            if P.shape[1] == 0:
                continue
            obs = ~miss[:, j]
            reg = GradientBoostedTrees(
                n_trees=n_trees, depth=depth, learning_rate=learning_rate,
                min_leaf=min_leaf, objective="squared", seed=seed + 1000 * it + j,
            )
            reg.fit(P[obs], B[obs, j])
            out[miss[:, j], j] = reg.predict(P[miss[:, j]])
    return out


def impute_mice_matrix(X: np.ndarray, plan, aux: np.ndarray | None = None, iterations: int = 4,
                       seed: int = 0, **tree_params) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = X.copy()
    for b, (_, cols) in enumerate(plan.blocks):
        cols = list(cols)
        done = mice_block(X[:, cols], list(range(len(cols))), aux, iterations,
                          seed=seed + 7919 * b, **tree_params)
        out[:, cols] = done
    return out
