from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit

from .base import Classifier, check_labels
from .tree import Tree, grow_newton_tree, presort

OBJECTIVES = ("logistic", "squared")


class GradientBoostedTrees(Classifier):
    """Newton-boosted regression trees with learned missing-value directions.

    With ``objective="logistic"`` the model is a classifier whose margin
    starts at the training log-odds; with ``"squared"`` it is a regressor
    (used by chained-equation imputation) starting at the training mean.
    ``subsample < 1`` draws rows per round from ``default_rng([seed, round])``.
    """

    kind = "gbdt"
    accepts_missing = True

    def __init__(self, n_trees: int = 200, depth: int = 4, learning_rate: float = 0.1,
                 min_leaf: int = 1, lam: float = 1.0, objective: str = "logistic",
                 subsample: float = 1.0, seed: int = 0):
        if n_trees < 0 or depth < 1 or min_leaf < 1:
            raise ValueError("n_trees >= 0, depth >= 1 and min_leaf >= 1 required")
        if learning_rate <= 0 or lam < 0 or not 0 < subsample <= 1:
            raise ValueError("learning_rate > 0, lam >= 0 and subsample in (0, 1] required")
        if objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        self.n_trees = int(n_trees)
        self.depth = int(depth)
        self.learning_rate = float(learning_rate)
        self.min_leaf = int(min_leaf)
        self.lam = float(lam)
        self.objective = objective
        self.subsample = float(subsample)
        self.seed = int(seed)
        self.base_ = 0.0
        self.trees_: list[Tree] = []
        self.loss_history_: list[float] = []

    def _loss(self, y, f) -> float:
        if self.objective == "logistic":
            return float(-(y * log_expit(f) + (1 - y) * log_expit(-f)).mean())
        return float(0.5 * ((f - y) ** 2).mean())

    def fit(self, X, y):
        X = self.check_input(X)
        if self.objective == "logistic":
            y = check_labels(y)
            rate = np.clip(y.mean(), 1e-12, 1 - 1e-12)
            self.base_ = float(np.log(rate / (1 - rate)))
        else:
            y = np.asarray(y, dtype=float).ravel()
            self.base_ = float(y.mean())
        n = len(y)
        f = np.full(n, self.base_)
        self.trees_ = []
        self.loss_history_ = [self._loss(y, f)]
        full_sort = presort(X, np.arange(n)) if self.subsample == 1.0 else None
        for r in range(self.n_trees):
            if self.objective == "logistic":
                p = expit(f)
                g, h = p - y, p * (1 - p)
            else:
                g, h = f - y, np.ones(n)
            if full_sort is not None:
                tree = grow_newton_tree(X, g, h, self.depth, self.min_leaf, self.lam,
                                        sorted_rows=full_sort)
            else:
                rng = np.random.default_rng([self.seed, r])
                rows = np.sort(rng.choice(n, size=max(1, int(self.subsample * n)), replace=False))
                tree = grow_newton_tree(X, g, h, self.depth, self.min_leaf, self.lam, rows)
            self.trees_.append(tree)
            f = f + self.learning_rate * tree.predict(X)
            self.loss_history_.append(self._loss(y, f))
        return self

    def margin(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        f = np.full(len(X), self.base_)
        for t in self.trees_:
            f += self.learning_rate * t.predict(X)
        return f

    predict = margin

    def used_features(self) -> set[int]:
        out: set[int] = set()
        for t in self.trees_:
            out |= t.used_features()
        return out

    def get_params(self) -> dict:
        return {"n_trees": self.n_trees, "depth": self.depth, "learning_rate": self.learning_rate,
                "min_leaf": self.min_leaf, "lam": self.lam, "objective": self.objective,
                "subsample": self.subsample, "seed": self.seed}

    def get_state(self) -> dict:
        return {"base": self.base_, "trees": [t.to_dict() for t in self.trees_]}

    def set_state(self, state: dict) -> None:
        self.base_ = float(state["base"])
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
