from __future__ import annotations

import math

import numpy as np
from scipy.special import logit

from .base import Classifier, check_labels
from .tree import Tree, grow_gini_tree

# leaf-fraction averages can hit 0 or 1; clip before taking log-odds
_FRACTION_EPS = 1e-6


class RandomForest(Classifier):
    """Bagged Gini trees with ``mtry`` candidate features per split.

    Tree ``t`` draws its bootstrap and feature subsets from
    ``default_rng([seed, t])`` so results do not depend on build order.
    """

    kind = "random_forest"

    def __init__(self, n_trees: int = 200, max_depth: int | None = 12, min_leaf: int = 1,
                 mtry: int | None = None, bootstrap: bool = True, seed: int = 0):
        if n_trees < 1 or min_leaf < 1 or (max_depth is not None and max_depth < 1):
            raise ValueError("n_trees, min_leaf and max_depth must be positive")
        if mtry is not None and mtry < 1:
            raise ValueError("mtry must be positive")
        self.n_trees = int(n_trees)
        self.max_depth = None if max_depth is None else int(max_depth)
        self.min_leaf = int(min_leaf)
        self.mtry = None if mtry is None else int(mtry)
        self.bootstrap = bool(bootstrap)
        self.seed = int(seed)
        self.trees_: list[Tree] = []

    def fit(self, X, y):
        X = self.check_input(X)
        y = check_labels(y)
        n, d = X.shape
        mtry = min(d, self.mtry or max(1, int(math.sqrt(d))))
        self.trees_ = []
        for t in range(self.n_trees):
            rng = np.random.default_rng([self.seed, t])
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            self.trees_.append(
                grow_gini_tree(X, y, np.sort(rows), self.max_depth, self.min_leaf, mtry, rng)
            )
        return self

    def fraction(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict(X) for t in self.trees_], axis=0)

    def margin(self, X) -> np.ndarray:
        return logit(np.clip(self.fraction(X), _FRACTION_EPS, 1 - _FRACTION_EPS))

    def get_params(self) -> dict:
        return {"n_trees": self.n_trees, "max_depth": self.max_depth, "min_leaf": self.min_leaf,
                "mtry": self.mtry, "bootstrap": self.bootstrap, "seed": self.seed}

    def get_state(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees_]}

    def set_state(self, state: dict) -> None:
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
