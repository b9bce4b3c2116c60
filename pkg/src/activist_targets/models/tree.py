"""Exact-greedy regression/classification trees.

Split search runs in numba kernels; the tree itself is grown depth-first in
Python and stored as flat node arrays. Rows go left when ``x <= threshold``;
a missing value follows the node's ``missing_left`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

_EPS_GAIN = 1e-12


@numba.njit(cache=True)
def _threshold(a, b):
    t = a + (b - a) / 2.0
    if t >= b:
        t = a
    return t


@numba.njit(cache=True)
def newton_split(X, S, g, h, features, lam, min_leaf):
    """Best second-order split for one node.

    ``S[f]`` lists the node's rows sorted by feature ``f`` with missing
    values last. Returns ``(gain, feature, threshold, missing_left)``;
    feature is -1 when no split has positive gain. Missing values are
    tried on both sides.
    """
    n = S.shape[1]
    G = 0.0
    H = 0.0
    for i in range(n):
        r = S[0, i]
        G += g[r]
        H += h[r]
    parent = G * G / (H + lam)
    best_gain = _EPS_GAIN
    best_f = -1
    best_t = 0.0
    best_ml = False
    for f in features:
        row = S[f]
        m = 0
        Go = 0.0
        Ho = 0.0
        while m < n and not np.isnan(X[row[m], f]):
            Go += g[row[m]]
            Ho += h[row[m]]
            m += 1
        if m < 2:
            continue
        Gm = G - Go
        Hm = H - Ho
        nm = n - m
        GL = 0.0
        HL = 0.0
        for p in range(m - 1):
            r = row[p]
            GL += g[r]
            HL += h[r]
            a = X[r, f]
            b = X[row[p + 1], f]
            if a == b:
                continue
            nL = p + 1
            nR = m - nL
            GR = Go - GL
            HR = Ho - HL
            # missing right
            if nL >= min_leaf and nR + nm >= min_leaf:
                gain = 0.5 * (GL * GL / (HL + lam) + (GR + Gm) * (GR + Gm) / (HR + Hm + lam) - parent)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = _threshold(a, b)
                    best_ml = HL >= HR if nm == 0 else False
            # missing left
            if nm > 0 and nL + nm >= min_leaf and nR >= min_leaf:
                gain = 0.5 * ((GL + Gm) * (GL + Gm) / (HL + Hm + lam) + GR * GR / (HR + lam) - parent)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = _threshold(a, b)
                    best_ml = True
    return best_gain, best_f, best_t, best_ml


def presort(X: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """``(d, len(rows))`` row indices sorted per feature, NaN last, stable."""
    sub = X[rows]
    return rows[np.argsort(sub, axis=0, kind="stable").T]


@numba.njit(cache=True)
def gini_split(X, idx, y, features, min_leaf):
    """Best Gini split; ``idx`` may repeat rows (bootstrap multiplicity)."""
    n = idx.shape[0]
    pos = 0.0
    for r in idx:
        pos += y[r]
    parent = 2.0 * pos * (n - pos) / n
    best_gain = _EPS_GAIN
    best_f = -1
    best_t = 0.0
    for f in features:
        xs = np.empty(n)
        ys = np.empty(n)
        for i in range(n):
            xs[i] = X[idx[i], f]
            ys[i] = y[idx[i]]
        order = np.argsort(xs, kind="mergesort")
        posL = 0.0
        for p in range(n - 1):
            o = order[p]
            posL += ys[o]
            a = xs[o]
            b = xs[order[p + 1]]
            if a == b:
                continue
            nL = p + 1.0
            nR = n - nL
            if nL < min_leaf or nR < min_leaf:
                continue
            posR = pos - posL
            child = 2.0 * posL * (nL - posL) / nL + 2.0 * posR * (nR - posR) / nR
            gain = parent - child
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_t = _threshold(a, b)
    return best_gain, best_f, best_t


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    missing_left: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            x = X[active, self.feature[nd]]
            go_left = np.where(np.isnan(x), self.missing_left[nd], x <= self.threshold[nd])
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return self.value[node]

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def used_features(self) -> set[int]:
        return set(self.feature[self.feature >= 0].tolist())

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "missing_left": self.missing_left.astype(int).tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["missing_left"], dtype=bool),
            np.asarray(d["value"], dtype=float),
        )


class _Builder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.missing_left, self.value = [], []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.missing_left.append(False)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=float),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.missing_left, dtype=bool),
            np.asarray(self.value, dtype=float),
        )


def _partition(X, idx, f, t, ml):
    x = X[idx, f]
    go_left = np.where(np.isnan(x), ml, x <= t)
    return idx[go_left], idx[~go_left]


def grow_newton_tree(X, g, h, max_depth: int, min_leaf: int = 1, lam: float = 1.0,
                     rows: np.ndarray | None = None, sorted_rows: np.ndarray | None = None) -> Tree:
    """Second-order boosting tree: leaf weight ``-G / (H + lam)``.

    ``sorted_rows`` (from :func:`presort`) can be passed in to reuse one
    presort across boosting rounds; it must cover exactly ``rows``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    h = np.ascontiguousarray(h, dtype=float)
    n, d = X.shape
    features = np.arange(d, dtype=np.int64)
    if sorted_rows is None:
        rows = np.arange(n, dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
        sorted_rows = presort(X, rows)
    go_left = np.zeros(n, dtype=bool)
    b = _Builder()
    stack = [(b.add(), sorted_rows, 0)]
    while stack:
        node, S, depth = stack.pop()
        idx = S[0]
        b.value[node] = -g[idx].sum() / (h[idx].sum() + lam)
        if depth >= max_depth or S.shape[1] < 2 * min_leaf:
            continue
        gain, f, t, ml = newton_split(X, S, g, h, features, lam, min_leaf)
        if f < 0:
            continue
        x = X[idx, f]
        go_left[idx] = np.where(np.isnan(x), ml, x <= t)
        flag = go_left[S]
        n_left = int(flag[0].sum())
        SL = S[flag].reshape(d, n_left)
        SR = S[~flag].reshape(d, S.shape[1] - n_left)
        b.feature[node], b.threshold[node], b.missing_left[node] = f, t, bool(ml)
        b.left[node], b.right[node] = b.add(), b.add()
        stack.append((b.right[node], SR, depth + 1))
        stack.append((b.left[node], SL, depth + 1))
    return b.build()


def grow_gini_tree(X, y, rows, max_depth: int | None, min_leaf: int, mtry: int,
                   rng: np.random.Generator) -> Tree:
    """CART classification tree; leaf value = fraction of positives."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    d = X.shape[1]
    max_depth = np.inf if max_depth is None else max_depth
    b = _Builder()
    stack = [(b.add(), np.asarray(rows, dtype=np.int64), 0)]
    while stack:
        node, idx, depth = stack.pop()
        pos = y[idx].sum()
        b.value[node] = pos / len(idx)
        if depth >= max_depth or len(idx) < 2 * min_leaf or pos == 0 or pos == len(idx):
            continue
        feats = np.sort(rng.choice(d, size=mtry, replace=False)) if mtry < d else np.arange(d)
        gain, f, t = gini_split(X, idx, y, feats.astype(np.int64), min_leaf)
        if f < 0:
            continue
        li, ri = _partition(X, idx, f, t, False)
        b.feature[node], b.threshold[node] = f, t
        b.left[node], b.right[node] = b.add(), b.add()
        stack.append((b.right[node], ri, depth + 1))
        stack.append((b.left[node], li, depth + 1))
    return b.build()
