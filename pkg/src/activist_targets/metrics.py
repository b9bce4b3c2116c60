"""AUC-ROC and ROC curves with half credit for tied scores."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    n_pos = int((y == 1).sum())
    if n_pos == 0 or n_pos == len(y):
        raise ValueError("AUC needs both classes present")
    return s, y.astype(bool)


def auc_roc(scores, labels) -> float:
    """Mann-Whitney form: P(score_pos > score_neg) + 0.5 * P(tie)."""
    s, pos = _check(scores, labels)
    n_pos = pos.sum()
    n_neg = len(s) - n_pos
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    threshold: np.ndarray  # first entry is +inf (nothing predicted positive)

    def area(self) -> float:
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fpr", "tpr", "threshold"])
            for f, t, th in zip(self.fpr, self.tpr, self.threshold):
                w.writerow([repr(float(f)), repr(float(t)), repr(float(th))])


def roc_curve(scores, labels) -> RocCurve:
    """One vertex per distinct score, thresholds descending, from (0,0) to (1,1)."""
    s, pos = _check(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, pos = s[order], pos[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(pos)[last]
    fp = (last + 1) - tp
    return RocCurve(
        np.r_[0.0, fp / fp[-1]],
        np.r_[0.0, tp / tp[-1]],
        np.r_[np.inf, s[last]],
    )
