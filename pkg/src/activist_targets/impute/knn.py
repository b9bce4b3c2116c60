"""k-nearest-neighbour imputation with partial (missing-aware) distances."""

from __future__ import annotations

import numba
import numpy as np

from ..preprocess import fit_standardizer_array

def partial_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Euclidean distance over mutually observed columns, rescaled by
    ``sqrt(width / n_observed)``; inf when no column is shared.

    Dense broadcast, meant for small inputs.
    """
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    diff = A[:, None, :] - B[None, :, :]
    shared = ~np.isnan(diff)
    sq = np.where(shared, diff, 0.0) ** 2
    cnt = shared.sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = np.where(cnt > 0, sq.sum(axis=2) * A.shape[1] / cnt, np.inf)
    return np.sqrt(d2)


@numba.njit(cache=True)
def _knn_fill(ZT, MT, B, miss, receivers, targets, k, medians, out):
    """Mean of the k nearest donors for every missing target cell.

    Squared partial distances are summed directly (no expansion), so equal
    distances compare equal. Donors are scanned in index order and only a
    strictly smaller distance displaces a kept one, so ties at the cut-off
    go to the lowest index. Returns the number of median fallbacks.
    """
    w, n = ZT.shape
    dist = np.empty(n)
    cnt = np.empty(n)
    bd = np.empty(k)
    bi = np.empty(k, dtype=np.int64)
    fallbacks = 0
    for r in receivers:
        dist[:] = 0.0
        cnt[:] = 0.0
        for q in range(w):
            if miss[r, q]:
                continue
            zr = ZT[q, r]
            zq = ZT[q]
            mq = MT[q]
            for i in range(n):
                t = (zr - zq[i]) * mq[i]
                dist[i] += t * t
                cnt[i] += mq[i]
        for i in range(n):
            dist[i] = dist[i] / cnt[i] if cnt[i] > 0 else np.inf
        for j in targets:
            if not miss[r, j]:
                continue
            m = 0
            for i in range(n):
                v = dist[i]
                if miss[i, j] or v == np.inf:
                    continue
                if m == k and v >= bd[k - 1]:
                    continue
                p = m if m < k else k - 1
                while p > 0 and bd[p - 1] > v:
                    bd[p] = bd[p - 1]
                    bi[p] = bi[p - 1]
                    p -= 1
                bd[p] = v
                bi[p] = i
                if m < k:
                    m += 1
            if m == 0:
                out[r, j] = medians[j]
                fallbacks += 1
            else:
                acc = 0.0
                for q in range(m):
                    acc += B[bi[q], j]
                out[r, j] = acc / m
    return fallbacks


def knn_impute_block(B: np.ndarray, targets, k: int = 5) -> tuple[np.ndarray, int]:
    """Impute the ``targets`` columns of block matrix ``B``.

    Distances use all block columns after standardization with the block's
    own observed statistics. Returns the completed block and the number of
    cells that fell back to the column median.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    B = np.ascontiguousarray(B, dtype=float)
    targets = np.asarray(targets, dtype=np.int64)
    out = B.copy()
    miss = np.isnan(B)
    Z = np.where(miss, 0.0, fit_standardizer_array(B).transform(B))
    medians = np.zeros(B.shape[1])
    for j in targets:
        col = B[~miss[:, j], j]
        medians[j] = float(np.median(col)) if col.size else 0.0
    receivers = np.flatnonzero(miss[:, targets].any(axis=1))
    ZT = np.ascontiguousarray(Z.T)
    MT = np.ascontiguousarray((~miss).T, dtype=float)
    fallbacks = _knn_fill(ZT, MT, B, miss, receivers, targets, k, medians, out)
    return out, int(fallbacks)


def impute_knn_matrix(X: np.ndarray, plan, aux: np.ndarray | None = None, k: int = 5) -> tuple[np.ndarray, dict]:
    X = np.asarray(X, dtype=float)
    out = X.copy()
    info = {"knn_median_fallbacks": 0}
    for _, cols in plan.blocks:
        cols = list(cols)
        B = X[:, cols] if aux is None else np.hstack([X[:, cols], aux])
        done, fb = knn_impute_block(B, list(range(len(cols))), k)
        out[:, cols] = done[:, :len(cols)]
        info["knn_median_fallbacks"] += fb
    return out, info
