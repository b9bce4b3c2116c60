"""Shapley-value attributions in margin (log-odds) space.

Coalition values are interventional: ``v(S)`` is the mean model margin over
background rows with the features in ``S`` replaced by the explained
instance's values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

MAX_EXACT_FEATURES = 15
TOP_BEESWARM = 15


class ExplainError(ValueError):
    pass


def _margin_fn(model) -> Callable[[np.ndarray], np.ndarray]:
    return model if callable(model) and not hasattr(model, "margin") else model.margin


def coalition_values(model, x: np.ndarray, background: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """``v(S)`` for each boolean row of ``masks`` (True = take from ``x``)."""
    f = _margin_fn(model)
    x = np.asarray(x, dtype=float)
    bg = np.asarray(background, dtype=float)
    if bg.ndim != 2 or len(bg) == 0:
        raise ExplainError("background must be a non-empty 2-D array")
    out = np.empty(len(masks))
    per = max(1, 200_000 // len(bg))
    for s in range(0, len(masks), per):
        chunk = masks[s:s + per]
        rows = np.where(chunk[:, None, :], x[None, None, :], bg[None, :, :])
        out[s:s + per] = f(rows.reshape(-1, bg.shape[1])).reshape(len(chunk), len(bg)).mean(axis=1)
    return out


def _all_masks(d: int) -> np.ndarray:
    return ((np.arange(2 ** d)[:, None] >> np.arange(d)[None, :]) & 1).astype(bool)


def shap_exact(model, x, background, max_features: int = MAX_EXACT_FEATURES) -> tuple[np.ndarray, float]:
    """Shapley values by enumerating all ``2^d`` coalitions.

    Returns ``(phi, base)`` with ``base = v(empty)``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if d > max_features:
        raise ExplainError(
            f"exact enumeration is limited to {max_features} features (got {d}); "
            "use shap_kernel instead"
        )
    masks = _all_masks(d)
    v = coalition_values(model, x, background, masks)
    codes = np.arange(2 ** d)
    sizes = masks.sum(axis=1)
    fact = [math.factorial(i) for i in range(d + 1)]
    phi = np.zeros(d)
    for j in range(d):
        without = codes[~masks[:, j]]
        s = sizes[without]
        w = np.array([fact[k] * fact[d - k - 1] for k in s], dtype=float) / fact[d]
        phi[j] = (w * (v[without | (1 << j)] - v[without])).sum()
    return phi, float(v[0])


def shapley_kernel_weight(d: int, size: int) -> float:
    return (d - 1) / (math.comb(d, size) * size * (d - size))


def _sample_coalitions(d: int, n_samples: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Coalition masks and regression weights.

    Enumerates every proper coalition when the budget allows; otherwise
    draws sizes proportional to their total kernel weight and subsets
    uniformly within a size, each draw paired with its complement.
    """
    n_proper = 2 ** d - 2
    if n_samples >= n_proper:
        masks = _all_masks(d)[1:-1]
        sizes = masks.sum(axis=1)
        return masks, np.array([shapley_kernel_weight(d, s) for s in sizes])
    sizes = np.arange(1, d)
    p = np.array([shapley_kernel_weight(d, s) * math.comb(d, s) for s in sizes])
    p /= p.sum()
    half = (n_samples + 1) // 2
    drawn = rng.choice(sizes, size=half, p=p)
    masks = np.zeros((2 * half, d), dtype=bool)
    for i, s in enumerate(drawn):
        idx = rng.choice(d, size=s, replace=False)
        masks[2 * i, idx] = True
        masks[2 * i + 1] = ~masks[2 * i]
    return masks[:n_samples], np.ones(min(n_samples, 2 * half))


@dataclass
class KernelResult:
    phi: np.ndarray
    base: float
    ridge: bool = False


def shap_kernel(model, x, background, n_samples: int = 2048, seed=0) -> KernelResult:
    """Kernel SHAP with the efficiency constraint enforced exactly.

    The last attribution is eliminated through ``sum(phi) = f(x) - base``,
    so local accuracy holds by construction. A rank-deficient design falls
    back to a ridge-regularized solve and sets ``ridge``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    # small d: full enumeration needs fewer than 2d + 2 coalitions
    floor = min(2 * d + 2, 2 ** d)
    if n_samples < floor:
        raise ExplainError(f"n_samples must be at least {floor}")
    ends = coalition_values(model, x, background, np.array([np.zeros(d, bool), np.ones(d, bool)]))
    base, fx = float(ends[0]), float(ends[1])
    if d == 1:
        return KernelResult(np.array([fx - base]), base)
    rng = np.random.default_rng(seed)
    masks, w = _sample_coalitions(d, n_samples, rng)
    v = coalition_values(model, x, background, masks) - base
    Zm = masks.astype(float)
    total = fx - base
    # phi_last = total - sum(phi_rest)
    A = Zm[:, :-1] - Zm[:, -1:]
    b = v - Zm[:, -1] * total
    sw = np.sqrt(w)
    As, bs = A * sw[:, None], b * sw
    ridge = False
    gram = As.T @ As
    if np.linalg.matrix_rank(gram) < d - 1:
        ridge = True
        rest = np.linalg.solve(gram + 1e-8 * np.eye(d - 1), As.T @ bs)
    else:
        rest = np.linalg.lstsq(As, bs, rcond=None)[0]
    phi = np.append(rest, total - rest.sum())
    return KernelResult(phi, base, ridge)


@dataclass
class ShapSummary:
    attributions: np.ndarray  # (instances, features), margin space
    base_value: float
    feature_names: list[str]
    margins: np.ndarray | None = None
    method: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def mean_abs(self) -> np.ndarray:
        return np.abs(self.attributions).mean(axis=0)

    @property
    def feature_order(self) -> list[int]:
        return [i for i, _ in rank_features(self)]


def rank_features(summary: ShapSummary) -> list[tuple[int, float]]:
    """``(feature index, mean |phi|)`` pairs, descending; ties keep index order."""
    if summary.attributions.size == 0:
        raise ExplainError("empty summary")
    m = summary.mean_abs
    order = sorted(range(len(m)), key=lambda j: (-m[j], j))
    return [(j, float(m[j])) for j in order]


def shap_linear(model, X, background) -> ShapSummary:
    """Closed-form attributions for logistic regression.

    ``phi_ij = w_j (z_ij - mu_j)`` where ``z`` are the model's standardized
    inputs and ``mu`` the background means in that space.
    """
    clf = getattr(model, "classifier", model)
    if getattr(clf, "kind", None) != "logistic":
        raise ExplainError("linear SHAP applies to logistic regression only")
    std = getattr(model, "standardizer", None)
    X = np.asarray(X, dtype=float)
    bg = np.asarray(background, dtype=float)
    Z = std.transform(X) if std is not None else X
    Zb = std.transform(bg) if std is not None else bg
    w, b = clf.coef_, clf.intercept_
    mu = Zb.mean(axis=0)
    phi = (Z - mu) * w
    names = getattr(model, "feature_names", [f"x{j}" for j in range(X.shape[1])])
    return ShapSummary(phi, float(w @ mu + b), names, Z @ w + b, "linear")


def explain(model, X, background, method: str = "auto", n_samples: int = 2048,
            seed: int = 0) -> ShapSummary:
    """Attributions for every row of ``X``.

    ``auto`` picks linear SHAP for logistic models, exact enumeration when
    there are at most 10 features, and Kernel SHAP otherwise. Row ``i``
    of a kernel run uses seed ``(seed, i)``.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    kind = getattr(getattr(model, "classifier", model), "kind", None)
    if method == "auto":
        method = "linear" if kind == "logistic" else ("exact" if d <= 10 else "kernel")
    if method == "linear":
        return shap_linear(model, X, background)
    phis, base = [], None
    for i, x in enumerate(X):
        if method == "exact":
            phi, base = shap_exact(model, x, background)
        elif method == "kernel":
            res = shap_kernel(model, x, background, n_samples, seed=[seed, i])
            phi, base = res.phi, res.base
        else:
            raise ExplainError(f"unknown method {method!r}")
        phis.append(phi)
    names = getattr(model, "feature_names", [f"x{j}" for j in range(d)])
    return ShapSummary(np.array(phis).reshape(len(X), d), float(base), names,
                       _margin_fn(model)(X), method)


def sample_background(X: np.ndarray, size: int = 100, seed: int = 0) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if len(X) <= size:
        return X.copy()
    rng = np.random.default_rng(seed)
    return X[np.sort(rng.choice(len(X), size=size, replace=False))]


def _r(v: float) -> str:
    return repr(float(v))


def export_explanations(summary: ShapSummary, feature_values: np.ndarray, out_dir: str | Path,
                        instance_ids=None, coefficients=None, top: int = TOP_BEESWARM) -> dict[str, Path]:
    """Write bar, beeswarm and (optionally) scaled-coefficient CSVs.

    Returns the written paths keyed by ``bar``, ``beeswarm``, ``coefficients``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ranking = rank_features(summary)
    names = summary.feature_names
    n = summary.attributions.shape[0]
    ids = list(range(n)) if instance_ids is None else list(instance_ids)
    paths = {"bar": out_dir / "shap_bar.csv", "beeswarm": out_dir / "shap_beeswarm.csv"}

    with paths["bar"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "mean_abs_shap"])
        for j, m in ranking:
            w.writerow([names[j], _r(m)])

    with paths["beeswarm"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "instance_id", "shap_value", "feature_value"])
        for j, _ in ranking[:top]:
            for i in range(n):
                w.writerow([names[j], ids[i], _r(summary.attributions[i, j]),
                            _r(feature_values[i, j])])

    if coefficients is not None:
        paths["coefficients"] = out_dir / "scaled_coefficients.csv"
        coef = np.asarray(coefficients, dtype=float)
        order = sorted(range(len(coef)), key=lambda j: (-abs(coef[j]), j))
        with paths["coefficients"].open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "scaled_coefficient"])
            for j in order:
                w.writerow([names[j], _r(coef[j])])
    return paths

