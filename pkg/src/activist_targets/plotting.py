"""Static figures for reports and explanations. CSV files stay the
contract; these are convenience renderings of the same numbers."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.titlesize": 10,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> Path:
    path = Path(path)
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_report(rows, path, top: int = 20) -> Path:
    """Horizontal bars of test AUC for report rows (dicts from the report
    CSV), best at the top."""
    rows = [r for r in rows if r.get("auc_test")][:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 0.3 * max(len(rows), 1) + 1))
        labels = [f"{r['imputation']} / {r['oversampling']} / {r['model']}" for r in rows]
        auc = [float(r["auc_test"]) for r in rows]
        y = np.arange(len(rows))[::-1]
        ax.barh(y, auc, color="#4c72b0")
        ax.set_yticks(y, labels)
        ax.axvline(0.5, color="grey", lw=0.8, ls="--")
        ax.set_xlim(0, 1)
        ax.set_xlabel("test AUC-ROC")
        return _save(fig, path)


def plot_shap_bar(names, mean_abs, path, top: int = 15) -> Path:
    order = sorted(range(len(mean_abs)), key=lambda j: (-mean_abs[j], j))[:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 0.28 * len(order) + 1))
        y = np.arange(len(order))[::-1]
        ax.barh(y, [mean_abs[j] for j in order], color="#4c72b0")
        ax.set_yticks(y, [names[j] for j in order])
        ax.set_xlabel("mean |SHAP| (log-odds)")
        return _save(fig, path)


def plot_beeswarm(names, attributions, feature_values, path, top: int = 15, seed: int = 0) -> Path:
    """One row of points per feature, colored by the feature's value
    rank-scaled to [0, 1] within that feature."""
    attributions = np.asarray(attributions, dtype=float)
    feature_values = np.asarray(feature_values, dtype=float)
    mean_abs = np.abs(attributions).mean(axis=0)
    order = sorted(range(len(mean_abs)), key=lambda j: (-mean_abs[j], j))[:top]
    rng = np.random.default_rng(seed)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 0.32 * len(order) + 1))
        for pos, j in zip(np.arange(len(order))[::-1], order):
            v = feature_values[:, j]
            ok = ~np.isnan(v)
            color = np.full(len(v), 0.5)
            if ok.sum() > 1:
                ranks = np.argsort(np.argsort(v[ok]))
                color[ok] = ranks / (ok.sum() - 1)
            jitter = rng.uniform(-0.3, 0.3, size=len(v))
            sc = ax.scatter(attributions[:, j], pos + jitter, c=color, cmap="coolwarm",
                            vmin=0, vmax=1, s=4, linewidths=0)
        ax.set_yticks(np.arange(len(order))[::-1], [names[j] for j in order])
        ax.axvline(0, color="grey", lw=0.8)
        ax.set_xlabel("SHAP value (log-odds)")
        cb = fig.colorbar(sc, ax=ax, ticks=[0, 1])
        cb.ax.set_yticklabels(["low", "high"])
        cb.set_label("feature value")
        return _save(fig, path)


def plot_roc(curve, path, label: str | None = None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.plot(curve.fpr, curve.tpr, color="#4c72b0",
                label=label or f"AUC = {curve.area():.3f}")
        ax.plot([0, 1], [0, 1], color="grey", lw=0.8, ls="--")
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.set_aspect("equal")
        ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)
