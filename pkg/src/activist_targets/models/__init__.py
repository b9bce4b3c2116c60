"""Classifier families behind one fit / margin / predict_proba contract."""

from __future__ import annotations

import numpy as np

from ..data import Panel
from ..preprocess import fit_standardizer_array
from .base import PROB_EPS, Classifier, TrainedModel, TrainingError
from .forest import RandomForest
from .gbdt import GradientBoostedTrees
from .logistic import LogisticRegression
from .mlp import MLPClassifier

MODEL_CLASSES = {
    "logistic": LogisticRegression,
    "random_forest": RandomForest,
    "gbdt": GradientBoostedTrees,
    "mlp": MLPClassifier,
}
# models whose inputs are standardized with training statistics
STANDARDIZED_KINDS = frozenset({"logistic", "mlp"})
SEEDED_KINDS = frozenset({"random_forest", "gbdt", "mlp"})


def make_classifier(kind: str, **params) -> Classifier:
    try:
        cls = MODEL_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    return cls(**params)


def train_model(kind: str, X, y, feature_names, params: dict | None = None,
                seed: int = 0, standardize: bool | None = None) -> TrainedModel:
    """Fit a classifier of ``kind`` on ``(X, y)``.

    Logistic regression and the MLP see inputs standardized with the
    training means/stddevs; the standardizer travels with the model.
    """
    params = dict(params or {})
    if kind in SEEDED_KINDS:
        params.setdefault("seed", seed)
    clf = make_classifier(kind, **params)
    X = np.asarray(X, dtype=float)
    if standardize is None:
        standardize = kind in STANDARDIZED_KINDS
    std = fit_standardizer_array(X) if standardize else None
    clf.fit(std.transform(X) if std is not None else X, y)
    meta = {}
    if kind == "logistic":
        meta["converged"] = clf.converged_
    return TrainedModel(clf, feature_names, std, meta)


def train_on_panel(kind: str, panel: Panel, params: dict | None = None, seed: int = 0) -> TrainedModel:
    if panel.label is None:
        raise ValueError("training panel must be labeled")
    return train_model(kind, panel.values, panel.label, panel.schema.names, params, seed)


def predict_proba(model: TrainedModel, panel: Panel) -> np.ndarray:
    if panel.schema.names != model.feature_names:
        raise ValueError("panel schema does not match the model's training schema")
    return model.predict_proba(panel.values)


__all__ = [
    "Classifier", "TrainedModel", "TrainingError", "PROB_EPS",
    "LogisticRegression", "RandomForest", "GradientBoostedTrees", "MLPClassifier",
    "MODEL_CLASSES", "STANDARDIZED_KINDS", "make_classifier", "train_model",
    "train_on_panel", "predict_proba",
]
