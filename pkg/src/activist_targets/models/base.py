from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from scipy.special import expit

from ..preprocess import Standardizer

FORMAT = "activist-targets/model"
FORMAT_VERSION = 1

# keeps sigmoid outputs strictly inside (0, 1) in float64
PROB_EPS = 1e-12


class TrainingError(RuntimeError):
    """Raised when optimization produces a non-finite loss."""


class Classifier:
    """Binary classifier contract: ``fit``, ``margin`` (log-odds) and
    ``predict_proba``. Subclasses set ``kind`` and ``accepts_missing``."""

    kind = ""
    accepts_missing = False

    def fit(self, X, y):
        raise NotImplementedError

    def margin(self, X) -> np.ndarray:
        raise NotImplementedError

    def get_params(self) -> dict:
        raise NotImplementedError

    def get_state(self) -> dict:
        raise NotImplementedError

    def set_state(self, state: dict) -> None:
        raise NotImplementedError

    def check_input(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-D feature matrix")
        if not self.accepts_missing and np.isnan(X).any():
            raise ValueError(f"{self.kind} model cannot score rows with missing values")
        return X

    def predict_proba(self, X) -> np.ndarray:
        return np.clip(expit(self.margin(X)), PROB_EPS, 1.0 - PROB_EPS)


def check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    return y


class TrainedModel:
    """A fitted classifier plus the standardizer its inputs pass through."""

    def __init__(self, classifier: Classifier, feature_names: list[str],
                 standardizer: Standardizer | None = None, meta: dict | None = None):
        self.classifier = classifier
        self.feature_names = list(feature_names)
        self.standardizer = standardizer
        self.meta = dict(meta or {})

    @property
    def kind(self) -> str:
        return self.classifier.kind

    def _prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(
                f"expected {len(self.feature_names)} feature columns, got shape {X.shape}"
            )
        return self.standardizer.transform(X) if self.standardizer is not None else X

    def margin(self, X) -> np.ndarray:
        return self.classifier.margin(self.classifier.check_input(self._prepare(X)))

    def predict_proba(self, X) -> np.ndarray:
        return self.classifier.predict_proba(self.classifier.check_input(self._prepare(X)))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kind": self.classifier.kind,
            "params": self.classifier.get_params(),
            "state": self.classifier.get_state(),
            "feature_names": self.feature_names,
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def checksum(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        from . import make_classifier

        if d.get("format") != FORMAT:
            raise ValueError("not a model artifact")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('version')}")
        clf = make_classifier(d["kind"], **d["params"])
        clf.set_state(d["state"])
        std = d.get("standardizer")
        return cls(clf, d["feature_names"],
                   None if std is None else Standardizer.from_dict(std), d.get("meta"))

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
