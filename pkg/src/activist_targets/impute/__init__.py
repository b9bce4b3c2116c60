"""Missing-value imputation engines and the train/test dispatch rule.

Training data is imputed with the configured engine; held-out data is
always median-filled with training statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..data import Panel
from ..preprocess import one_hot_years
from .gain import GainConfig, GainModel, GainTrainingError, impute_gain, train_gain
from .knn import impute_knn_matrix, knn_impute_block, partial_distances
from .mice import impute_mice_matrix, mice_block
from .plan import ImputationPlan
from .simple import column_statistic, fill_with, impute_simple

IMPUTERS = ("none", "mean", "median", "knn", "mice", "gain")


@dataclass(frozen=True)
class ImputerKind:
    name: str
    k: int = 5
    iterations: int = 4
    mice_trees: int = 50
    mice_depth: int = 3
    mice_learning_rate: float = 0.1
    gain: GainConfig = field(default_factory=GainConfig)

    def __post_init__(self):
        if self.name not in IMPUTERS:
            raise ValueError(f"unknown imputer {self.name!r}; expected one of {IMPUTERS}")
        if self.k < 1:
            raise ValueError("knn k must be >= 1")
        if self.iterations < 1:
            raise ValueError("mice iterations must be >= 1")

    @classmethod
    def from_dict(cls, name: str, params: dict | None = None) -> "ImputerKind":
        params = dict(params or {})
        gain = params.pop("gain", None)
        kind = cls(name, **params)
        if gain:
            kind = replace(kind, gain=GainConfig(**gain))
        return kind


def _aux(panel: Panel, plan: ImputationPlan):
    return one_hot_years(panel)[0] if plan.use_year_onehots else None


def impute_knn(panel: Panel, k: int = 5, plan: ImputationPlan | None = None) -> Panel:
    plan = plan or ImputationPlan.from_schema(panel.schema)
    out, info = impute_knn_matrix(panel.values, plan, _aux(panel, plan), k)
    return panel.with_values(out, **info)


def impute_mice(panel: Panel, iterations: int = 4, plan: ImputationPlan | None = None,
                seed: int = 0, **tree_params) -> Panel:
    plan = plan or ImputationPlan.from_schema(panel.schema)
    out = impute_mice_matrix(panel.values, plan, _aux(panel, plan), iterations, seed, **tree_params)
    return panel.with_values(out)


def train_gain_panel(panel: Panel, cfg: GainConfig, plan: ImputationPlan | None = None) -> GainModel:
    plan = plan or ImputationPlan.from_schema(panel.schema)
    return train_gain(panel.values, plan, cfg, _aux(panel, plan))


def impute_gain_panel(model: GainModel, panel: Panel, plan: ImputationPlan | None = None) -> Panel:
    plan = plan or ImputationPlan.from_schema(panel.schema)
    return panel.with_values(impute_gain(model, panel.values, _aux(panel, plan)))


def impute_train(panel: Panel, kind: ImputerKind, plan: ImputationPlan | None = None,
                 seed: int = 0) -> Panel:
    """Impute a training panel with the engine named by ``kind``."""
    plan = plan or ImputationPlan.from_schema(panel.schema)
    if kind.name == "none":
        return panel
    if kind.name in ("mean", "median"):
        return impute_simple(panel, kind.name)
    if kind.name == "knn":
        return impute_knn(panel, kind.k, plan)
    if kind.name == "mice":
        return impute_mice(panel, kind.iterations, plan, seed, n_trees=kind.mice_trees,
                           depth=kind.mice_depth, learning_rate=kind.mice_learning_rate)
    cfg = replace(kind.gain, seed=seed)
    return impute_gain_panel(train_gain_panel(panel, cfg, plan), panel, plan)


def impute_dispatch(train: Panel, test: Panel, kind: ImputerKind,
                    plan: ImputationPlan | None = None, seed: int = 0) -> tuple[Panel, Panel]:
    """Returns ``(imputed train, median-filled test)``.

    Test medians come from the observed training values only. With
    ``kind.name == "none"`` both panels pass through unchanged.
    """
    if train.schema != test.schema:
        raise ValueError("train and test panels must share a schema")
    if kind.name == "none":
        return train, test
    train_out = impute_train(train, kind, plan, seed)
    if np.isnan(train_out.values).any():
        # cells no engine could fill (fully-missing columns) fall back to median/0
        train_out = impute_simple(train_out, "median", reference=train)
    return train_out, impute_simple(test, "median", reference=train)


__all__ = [
    "IMPUTERS", "ImputerKind", "ImputationPlan", "GainConfig", "GainModel", "GainTrainingError",
    "impute_simple", "impute_knn", "impute_mice", "train_gain_panel", "impute_gain_panel",
    "impute_train", "impute_dispatch", "column_statistic", "fill_with", "knn_impute_block",
    "mice_block", "partial_distances", "train_gain", "impute_gain",
]
