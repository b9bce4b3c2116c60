"""Synthetic company-year panels with planted signal and controlled missingness.

Features follow a three-factor model whose loadings and means vary by
industry, so columns within a category are strongly correlated. Labels
are Bernoulli draws from a logistic model on the standardized
pre-missingness features, with the intercept solved so the expected
positive rate hits the target.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .data import Panel
from .schema import CATEGORIES, FeatureSchema, canonical_schema

N_FACTORS = 3
DEFAULT_SIGNAL = {"free_float_pct": 1.0, "tobins_q": -0.9, "total_return_4y": -0.9}
DEFAULT_MISSING = {
    "governance": 0.25, "ownership": 0.10, "technical": 0.05,
    "return": 0.15, "valuation": 0.20, "operation": 0.30,
}


@dataclass
class SynthSpec:
    n_rows: int = 20_000
    n_years: int = 7
    first_year: int = 2016
    n_industries_l2: int = 8
    l3_per_l2: int = 4
    positive_rate: float = 0.034
    signal: dict = field(default_factory=lambda: dict(DEFAULT_SIGNAL))
    missing_rate: dict = field(default_factory=lambda: dict(DEFAULT_MISSING))
    missing_mechanism: str = "MCAR"
    mar_driver: str = "volatility_90d"
    mar_strength: float = 1.0
    noise_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1 or self.n_years < 1:
            raise ValueError("n_rows and n_years must be positive")
        if self.n_industries_l2 < 1 or self.l3_per_l2 < 1:
            raise ValueError("industry counts must be positive")
        if not 0.0 < self.positive_rate < 1.0:
            raise ValueError("positive_rate must lie strictly between 0 and 1")
        if self.missing_mechanism not in ("MCAR", "MAR"):
            raise ValueError("missing_mechanism must be MCAR or MAR")
        if isinstance(self.missing_rate, (int, float)):
            self.missing_rate = {c: float(self.missing_rate) for c in CATEGORIES}
        for c, r in self.missing_rate.items():
            if c not in CATEGORIES:
                raise ValueError(f"unknown category {c!r} in missing_rate")
            if not 0.0 <= r <= 1.0:
                raise ValueError("missing rates must lie in [0, 1]")

    @classmethod
    def null(cls, **kw) -> "SynthSpec":
        """Spec with every effect size zero."""
        return cls(signal={}, **kw)


@dataclass
class GroundTruth:
    complete_values: np.ndarray
    mask: np.ndarray  # True where the published panel is missing
    intercept: float
    effects: dict
    feature_mean: np.ndarray
    feature_std: np.ndarray
    label_uniforms: np.ndarray
    spec: SynthSpec

    def logits(self) -> np.ndarray:
        Z = (self.complete_values - self.feature_mean) / self.feature_std
        return self.intercept + Z @ self.coefficient_vector(len(self.feature_mean))

    def coefficient_vector(self, d: int) -> np.ndarray:
        beta = np.zeros(d)
        for j, b in self.effects.items():
            beta[int(j)] = b
        return beta

    def metadata(self, schema: FeatureSchema) -> dict:
        return {
            "spec": asdict(self.spec),
            "intercept": self.intercept,
            "effects": {schema.names[int(j)]: b for j, b in self.effects.items()},
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "missing_cells": int(self.mask.sum()),
        }


def recompute_labels(truth: GroundTruth) -> np.ndarray:
    return (truth.label_uniforms < expit(truth.logits())).astype(np.int8)


def solve_intercept(scores: np.ndarray, rate: float) -> float:
    """Intercept ``a`` with ``mean(sigmoid(a + scores)) == rate``."""
    def gap(a):
        return expit(a + scores).mean() - rate

    lo, hi = -50.0, 50.0
    if gap(lo) > 0 or gap(hi) < 0:
        raise ValueError(f"positive rate {rate} is infeasible for these scores")
    return float(brentq(gap, lo, hi, xtol=1e-12))


def generate(spec: SynthSpec, schema: FeatureSchema | None = None) -> tuple[Panel, GroundTruth]:
    schema = schema or canonical_schema()
    rng = np.random.default_rng(spec.seed)
    d = len(schema)
    n_l3 = spec.n_industries_l2 * spec.l3_per_l2
    for name in spec.signal:
        if name not in schema.names:
            raise ValueError(f"signal feature {name!r} is not in the schema")
    if spec.missing_mechanism == "MAR" and spec.mar_driver not in schema.names:
        raise ValueError(f"MAR driver {spec.mar_driver!r} is not in the schema")

    n_companies = int(np.ceil(spec.n_rows / spec.n_years))
    company_l3 = rng.integers(0, n_l3, size=n_companies)
    base_load = rng.normal(0.0, 1.0, size=(N_FACTORS, d))
    l2_load = base_load + rng.normal(0.0, 0.3, size=(spec.n_industries_l2, N_FACTORS, d))
    l3_mean = rng.normal(0.0, 0.5, size=(n_l3, d))
    year_shift = rng.normal(0.0, 0.2, size=(spec.n_years, d))
    company_effect = rng.normal(0.0, 0.3, size=(n_companies, d))

    rows = np.arange(spec.n_rows)
    comp = rows // spec.n_years
    year_idx = rows % spec.n_years
    l3 = company_l3[comp]
    l2 = l3 // spec.l3_per_l2
    F = rng.normal(size=(spec.n_rows, N_FACTORS))
    X = (np.einsum("nf,nfd->nd", F, l2_load[l2]) + l3_mean[l3] + year_shift[year_idx]
         + company_effect[comp] + rng.normal(0.0, spec.noise_scale, size=(spec.n_rows, d)))
    for j in schema.binary_indices():
        X[:, j] = (X[:, j] > 0).astype(float)

    mean, std = X.mean(axis=0), X.std(axis=0)
    std[std == 0] = 1.0
    effects = {schema.index(n): float(b) for n, b in spec.signal.items()}
    beta = np.zeros(d)
    for j, b in effects.items():
        beta[j] = b
    scores = ((X - mean) / std) @ beta
    # correlated signal features would make the signal strength depend on the
    # seed; rescale so the predictor's spread is |beta| as if independent
    spread = scores.std()
    if spread > 0:
        beta *= np.linalg.norm(beta) / spread
        scores = ((X - mean) / std) @ beta
        effects = {j: float(beta[j]) for j in effects}
    intercept = solve_intercept(scores, spec.positive_rate)
    u = rng.random(spec.n_rows)
    label = (u < expit(intercept + scores)).astype(np.int8)

    rate = np.array([spec.missing_rate.get(f.category, 0.0) for f in schema.features])
    if spec.missing_mechanism == "MCAR":
        p_missing = np.broadcast_to(rate, X.shape)
    else:
        driver = schema.index(spec.mar_driver)
        z = (X[:, driver] - mean[driver]) / std[driver]
        with np.errstate(divide="ignore"):
            base = np.log(rate) - np.log1p(-rate)
        p_missing = expit(base[None, :] + spec.mar_strength * z[:, None])
        p_missing[:, driver] = 0.0
    mask = rng.random(X.shape) < p_missing
    published = np.where(mask, np.nan, X)

    panel = Panel(
        schema,
        np.array([f"C{c:05d}" for c in comp], dtype=object),
        spec.first_year + year_idx,
        np.array([f"L2-{v:02d}" for v in l2], dtype=object),
        np.array([f"L3-{v:03d}" for v in l3], dtype=object),
        published,
        label,
    )
    truth = GroundTruth(X, mask, intercept, effects, mean, std, u, spec)
    return panel, truth


def write_metadata(truth: GroundTruth, schema: FeatureSchema, path: str | Path) -> None:
    Path(path).write_text(json.dumps(truth.metadata(schema), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
