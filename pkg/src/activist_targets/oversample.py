"""Minority-class oversampling for the training split.

Every sampler returns the original rows unchanged, followed by synthetic
minority rows. Synthetic rows inherit the parent's year and industry codes
and get company ids of the form ``<parent>#<tag><n>``. Provenance of each
synthetic row is stored in ``meta["synthetic"]`` as parallel arrays
``parent``, ``partner`` (row positions in the input panel) and ``gap``
(the interpolation weight).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Panel, concat_panels
from .preprocess import fit_standardizer_array

SAMPLERS = ("none", "random", "smote", "borderline_smote", "adasyn")


class OversamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SamplerKind:
    name: str
    k: int = 5
    m: int = 10
    beta: float = 1.0
    target_ratio: float = 1.0

    def __post_init__(self):
        if self.name not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.name!r}; expected one of {SAMPLERS}")
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be >= 1")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not 0 < self.target_ratio <= 1:
            raise ValueError("target_ratio must lie in (0, 1]")


def _classes(panel: Panel):
    if panel.label is None:
        raise OversamplingError("oversampling needs a labeled panel")
    y = panel.label
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n0 == 0 or n1 == 0:
        raise OversamplingError("both classes must be present")
    minority = 1 if n1 <= n0 else 0
    return minority, np.flatnonzero(y == minority), np.flatnonzero(y != minority)


def _n_needed(n_min: int, n_maj: int, ratio: float) -> int:
    return max(0, int(math.floor(ratio * n_maj + 0.5)) - n_min)


def _scaled(panel: Panel) -> np.ndarray:
    X = panel.values
    if np.isnan(X).any():
        raise OversamplingError("distance-based samplers need complete (imputed) features")
    std = fit_standardizer_array(X)
    return std.transform(X)


def nearest_neighbors(Z: np.ndarray, query: np.ndarray, pool: np.ndarray, k: int) -> np.ndarray:
    """Positions (into ``pool``) of each query row's ``k`` nearest pool rows,
    skipping the query row itself; ties resolve to the lower position."""
    out = np.empty((len(query), k), dtype=np.int64)
    P = Z[pool]
    pn = (P ** 2).sum(axis=1)
    for s in range(0, len(query), 256):
        q = query[s:s + 256]
        Q = Z[q]
        d2 = (Q ** 2).sum(axis=1)[:, None] + pn[None, :] - 2.0 * Q @ P.T
        np.maximum(d2, 0.0, out=d2)
        d2[q[:, None] == pool[None, :]] = np.inf
        out[s:s + 256] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def _synthetic_panel(panel: Panel, parents, partners, gaps, minority: int, tag: str) -> Panel:
    X = panel.values
    a, b = X[parents], X[partners]
    s = a + gaps[:, None] * (b - a)
    # interpolation must stay on the segment despite rounding
    s = np.clip(s, np.minimum(a, b), np.maximum(a, b))
    s = np.where(np.isnan(a), np.nan, s)
    company = np.array([f"{panel.company_id[p]}#{tag}{i}" for i, p in enumerate(parents)], dtype=object)
    return Panel(
        panel.schema, company, panel.year[parents], panel.industry_l2[parents],
        panel.industry_l3[parents], s, np.full(len(parents), minority, dtype=np.int8),
    )


def _finish(panel: Panel, parents, partners, gaps, minority, tag, warnings=(), **extra) -> Panel:
    parents = np.asarray(parents, dtype=np.int64)
    partners = np.asarray(partners, dtype=np.int64)
    gaps = np.asarray(gaps, dtype=float)
    out = concat_panels(panel, _synthetic_panel(panel, parents, partners, gaps, minority, tag))
    out.meta["synthetic"] = {"parent": parents, "partner": partners, "gap": gaps}
    out.meta["sampler_warnings"] = list(warnings)
    out.meta.update(extra)
    return out


def oversample_random(train: Panel, target_ratio: float = 1.0, seed: int = 0) -> Panel:
    """Duplicate minority rows uniformly with replacement up to ``target_ratio``."""
    minority, mi, ma = _classes(train)
    n = _n_needed(len(mi), len(ma), target_ratio)
    rng = np.random.default_rng(seed)
    parents = mi[rng.integers(0, len(mi), size=n)]
    return _finish(train, parents, parents, np.zeros(n), minority, "dup")


def _smote_from(train, Z, mi, seeds_pool, k, n, rng, minority, tag, warnings=(), **extra):
    if len(mi) < 2:
        raise OversamplingError("SMOTE-family samplers need at least 2 minority rows")
    k = min(k, len(mi) - 1)
    nn = nearest_neighbors(Z, seeds_pool, mi, k)
    pick = rng.integers(0, len(seeds_pool), size=n)
    which = rng.integers(0, k, size=n)
    gaps = rng.random(n)
    return _finish(train, seeds_pool[pick], mi[nn[pick, which]], gaps, minority, tag,
                   warnings, **extra)


def oversample_smote(train: Panel, k: int = 5, target_ratio: float = 1.0, seed: int = 0) -> Panel:
    """Interpolate between random minority rows and one of their ``k`` nearest
    minority neighbours (Euclidean on standardized features)."""
    minority, mi, ma = _classes(train)
    if len(mi) < 2:
        raise OversamplingError("SMOTE needs at least 2 minority rows")
    Z = _scaled(train)
    n = _n_needed(len(mi), len(ma), target_ratio)
    return _smote_from(train, Z, mi, mi, k, n, np.random.default_rng(seed), minority, "smote")


def classify_borderline(majority_count: np.ndarray, m: int) -> np.ndarray:
    """``"noise"`` if all m neighbours are majority, ``"danger"`` if at least
    half are, else ``"safe"``."""
    mc = np.asarray(majority_count)
    return np.where(mc >= m, "noise", np.where(mc >= m / 2.0, "danger", "safe"))


def oversample_borderline(train: Panel, k: int = 5, m: int = 10, target_ratio: float = 1.0,
                          seed: int = 0) -> Panel:
    """Borderline-SMOTE (variant 1): only DANGER minority rows seed synthetics."""
    minority, mi, ma = _classes(train)
    if len(mi) < 2:
        raise OversamplingError("Borderline SMOTE needs at least 2 minority rows")
    Z = _scaled(train)
    everyone = np.arange(len(train))
    m = min(m, len(train) - 1)
    nn_all = nearest_neighbors(Z, mi, everyone, m)
    majority_count = (train.label[nn_all] != minority).sum(axis=1)
    category = classify_borderline(majority_count, m)
    danger = mi[category == "danger"]
    n = _n_needed(len(mi), len(ma), target_ratio)
    rng = np.random.default_rng(seed)
    counts = {c: int((category == c).sum()) for c in ("danger", "safe", "noise")}
    if len(danger) == 0:
        return _smote_from(train, Z, mi, mi, k, n, rng, minority, "bsmote",
                           ["no DANGER minority rows; fell back to plain SMOTE"],
                           borderline_counts=counts, danger=danger)
    return _smote_from(train, Z, mi, danger, k, n, rng, minority, "bsmote",
                       borderline_counts=counts, danger=danger)


def adasyn_allocation(majority_count: np.ndarray, k: int, total: int) -> np.ndarray | None:
    """Synthetic counts per minority row, ``round(r_i / sum(r) * total)``;
    ``None`` when no minority row has a majority neighbour."""
    r = np.asarray(majority_count, dtype=float) / k
    if r.sum() == 0:
        return None
    return np.floor(r / r.sum() * total + 0.5).astype(np.int64)


def oversample_adasyn(train: Panel, k: int = 5, beta: float = 1.0, seed: int = 0) -> Panel:
    """ADASYN: ``(N_maj - N_min) * beta`` synthetics allocated by local difficulty."""
    minority, mi, ma = _classes(train)
    if len(mi) < 2:
        raise OversamplingError("ADASYN needs at least 2 minority rows")
    Z = _scaled(train)
    total = int(math.floor((len(ma) - len(mi)) * beta + 0.5))
    k_all = min(k, len(train) - 1)
    nn_all = nearest_neighbors(Z, mi, np.arange(len(train)), k_all)
    majority_count = (train.label[nn_all] != minority).sum(axis=1)
    g = adasyn_allocation(majority_count, k_all, total)
    rng = np.random.default_rng(seed)
    if g is None:
        return _smote_from(train, Z, mi, mi, k, total, rng, minority, "adasyn",
                           ["no minority row has majority neighbours; fell back to plain SMOTE"],
                           adasyn_total=total)
    k_min = min(k, len(mi) - 1)
    nn = nearest_neighbors(Z, mi, mi, k_min)
    seeds = np.repeat(np.arange(len(mi)), g)
    which = rng.integers(0, k_min, size=len(seeds))
    gaps = rng.random(len(seeds))
    return _finish(train, mi[seeds], mi[nn[seeds, which]], gaps, minority, "adasyn",
                   adasyn_total=total, adasyn_allocation=g)


def oversample(train: Panel, kind: SamplerKind, seed: int = 0) -> Panel:
    if kind.name == "none":
        return train
    if kind.name == "random":
        return oversample_random(train, kind.target_ratio, seed)
    if kind.name == "smote":
        return oversample_smote(train, kind.k, kind.target_ratio, seed)
    if kind.name == "borderline_smote":
        return oversample_borderline(train, kind.k, kind.m, kind.target_ratio, seed)
    return oversample_adasyn(train, kind.k, kind.beta, seed)
