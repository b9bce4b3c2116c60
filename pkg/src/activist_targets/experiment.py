"""Imputation x oversampling x model grid: expansion, execution, reporting.

Each stage draws its seed from a hash of the global seed and the settings
that stage depends on, so a stage's output does not depend on which other
configurations share the run, on their order, or on the worker count. The
same property lets imputed and oversampled training panels be cached and
reused across configurations.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .data import Panel, Split, load_panel, stratified_split
from .impute import IMPUTERS, ImputerKind, impute_dispatch
from .metrics import auc_roc
from .models import TrainedModel, make_classifier, train_model
from .oversample import SAMPLERS, SamplerKind, oversample
from .preprocess import percentile_transform
from .schema import FeatureSchema, canonical_schema

# grid label -> implementation; the three boosting labels share one
# missing-aware GBDT and differ only in their default hyperparameters
MODEL_LABELS = {
    "logistic": "logistic",
    "random_forest": "random_forest",
    "xgboost": "gbdt",
    "lightgbm": "gbdt",
    "catboost": "gbdt",
    "gbdt": "gbdt",
    "mlp": "mlp",
}
BOOSTING_LABELS = ("xgboost", "lightgbm", "catboost")
LABEL_DEFAULTS = {
    "xgboost": {"n_trees": 100, "depth": 6, "learning_rate": 0.3, "lam": 1.0, "min_leaf": 1},
    "lightgbm": {"n_trees": 100, "depth": 5, "learning_rate": 0.1, "lam": 0.0, "min_leaf": 20},
    "catboost": {"n_trees": 200, "depth": 6, "learning_rate": 0.05, "lam": 3.0, "min_leaf": 1},
}
# samplers that can run on data that still has missing values
MISSING_OK_SAMPLERS = frozenset({"none", "random"})

DISPLAY = {
    "none": "None", "mean": "Mean", "median": "Median", "knn": "KNN", "mice": "MICE",
    "gain": "GAIN", "random": "Random Oversampling", "smote": "SMOTE",
    "borderline_smote": "Borderline SMOTE", "adasyn": "ADASYN",
    "logistic": "Logistic Regression", "random_forest": "Random Forest", "xgboost": "XGBoost",
    "lightgbm": "Light GBM", "catboost": "CatBoost", "gbdt": "GBDT", "mlp": "Neural Network",
}
SAMPLER_DISPLAY_NONE = "no oversampling"

REPORT_COLUMNS = ["imputation", "oversampling", "model", "auc_test", "auc_train", "seconds", "warnings"]
TABLE_HEADER = ["Imputation", "Oversampling", "ML Method", "AUC-ROC"]


class ConfigError(ValueError):
    pass


def derive_seed(global_seed: int, *parts) -> int:
    """Stable 63-bit seed from the global seed and JSON-able ``parts``."""
    blob = json.dumps([int(global_seed), list(parts)], sort_keys=True, default=str)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big") >> 1


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        if a is None:
            h.update(b"-")
            continue
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode() + str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


# -- configurations ------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    imputer: ImputerKind
    sampler: SamplerKind
    model: str  # grid label, see MODEL_LABELS
    model_params: dict = field(default_factory=dict)
    seed: int = 0
    standardize: bool | None = None  # None: the model family's default

    def __post_init__(self):
        if self.model not in MODEL_LABELS:
            raise ConfigError(f"unknown model label {self.model!r}; expected one of {sorted(MODEL_LABELS)}")
        if self.imputer.name == "none":
            if self.kind != "gbdt":
                raise ConfigError(f"model {self.model!r} cannot take missing values; pick an imputer")
            if self.sampler.name not in MISSING_OK_SAMPLERS:
                raise ConfigError(f"sampler {self.sampler.name!r} needs imputed data")

    @property
    def kind(self) -> str:
        return MODEL_LABELS[self.model]

    def imputer_key(self) -> str:
        return json.dumps(asdict(self.imputer), sort_keys=True)

    def sampler_key(self) -> str:
        return json.dumps(asdict(self.sampler), sort_keys=True)

    def key(self) -> str:
        return json.dumps({"imputer": asdict(self.imputer), "sampler": asdict(self.sampler),
                           "model": self.model, "params": self.model_params,
                           "standardize": self.standardize}, sort_keys=True)

    @property
    def label(self) -> str:
        return f"{self.imputer.name}/{self.sampler.name}/{self.model}"


@dataclass
class GridSpec:
    imputers: list
    samplers: list
    models: list
    sparse_native: bool = False
    seed: int = 0
    imputer_params: dict = field(default_factory=dict)
    sampler_params: dict = field(default_factory=dict)
    model_params: dict = field(default_factory=dict)
    standardize: bool | None = None


def _model_params(spec: GridSpec, label: str) -> dict:
    params = dict(LABEL_DEFAULTS.get(label, {}))
    params.update(spec.model_params.get(label, {}))
    return params


def expand_grid(spec: GridSpec) -> list[PipelineConfig]:
    """Valid cells of the product in imputer, sampler, model order, followed
    by no-imputation cells for the boosting labels when ``sparse_native``."""
    for axis in ("imputers", "samplers", "models"):
        values = getattr(spec, axis)
        if not values:
            raise ConfigError(f"grid axis {axis!r} is empty")
        if len(set(values)) != len(values):
            raise ConfigError(f"grid axis {axis!r} has duplicates")
    for m in spec.models:
        if m not in MODEL_LABELS:
            raise ConfigError(f"unknown model label {m!r}")

    def make(imp, smp, model):
        return PipelineConfig(
            ImputerKind.from_dict(imp, spec.imputer_params.get(imp)),
            SamplerKind(smp, **spec.sampler_params.get(smp, {})),
            model, _model_params(spec, model), spec.seed, spec.standardize)

    out, seen = [], set()
    for imp in spec.imputers:
        for smp in spec.samplers:
            for model in spec.models:
                try:
                    cfg = make(imp, smp, model)
                except ConfigError:
                    continue
                out.append(cfg)
                seen.add((imp, smp, model))
    if spec.sparse_native:
        for model in spec.models:
            if MODEL_LABELS[model] == "gbdt" and model != "gbdt" and ("none", "none", model) not in seen:
                out.append(make("none", "none", model))
    return out


# -- running -------------------------------------------------------------------

@dataclass
class RunRecord:
    config: PipelineConfig
    auc_test: float = math.nan
    auc_train: float = math.nan
    seconds: float = 0.0
    durations: dict = field(default_factory=dict)
    converged: bool | None = None
    warnings: tuple = ()
    error: str | None = None
    checksums: dict = field(default_factory=dict)
    model: TrainedModel | None = field(default=None, compare=False, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None


def prepare_split(panel: Panel, train_fraction: float = 0.8, seed: int = 0,
                  percentile: bool = True) -> Split:
    """Peer-percentile transform on the whole panel, then a stratified split.

    The transform ranks each value against its industry-year peers, so it
    is computed before splitting; labels play no part in it.
    """
    if percentile:
        panel = percentile_transform(panel)
    return stratified_split(panel, train_fraction, seed)


def _warnings_from(meta: dict) -> list[str]:
    out = []
    for w in meta.get("sampler_warnings", ()):
        out.append(str(w))
    if meta.get("knn_median_fallbacks"):
        out.append(f"knn median fallbacks: {meta['knn_median_fallbacks']}")
    if meta.get("fully_missing_columns"):
        out.append(f"fully missing columns: {len(meta['fully_missing_columns'])}")
    return out


def run_config(split: Split, config: PipelineConfig, cache: dict | None = None,
               keep_model: bool = False) -> RunRecord:
    """Run one grid cell. Stage failures are returned in ``record.error``."""
    rec = RunRecord(config)
    cache = {} if cache is None else cache
    t_start = time.perf_counter()
    stage = "validate"
    try:
        if split.train.label is None or split.test.label is None:
            raise ValueError("split must be labeled")

        stage = "impute"
        t = time.perf_counter()
        ikey = ("impute", config.seed, config.imputer_key())
        if ikey not in cache:
            seed = derive_seed(config.seed, "impute", config.imputer_key())
            cache[ikey] = impute_dispatch(split.train, split.test, config.imputer, seed=seed)
        train_imp, test_imp = cache[ikey]
        rec.durations["impute"] = time.perf_counter() - t

        stage = "oversample"
        t = time.perf_counter()
        skey = ikey + (config.sampler_key(),)
        if skey not in cache:
            seed = derive_seed(config.seed, "oversample", config.imputer_key(), config.sampler_key())
            cache[skey] = oversample(train_imp, config.sampler, seed)
        train_fit = cache[skey]
        if not set(split.test.row_ids).isdisjoint(train_fit.row_ids):
            raise RuntimeError("test rows reached the training panel")
        rec.durations["oversample"] = time.perf_counter() - t

        stage = "fit"
        t = time.perf_counter()
        model = train_model(config.kind, train_fit.values, train_fit.label, train_fit.schema.names,
                            config.model_params, derive_seed(config.seed, "model", config.key()),
                            config.standardize)
        rec.durations["fit"] = time.perf_counter() - t

        stage = "score"
        t = time.perf_counter()
        rec.auc_test = auc_roc(model.predict_proba(test_imp.values), test_imp.label)
        rec.auc_train = auc_roc(model.predict_proba(train_imp.values), train_imp.label)
        rec.durations["score"] = time.perf_counter() - t

        rec.converged = model.meta.get("converged")
        warnings = _warnings_from(train_imp.meta) + _warnings_from(train_fit.meta)
        if rec.converged is False:
            warnings.append("logistic regression did not converge")
        rec.warnings = tuple(dict.fromkeys(warnings))
        std = model.standardizer
        rec.checksums = {
            "impute": _digest(train_imp.values),
            "oversample": _digest(train_fit.values, train_fit.label),
            "standardize": _digest(std.mean, std.std) if std is not None else _digest(None),
            "model": model.checksum(),
        }
        if keep_model:
            rec.model = model
    except Exception as exc:  # errors are data for the sweep
        rec.error = f"{stage}: {type(exc).__name__}: {exc}"
    rec.seconds = time.perf_counter() - t_start
    return rec


_WORKER_SPLIT: Split | None = None


def _init_worker(split: Split) -> None:
    global _WORKER_SPLIT
    _WORKER_SPLIT = split


def _run_chunk(configs: list[PipelineConfig]) -> list[RunRecord]:
    cache: dict = {}
    return [run_config(_WORKER_SPLIT, c, cache) for c in configs]


def run_grid(split: Split, configs, jobs: int = 1) -> list[RunRecord]:
    """Records in config order. ``jobs > 1`` runs contiguous chunks of the
    config list in worker processes; results do not depend on ``jobs``."""
    configs = list(configs)
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if jobs == 1 or len(configs) <= 1:
        cache: dict = {}
        return [run_config(split, c, cache) for c in configs]
    bounds = np.linspace(0, len(configs), min(jobs, len(configs)) + 1).round().astype(int)
    chunks = [configs[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=len(chunks), initializer=_init_worker,
                             initargs=(split,)) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [r for part in parts for r in part]


# -- reporting -----------------------------------------------------------------

def _fmt_auc(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.6f}"


def record_row(r: RunRecord, timings: bool = False) -> dict:
    c = r.config
    notes = list(r.warnings) + ([r.error] if r.error else [])
    return {"imputation": c.imputer.name, "oversampling": c.sampler.name, "model": c.model,
            "auc_test": _fmt_auc(r.auc_test), "auc_train": _fmt_auc(r.auc_train),
            "seconds": f"{r.seconds:.3f}" if timings else "", "warnings": "; ".join(notes)}


def select_rows(rows, threshold: float) -> list[dict]:
    """Rows with ``auc_test >= threshold``, best first; ties keep input
    order. Unscored (failed) rows follow when ``threshold <= 0``."""
    rows = list(rows)
    scored = [(i, r) for i, r in enumerate(rows) if r["auc_test"] != ""
              and float(r["auc_test"]) >= threshold]
    scored.sort(key=lambda p: (-float(p[1]["auc_test"]), p[0]))
    out = [r for _, r in scored]
    if threshold <= 0:
        out += [r for r in rows if r["auc_test"] == ""]
    return out


def format_table(rows) -> str:
    table = [TABLE_HEADER]
    for r in rows:
        smp = SAMPLER_DISPLAY_NONE if r["oversampling"] == "none" else DISPLAY.get(r["oversampling"], r["oversampling"])
        auc = "failed" if r["auc_test"] == "" else f"{float(r['auc_test']):.3f}"
        table.append([DISPLAY.get(r["imputation"], r["imputation"]), smp,
                      DISPLAY.get(r["model"], r["model"]), auc])
    widths = [max(len(row[i]) for row in table) for i in range(4)]
    lines = []
    for k, row in enumerate(table):
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report_rows(rows, threshold: float, path) -> tuple[Path, Path]:
    rows = list(rows)
    if not rows:
        raise ConfigError("no records to report")
    path = Path(path)
    table_path = path.with_suffix(".txt")
    chosen = select_rows(rows, threshold)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows({k: r.get(k, "") for k in REPORT_COLUMNS} for r in chosen)
    table_path.write_text(format_table(chosen), encoding="utf-8")
    return path, table_path


def write_report(records, threshold: float, path, timings: bool = False) -> tuple[Path, Path]:
    """Write the ranked CSV at ``path`` and a plain-text table next to it
    (same stem, ``.txt``). The ``seconds`` column is left blank unless
    ``timings`` is set, so reports of identical runs are byte-identical."""
    return write_report_rows([record_row(r, timings) for r in records], threshold, path)


def read_report(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_COLUMNS:
            raise ConfigError(f"{path} is not a grid report")
        return list(reader)


# -- config files --------------------------------------------------------------

_GRID_KEYS = {"seed", "threshold", "jobs", "panel", "out", "train_fraction", "percentile",
              "sparse_native", "axes", "imputer_params", "sampler_params", "model_params",
              "standardize", "timings"}


@dataclass
class GridConfig:
    spec: GridSpec
    panel: str | None = None
    out: str | None = None
    train_fraction: float = 0.8
    percentile: bool = True
    threshold: float = 0.7
    jobs: int = 1
    timings: bool = False


def parse_grid_config(data: dict) -> GridConfig:
    if not isinstance(data, dict):
        raise ConfigError("grid config must be a mapping")
    unknown = set(data) - _GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown grid config keys: {sorted(unknown)}")
    axes = data.get("axes")
    if not isinstance(axes, dict) or set(axes) != {"imputers", "samplers", "models"}:
        raise ConfigError("axes must list exactly imputers, samplers and models")
    for name in axes["imputers"]:
        if name not in IMPUTERS:
            raise ConfigError(f"unknown imputer {name!r}")
    for name in axes["samplers"]:
        if name not in SAMPLERS:
            raise ConfigError(f"unknown sampler {name!r}")
    spec = GridSpec(
        list(axes["imputers"]), list(axes["samplers"]), list(axes["models"]),
        bool(data.get("sparse_native", False)), int(data.get("seed", 0)),
        dict(data.get("imputer_params") or {}), dict(data.get("sampler_params") or {}),
        dict(data.get("model_params") or {}), data.get("standardize"))
    cfg = GridConfig(spec, data.get("panel"), data.get("out"),
                     float(data.get("train_fraction", 0.8)), bool(data.get("percentile", True)),
                     float(data.get("threshold", 0.7)), int(data.get("jobs", 1)),
                     bool(data.get("timings", False)))
    if not 0 < cfg.train_fraction < 1:
        raise ConfigError("train_fraction must lie in (0, 1)")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    try:
        # surface bad hyperparameters before any work
        for c in expand_grid(spec):
            make_classifier(c.kind, **c.model_params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_grid_config(path) -> GridConfig:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_grid_config(data)


def with_seed(cfg: GridConfig, seed: int) -> GridConfig:
    return replace(cfg, spec=replace(cfg.spec, seed=int(seed)))


def run_experiment(cfg: GridConfig, panel: Panel | None = None,
                   schema: FeatureSchema | None = None) -> list[RunRecord]:
    """Config file semantics end to end: load, split, expand, run."""
    if panel is None:
        if cfg.panel is None:
            raise ConfigError("no panel given")
        panel = load_panel(cfg.panel, schema or canonical_schema())
    split = prepare_split(panel, cfg.train_fraction, cfg.spec.seed, cfg.percentile)
    return run_grid(split, expand_grid(cfg.spec), cfg.jobs)
