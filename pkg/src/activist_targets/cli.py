"""Command-line entry point: one subcommand per pipeline stage.

Exit status is 0 on success, 1 when arguments or inputs fail validation
(nothing is written in that case) and 2 when a stage fails at run time.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np
import yaml

from . import experiment as ex
from .data import (assign_labels, load_campaigns, load_panel, load_snapshot_dates, write_panel)
from .explain import explain, export_explanations, sample_background
from .impute import IMPUTERS, ImputerKind, impute_dispatch
from .metrics import auc_roc, roc_curve
from .models import MODEL_CLASSES, TrainedModel, train_on_panel
from .oversample import SAMPLERS, SamplerKind, oversample
from .schema import canonical_schema
from .synthgen import SynthSpec, generate, write_metadata

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@contextmanager
def validating():
    """Turn any failure while checking inputs into a validation error."""
    try:
        yield
    except ValidationError:
        raise
    except (OSError, ValueError, TypeError, KeyError, yaml.YAMLError) as exc:
        raise ValidationError(str(exc)) from exc


def _input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"input file not found: {path}")
    return p


def _output(path: str) -> Path:
    p = Path(path)
    if not p.parent.exists():
        raise ValidationError(f"output directory does not exist: {p.parent}")
    if p.is_dir():
        raise ValidationError(f"output path is a directory: {path}")
    return p


def _out_dir(path: str) -> Path:
    p = Path(path)
    if p.exists() and not p.is_dir():
        raise ValidationError(f"not a directory: {path}")
    if not p.parent.exists():
        raise ValidationError(f"parent directory does not exist: {p.parent}")
    return p


def _yaml(path: str | None) -> dict:
    if path is None:
        return {}
    data = yaml.safe_load(_input(path).read_text(encoding="utf-8"))
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError(f"{path} must hold a mapping")
    return data


def _panel(path: str, labeled: bool = False):
    panel = load_panel(_input(path), canonical_schema())
    if labeled and panel.label is None:
        raise ValidationError(f"{path} has no label column")
    return panel


# -- commands ------------------------------------------------------------------

def cmd_synth(args) -> None:
    with validating():
        params = _yaml(args.config)
        known = {f.name for f in fields(SynthSpec)}
        unknown = set(params) - known
        if unknown:
            raise ValidationError(f"unknown synth keys: {sorted(unknown)}")
        for key in ("n_rows", "positive_rate", "missing_rate"):
            if getattr(args, key) is not None:
                params[key] = getattr(args, key)
        if args.mechanism is not None:
            params["missing_mechanism"] = args.mechanism
        if args.null:
            params["signal"] = {}
        params["seed"] = args.seed
        spec = SynthSpec(**params)
        out = _output(args.out)
        meta = _output(args.metadata) if args.metadata else None
    panel, truth = generate(spec)
    write_panel(panel, out)
    if meta is not None:
        write_metadata(truth, panel.schema, meta)
    print(f"wrote {len(panel)} rows ({int(panel.label.sum())} positive) to {out}")


def cmd_label(args) -> None:
    with validating():
        panel = _panel(args.panel)
        campaigns = load_campaigns(_input(args.campaigns))
        snaps = load_snapshot_dates(_input(args.snapshots)) if args.snapshots else None
        if args.window_months < 1:
            raise ValidationError("--window-months must be >= 1")
        out = _output(args.out)
    labeled = assign_labels(panel, campaigns, snaps, args.window_months)
    write_panel(labeled, out)
    print(f"labeled {len(labeled)} rows, {labeled.meta['excluded_active_rows']} excluded as "
          f"in-campaign, {labeled.meta['unknown_campaign_companies']} campaigns for unknown companies")


def cmd_split(args) -> None:
    with validating():
        panel = _panel(args.panel, labeled=True)
        if not 0 < args.train_fraction < 1:
            raise ValidationError("--train-fraction must lie in (0, 1)")
        out = _out_dir(args.out)
    split = ex.prepare_split(panel, args.train_fraction, args.seed, not args.no_percentile)
    out.mkdir(exist_ok=True)
    write_panel(split.train, out / "train.csv")
    write_panel(split.test, out / "test.csv")
    print(f"train {len(split.train)} rows, test {len(split.test)} rows in {out}")


def cmd_impute(args) -> None:
    with validating():
        train = _panel(args.train)
        test = _panel(args.test)
        params = _yaml(args.config)
        if args.k is not None:
            params["k"] = args.k
        kind = ImputerKind.from_dict(args.method, params)
        out = _out_dir(args.out)
    seed = ex.derive_seed(args.seed, "impute", json.dumps(asdict(kind), sort_keys=True))
    tr, te = impute_dispatch(train, test, kind, seed=seed)
    out.mkdir(exist_ok=True)
    write_panel(tr, out / "train.csv")
    write_panel(te, out / "test.csv")
    print(f"imputed with {kind.name}: {train.n_missing} training cells filled")


def cmd_oversample(args) -> None:
    with validating():
        train = _panel(args.train, labeled=True)
        params = _yaml(args.config)
        for key in ("k", "m", "beta"):
            if getattr(args, key) is not None:
                params[key] = getattr(args, key)
        if args.ratio is not None:
            params["target_ratio"] = args.ratio
        kind = SamplerKind(args.method, **params)
        if kind.name != "none" and kind.name != "random" and np.isnan(train.values).any():
            raise ValidationError(f"{kind.name} needs an imputed panel")
        out = _output(args.out)
    result = oversample(train, kind, args.seed)
    write_panel(result, out)
    for w in result.meta.get("sampler_warnings", ()):
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(result) - len(train)} synthetic rows added")


def cmd_train(args) -> None:
    with validating():
        train = _panel(args.train, labeled=True)
        params = _yaml(args.config)
        MODEL_CLASSES[args.model](**params)  # rejects unknown hyperparameters early
        if args.model != "gbdt" and np.isnan(train.values).any():
            raise ValidationError(f"{args.model} needs an imputed panel")
        out = _output(args.out)
    model = train_on_panel(args.model, train, params, args.seed)
    model.save(out)
    print(f"saved {args.model} model to {out} (sha256 {model.checksum()[:12]})")


def cmd_evaluate(args) -> None:
    with validating():
        model = TrainedModel.load(_input(args.model))
        test = _panel(args.test, labeled=True)
        out = _output(args.out) if args.out else None
        plot = _output(args.plot) if args.plot else None
    p = model.predict_proba(test.values)
    auc = auc_roc(p, test.label)
    curve = roc_curve(p, test.label)
    if out is not None:
        curve.to_csv(out)
    if plot is not None:
        from .plotting import plot_roc
        plot_roc(curve, plot)
    print(f"auc_roc {auc:.6f}")


def cmd_explain(args) -> None:
    with validating():
        model = TrainedModel.load(_input(args.model))
        panel = _panel(args.panel)
        background = _panel(args.background)
        if np.isnan(panel.values).any() and model.kind != "gbdt":
            raise ValidationError("panel has missing values; impute it first")
        if args.limit is not None and args.limit < 1:
            raise ValidationError("--limit must be >= 1")
        out = _out_dir(args.out)
    rows = np.arange(len(panel)) if args.limit is None else np.arange(min(args.limit, len(panel)))
    X = panel.values[rows]
    bg = sample_background(background.values, args.background_size, args.seed)
    summary = explain(model, X, bg, args.method, args.samples, args.seed)
    coef = None
    if model.kind == "logistic":
        coef = model.classifier.coef_
    out.mkdir(exist_ok=True)
    ids = [panel.row_ids[i] for i in rows]
    export_explanations(summary, X, out, ids, coef)
    if args.plots:
        from .plotting import plot_beeswarm, plot_shap_bar
        plot_shap_bar(summary.feature_names, summary.mean_abs, out / "shap_bar.png")
        plot_beeswarm(summary.feature_names, summary.attributions, X, out / "shap_beeswarm.png")
    top = [summary.feature_names[j] for j in summary.feature_order[:5]]
    print(f"{summary.method} attributions for {len(rows)} rows; top features: {', '.join(top)}")


def cmd_grid(args) -> None:
    with validating():
        cfg = ex.load_grid_config(_input(args.config))
        if args.seed is not None:
            cfg = ex.with_seed(cfg, args.seed)
        if args.jobs is not None:
            cfg.jobs = args.jobs
        if args.threshold is not None:
            cfg.threshold = args.threshold
        if args.panel is not None:
            cfg.panel = args.panel
        if args.timings:
            cfg.timings = True
        out = args.out or cfg.out
        if out is None:
            raise ValidationError("no report path: pass --out or set 'out' in the config")
        out = _output(out)
        plot = _output(args.plot) if args.plot else None
        if cfg.panel is None:
            raise ValidationError("no panel: pass --panel or set 'panel' in the config")
        if cfg.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        panel = _panel(cfg.panel, labeled=True)
        configs = ex.expand_grid(cfg.spec)
    split = ex.prepare_split(panel, cfg.train_fraction, cfg.spec.seed, cfg.percentile)
    records = ex.run_grid(split, configs, cfg.jobs)
    csv_path, table_path = ex.write_report(records, cfg.threshold, out, cfg.timings)
    if plot is not None:
        from .plotting import plot_report
        plot_report(ex.read_report(csv_path), plot)
    failed = sum(not r.ok for r in records)
    print(f"{len(records)} configurations run, {failed} failed; report in {csv_path} and {table_path}")
    if failed == len(records):
        raise RuntimeError("every configuration failed")


def cmd_report(args) -> None:
    with validating():
        rows = ex.read_report(_input(args.input))
        out = _output(args.out)
        plot = _output(args.plot) if args.plot else None
        if not rows:
            raise ValidationError(f"{args.input} has no rows")
    csv_path, table_path = ex.write_report_rows(rows, args.threshold, out)
    if plot is not None:
        from .plotting import plot_report
        plot_report(ex.read_report(csv_path), plot)
    print(table_path.read_text(encoding="utf-8"), end="")


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="activist-targets",
                     description="Activist-target screening pipeline: synthesize or load panels, "
                                 "label, split, impute, oversample, train, evaluate, explain, sweep.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "Generate a labeled synthetic panel with planted signal.")
    p.add_argument("--out", required=True, help="panel CSV to write")
    p.add_argument("--metadata", help="optional JSON sidecar with the ground truth")
    p.add_argument("--config", help="YAML file of generator settings")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--n-rows", dest="n_rows", type=int, help="number of company-year rows")
    p.add_argument("--positive-rate", dest="positive_rate", type=float, help="target positive rate")
    p.add_argument("--missing-rate", dest="missing_rate", type=float,
                   help="missing rate applied to every category")
    p.add_argument("--mechanism", choices=("MCAR", "MAR"), help="missingness mechanism")
    p.add_argument("--null", action="store_true", help="zero every effect size")

    p = add("label", cmd_label, "Label panel rows from campaign events.")
    p.add_argument("--panel", required=True, help="panel CSV")
    p.add_argument("--campaigns", required=True, help="campaign CSV (company_id,start_date,end_date)")
    p.add_argument("--snapshots", help="optional company_id,year,snapshot_date CSV")
    p.add_argument("--window-months", dest="window_months", type=int, default=12,
                   help="forward labeling window (default 12)")
    p.add_argument("--out", required=True, help="labeled panel CSV to write")

    p = add("split", cmd_split, "Peer-percentile transform, then a stratified train/test split.")
    p.add_argument("--panel", required=True, help="labeled panel CSV")
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=0.8,
                   help="training share (default 0.8)")
    p.add_argument("--no-percentile", dest="no_percentile", action="store_true",
                   help="skip the peer-percentile transform")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="directory for train.csv and test.csv")

    p = add("impute", cmd_impute, "Impute the training panel; median-fill the test panel from training.")
    p.add_argument("--train", required=True, help="training panel CSV")
    p.add_argument("--test", required=True, help="test panel CSV")
    p.add_argument("--method", required=True, choices=IMPUTERS, help="imputation engine")
    p.add_argument("--k", type=int, help="neighbours for knn")
    p.add_argument("--config", help="YAML file of imputer settings")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="directory for imputed train.csv and test.csv")

    p = add("oversample", cmd_oversample, "Oversample the minority class of a training panel.")
    p.add_argument("--train", required=True, help="imputed training panel CSV")
    p.add_argument("--method", required=True, choices=SAMPLERS, help="oversampler")
    p.add_argument("--k", type=int, help="minority neighbours")
    p.add_argument("--m", type=int, help="neighbours for borderline danger test")
    p.add_argument("--beta", type=float, help="adasyn balance level")
    p.add_argument("--ratio", type=float, help="target minority/majority ratio")
    p.add_argument("--config", help="YAML file of sampler settings")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="panel CSV to write")

    p = add("train", cmd_train, "Fit a classifier and save it as a JSON model artifact.")
    p.add_argument("--train", required=True, help="training panel CSV")
    p.add_argument("--model", required=True, choices=sorted(MODEL_CLASSES), help="model family")
    p.add_argument("--config", help="YAML file of hyperparameters")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="model file to write")

    p = add("evaluate", cmd_evaluate, "Score a test panel: print AUC-ROC, optionally export the ROC curve.")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--test", required=True, help="labeled, imputed test panel CSV")
    p.add_argument("--out", help="ROC curve CSV (fpr,tpr,threshold)")
    p.add_argument("--plot", help="ROC figure (PNG/PDF/SVG)")

    p = add("explain", cmd_explain, "SHAP attributions in log-odds space with CSV exports.")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--panel", required=True, help="panel CSV with the rows to explain")
    p.add_argument("--background", required=True, help="panel CSV the background is drawn from")
    p.add_argument("--background-size", dest="background_size", type=int, default=100,
                   help="background rows (default 100)")
    p.add_argument("--method", choices=("auto", "exact", "kernel", "linear"), default="auto",
                   help="attribution method (default auto)")
    p.add_argument("--samples", type=int, default=2048, help="kernel coalition budget (default 2048)")
    p.add_argument("--limit", type=int, help="explain only the first N rows")
    p.add_argument("--plots", action="store_true", help="also render bar and beeswarm PNGs")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="directory for the CSV exports")

    p = add("grid", cmd_grid, "Run the imputation x oversampling x model grid from a YAML config.")
    p.add_argument("--config", required=True, help="grid YAML file")
    p.add_argument("--panel", help="labeled panel CSV (overrides the config)")
    p.add_argument("--out", help="report CSV; a .txt table is written next to it")
    p.add_argument("--seed", type=int, help="global seed (overrides the config)")
    p.add_argument("--jobs", type=int, help="worker processes (overrides the config)")
    p.add_argument("--threshold", type=float, help="minimum test AUC to report (overrides the config)")
    p.add_argument("--timings", action="store_true", help="fill the seconds column")
    p.add_argument("--plot", help="AUC bar figure for the reported cells")

    p = add("report", cmd_report, "Re-rank an existing grid report at a new threshold.")
    p.add_argument("--input", required=True, help="report CSV from the grid command")
    p.add_argument("--threshold", type=float, default=0.7, help="minimum test AUC (default 0.7)")
    p.add_argument("--out", required=True, help="report CSV to write; a .txt table goes next to it")
    p.add_argument("--plot", help="AUC bar figure")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # runtime failure of a stage
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
