"""Screening company-year panels for likely activist-investor targets.

Pipeline stages: peer-percentile transform, imputation, minority
oversampling, classification, AUC-ROC evaluation and Shapley-value
explanations, plus a grid runner that sweeps the stage choices.
"""

from .data import (CampaignEvent, Panel, Split, assign_labels, load_campaigns, load_panel,
                   stratified_split, write_panel)
from .experiment import GridSpec, PipelineConfig, RunRecord, expand_grid, run_config, run_grid, write_report
from .metrics import auc_roc, roc_curve
from .schema import FeatureSchema, FeatureSpec, canonical_schema
from .synthgen import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "CampaignEvent", "Panel", "Split", "assign_labels", "load_campaigns", "load_panel",
    "stratified_split", "write_panel", "GridSpec", "PipelineConfig", "RunRecord", "expand_grid",
    "run_config", "run_grid", "write_report", "auc_roc", "roc_curve", "FeatureSchema",
    "FeatureSpec", "canonical_schema", "SynthSpec", "generate", "__version__",
]
