"""Feature catalog for the company-year panel.

The canonical schema has 46 ratio-ready variables in six categories.
Valuation and operation variables are converted to industry-year
percentiles before modeling; the rest are used as-is.
"""

from __future__ import annotations

from dataclasses import dataclass

CATEGORIES = ("governance", "ownership", "technical", "return", "valuation", "operation")
PERCENTILE_CATEGORIES = frozenset({"valuation", "operation"})
KINDS = ("continuous", "binary")


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    category: str
    percentile_transformed: bool
    kind: str = "continuous"

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r} for {self.name}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r} for {self.name}")
        if self.percentile_transformed != (self.category in PERCENTILE_CATEGORIES):
            raise ValueError(
                f"{self.name}: percentile_transformed must be set exactly for "
                "valuation and operation features"
            )


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not names:
            raise ValueError("schema has no features")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)

    def category_indices(self) -> dict[str, list[int]]:
        """Feature positions per category, in catalog order; empty categories omitted."""
        out: dict[str, list[int]] = {}
        for i, f in enumerate(self.features):
            out.setdefault(f.category, []).append(i)
        return out

    def percentile_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.percentile_transformed]

    def binary_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.kind == "binary"]

    @classmethod
    def from_names(cls, spec: list[tuple[str, str, str]]) -> "FeatureSchema":
        """Build a schema from ``(name, category, kind)`` triples."""
        return cls(tuple(
            FeatureSpec(n, c, c in PERCENTILE_CATEGORIES, k) for n, c, k in spec
        ))


_CANONICAL = [
    # governance
    ("dual_class_voting", "governance", "binary"),
    ("ceo_tenure", "governance", "continuous"),
    ("ceo_female", "governance", "binary"),
    ("board_size", "governance", "continuous"),
    ("classified_board", "governance", "binary"),
    ("poison_pill", "governance", "binary"),
    ("buyback_yield", "governance", "continuous"),
    ("dividend_payout_ratio", "governance", "continuous"),
    ("fcf_to_exec_comp", "governance", "continuous"),
    ("fcf_to_board_comp", "governance", "continuous"),
    # ownership
    ("free_float_pct", "ownership", "continuous"),
    ("institutional_ownership_pct", "ownership", "continuous"),
    ("insider_ownership_pct", "ownership", "continuous"),
    # technical
    ("volume_30d_to_shares_out", "technical", "continuous"),
    ("rsi_14d", "technical", "continuous"),
    ("rsi_30d", "technical", "continuous"),
    ("volatility_30d", "technical", "continuous"),
    ("volatility_90d", "technical", "continuous"),
    ("volatility_180d", "technical", "continuous"),
    # return
    ("total_return_5y", "return", "continuous"),
    ("total_return_4y", "return", "continuous"),
    ("total_return_3y", "return", "continuous"),
    ("total_return_2y", "return", "continuous"),
    ("total_return_1y", "return", "continuous"),
    ("total_return_6m", "return", "continuous"),
    ("total_return_3m", "return", "continuous"),
    # valuation
    ("roe", "valuation", "continuous"),
    ("roic", "valuation", "continuous"),
    ("assets_to_equity", "valuation", "continuous"),
    ("eps", "valuation", "continuous"),
    ("pe_ratio", "valuation", "continuous"),
    ("ev_to_sales", "valuation", "continuous"),
    ("tobins_q", "valuation", "continuous"),
    ("pb_ratio", "valuation", "continuous"),
    ("ev_to_ebitda", "valuation", "continuous"),
    ("ev_to_assets", "valuation", "continuous"),
    # operation
    ("fcf_to_capex", "operation", "continuous"),
    ("current_ratio", "operation", "continuous"),
    ("ebitda_margin", "operation", "continuous"),
    ("sales_to_assets", "operation", "continuous"),
    ("employee_growth", "operation", "continuous"),
    ("fcf_yield", "operation", "continuous"),
    ("sales_growth", "operation", "continuous"),
    ("interest_coverage", "operation", "continuous"),
    ("cash_conversion_cycle", "operation", "continuous"),
    ("net_debt_to_ebitda", "operation", "continuous"),
]


def canonical_schema() -> FeatureSchema:
    """The 46-variable catalog (10/3/6/7/10/10 across the six categories)."""
    return FeatureSchema.from_names(_CANONICAL)
