from __future__ import annotations

from dataclasses import dataclass

from ..schema import FeatureSchema


@dataclass(frozen=True)
class ImputationPlan:
    """Column blocks imputed together: one block per feature category.

    Year indicators are appended to every block as predictors and are
    never imputation targets.
    """

    blocks: tuple[tuple[str, tuple[int, ...]], ...]
    use_year_onehots: bool = True

    def __post_init__(self):
        seen = [j for _, cols in self.blocks for j in cols]
        if len(seen) != len(set(seen)):
            raise ValueError("a feature appears in more than one block")

    @classmethod
    def from_schema(cls, schema: FeatureSchema, use_year_onehots: bool = True) -> "ImputationPlan":
        return cls(
            tuple((cat, tuple(cols)) for cat, cols in schema.category_indices().items()),
            use_year_onehots,
        )

    def covers(self, n_features: int) -> bool:
        return sorted(j for _, cols in self.blocks for j in cols) == list(range(n_features))
