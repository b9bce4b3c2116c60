"""Company-year panels, campaign events, labeling and train/test splits."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .schema import FeatureSchema

KEY_COLUMNS = ("company_id", "year", "industry_l2", "industry_l3")
LABEL_COLUMN = "label"


class SchemaError(ValueError):
    """CSV header does not match the feature schema."""


class PanelParseError(ValueError):
    """A CSV row could not be parsed."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Panel:
    """Company-year instance table.

    ``values`` is an ``(n_rows, n_features)`` float array with NaN marking
    missing cells. ``label`` is ``None`` until labels are assigned.
    Arrays are copied and made read-only on construction.
    """

    schema: FeatureSchema
    company_id: np.ndarray
    year: np.ndarray
    industry_l2: np.ndarray
    industry_l3: np.ndarray
    values: np.ndarray
    label: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.company_id)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (n, len(self.schema)):
            raise ValueError(
                f"values must have shape ({n}, {len(self.schema)}), got {values.shape}"
            )
        for name in ("year", "industry_l2", "industry_l3"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match row count")
        object.__setattr__(self, "company_id", _frozen(np.asarray(self.company_id, dtype=object)))
        object.__setattr__(self, "year", _frozen(np.asarray(self.year, dtype=np.int64)))
        object.__setattr__(self, "industry_l2", _frozen(np.asarray(self.industry_l2, dtype=object)))
        object.__setattr__(self, "industry_l3", _frozen(np.asarray(self.industry_l3, dtype=object)))
        object.__setattr__(self, "values", _frozen(values))
        if self.label is not None:
            label = np.asarray(self.label)
            if label.shape != (n,):
                raise ValueError("label length does not match row count")
            if not np.isin(label, (0, 1)).all():
                raise ValueError("labels must be 0 or 1")
            object.__setattr__(self, "label", _frozen(label.astype(np.int8)))

    def __len__(self) -> int:
        return len(self.company_id)

    @property
    def row_ids(self) -> list[str]:
        return [f"{c}:{y}" for c, y in zip(self.company_id, self.year)]

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())

    def take(self, idx) -> "Panel":
        idx = np.asarray(idx)
        return Panel(
            self.schema,
            self.company_id[idx],
            self.year[idx],
            self.industry_l2[idx],
            self.industry_l3[idx],
            self.values[idx],
            None if self.label is None else self.label[idx],
            dict(self.meta),
        )

    def with_values(self, values: np.ndarray, **meta) -> "Panel":
        return replace(self, values=values, meta={**self.meta, **meta})

    def with_label(self, label: np.ndarray) -> "Panel":
        return replace(self, label=label)

    def equals(self, other: "Panel") -> bool:
        """Value equality with NaN == NaN; ignores ``meta``."""
        if self.schema != other.schema or len(self) != len(other):
            return False
        same_label = (self.label is None and other.label is None) or (
            self.label is not None
            and other.label is not None
            and np.array_equal(self.label, other.label)
        )
        return (
            same_label
            and np.array_equal(self.company_id, other.company_id)
            and np.array_equal(self.year, other.year)
            and np.array_equal(self.industry_l2, other.industry_l2)
            and np.array_equal(self.industry_l3, other.industry_l3)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def concat_panels(a: Panel, b: Panel) -> Panel:
    if a.schema != b.schema:
        raise ValueError("cannot concatenate panels with different schemas")
    if (a.label is None) != (b.label is None):
        raise ValueError("cannot concatenate labeled and unlabeled panels")
    return Panel(
        a.schema,
        np.concatenate([a.company_id, b.company_id]),
        np.concatenate([a.year, b.year]),
        np.concatenate([a.industry_l2, b.industry_l2]),
        np.concatenate([a.industry_l3, b.industry_l3]),
        np.vstack([a.values, b.values]),
        None if a.label is None else np.concatenate([a.label, b.label]),
        {**a.meta, **b.meta},
    )


def _check_unique_keys(company_id, year) -> None:
    seen = set()
    for c, y in zip(company_id, year):
        if (c, y) in seen:
            raise ValueError(f"duplicate (company_id, year) row: ({c}, {y})")
        seen.add((c, y))


# -- CSV ---------------------------------------------------------------------

def load_panel(path: str | Path, schema: FeatureSchema) -> Panel:
    """Read a panel CSV.

    The header must contain the key columns, every schema feature, and
    optionally ``label``. Empty cells in feature columns are missing
    values; binary features must be ``0`` or ``1``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        expected = set(KEY_COLUMNS) | set(schema.names)
        unknown = [h for h in header if h not in expected and h != LABEL_COLUMN]
        if unknown:
            raise SchemaError(f"unknown column(s): {', '.join(unknown)}")
        missing = [c for c in (*KEY_COLUMNS, *schema.names) if c not in header]
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(missing)}")
        if len(set(header)) != len(header):
            raise SchemaError("duplicate column names in header")

        pos = {h: i for i, h in enumerate(header)}
        feat_pos = [pos[n] for n in schema.names]
        binary = set(schema.binary_indices())
        has_label = LABEL_COLUMN in pos

        company, years, l2, l3, rows, labels = [], [], [], [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise PanelParseError(
                    f"expected {len(header)} columns, found {len(rec)}", lineno
                )
            cid = rec[pos["company_id"]].strip()
            if not cid:
                raise PanelParseError("empty company_id", lineno)
            try:
                year = int(rec[pos["year"]])
            except ValueError:
                raise PanelParseError(f"bad year {rec[pos['year']]!r}", lineno) from None
            ind2 = rec[pos["industry_l2"]].strip()
            ind3 = rec[pos["industry_l3"]].strip()
            if not ind2 or not ind3:
                raise PanelParseError("empty industry code", lineno)
            vals = []
            for j, p in enumerate(feat_pos):
                cell = rec[p].strip()
                if cell == "":
                    vals.append(math.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise PanelParseError(
                        f"non-numeric value {cell!r} in column {schema.names[j]}", lineno
                    ) from None
                if j in binary and v not in (0.0, 1.0):
                    raise PanelParseError(
                        f"binary column {schema.names[j]} holds {cell!r}", lineno
                    )
                vals.append(v)
            if has_label:
                cell = rec[pos[LABEL_COLUMN]].strip()
                if cell not in ("0", "1"):
                    raise PanelParseError(f"label must be 0 or 1, got {cell!r}", lineno)
                labels.append(int(cell))
            company.append(cid)
            years.append(year)
            l2.append(ind2)
            l3.append(ind3)
            rows.append(vals)

    _check_unique_keys(company, years)
    values = np.array(rows, dtype=float).reshape(len(rows), len(schema))
    return Panel(
        schema, np.array(company, dtype=object), np.array(years, dtype=np.int64),
        np.array(l2, dtype=object), np.array(l3, dtype=object), values,
        np.array(labels, dtype=np.int8) if has_label else None,
    )


def _fmt(v: float, binary: bool) -> str:
    if math.isnan(v):
        return ""
    if binary:
        return str(int(v))
    return repr(float(v))


def write_panel(panel: Panel, path: str | Path) -> None:
    """Write ``panel`` in the format read by :func:`load_panel` (lossless)."""
    binary = set(panel.schema.binary_indices())
    header = [*KEY_COLUMNS, *panel.schema.names]
    if panel.label is not None:
        header.append(LABEL_COLUMN)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(panel)):
            row = [panel.company_id[i], int(panel.year[i]),
                   panel.industry_l2[i], panel.industry_l3[i]]
            row += [_fmt(v, j in binary) for j, v in enumerate(panel.values[i])]
            if panel.label is not None:
                row.append(int(panel.label[i]))
            w.writerow(row)


# -- campaigns and labels ------------------------------------------------------

@dataclass(frozen=True)
class CampaignEvent:
    company_id: str
    start: dt.date
    end: dt.date | None = None

    def __post_init__(self):
        if self.end is not None and self.end < self.start:
            raise ValueError(
                f"campaign for {self.company_id} ends before it starts "
                f"({self.end} < {self.start})"
            )


def load_campaigns(path: str | Path) -> list[CampaignEvent]:
    """Read a campaign CSV with columns ``company_id,start_date[,end_date]``."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or [])
        if not {"company_id", "start_date"} <= cols:
            raise SchemaError("campaign CSV needs company_id and start_date columns")
        extra = cols - {"company_id", "start_date", "end_date"}
        if extra:
            raise SchemaError(f"unknown column(s): {', '.join(sorted(extra))}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                start = dt.date.fromisoformat(rec["start_date"].strip())
                end_s = (rec.get("end_date") or "").strip()
                end = dt.date.fromisoformat(end_s) if end_s else None
                out.append(CampaignEvent(rec["company_id"].strip(), start, end))
            except (ValueError, AttributeError) as exc:
                raise PanelParseError(str(exc), lineno) from None
    return out


def add_months(d: dt.date, months: int) -> dt.date:
    """Calendar month arithmetic, clamping to the last valid day."""
    m = d.month - 1 + months
    year, month = d.year + m // 12, m % 12 + 1
    for day in range(d.day, 27, -1):
        try:
            return dt.date(year, month, day)
        except ValueError:
            continue
    return dt.date(year, month, min(d.day, 28))


def assign_labels(
    panel: Panel,
    campaigns: Sequence[CampaignEvent],
    snapshot_dates: Mapping[tuple[str, int], dt.date] | None = None,
    window_months: int = 12,
) -> Panel:
    """Label each row by whether a campaign starts within the forward window.

    A row is positive iff a campaign for its company starts in
    ``(snapshot, snapshot + window_months]``. Rows whose snapshot lies in
    an active campaign interval ``[start, end]`` are dropped. Snapshot
    dates default to December 31 of the row's year; a campaign without an
    end date runs through the end of the last panel year.
    """
    if len(panel) == 0:
        return panel.with_label(np.zeros(0, dtype=np.int8))
    snapshot_dates = snapshot_dates or {}
    last_day = dt.date(int(panel.year.max()), 12, 31)
    companies = set(panel.company_id.tolist())

    by_company: dict[str, list[CampaignEvent]] = {}
    unknown = 0
    for c in campaigns:
        if c.company_id not in companies:
            unknown += 1
            continue
        by_company.setdefault(c.company_id, []).append(c)

    keep, labels = [], []
    for i, (cid, year) in enumerate(zip(panel.company_id, panel.year)):
        snap = snapshot_dates.get((cid, int(year)), dt.date(int(year), 12, 31))
        horizon = add_months(snap, window_months)
        active = False
        positive = False
        for c in by_company.get(cid, ()):
            end = c.end if c.end is not None else max(last_day, c.start)
            if c.start <= snap <= end:
                active = True
                break
            if snap < c.start <= horizon:
                positive = True
        if not active:
            keep.append(i)
            labels.append(int(positive))

    out = panel.take(np.array(keep, dtype=np.int64)).with_label(np.array(labels, dtype=np.int8))
    out.meta.update(
        unknown_campaign_companies=unknown,
        excluded_active_rows=len(panel) - len(keep),
    )
    return out


def load_snapshot_dates(path: str | Path) -> dict[tuple[str, int], dt.date]:
    """Read optional ``company_id,year,snapshot_date`` overrides."""
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not {"company_id", "year", "snapshot_date"} <= set(reader.fieldnames or []):
            raise SchemaError("snapshot CSV needs company_id, year, snapshot_date")
        for lineno, rec in enumerate(reader, start=2):
            try:
                out[(rec["company_id"].strip(), int(rec["year"]))] = dt.date.fromisoformat(
                    rec["snapshot_date"].strip()
                )
            except ValueError as exc:
                raise PanelParseError(str(exc), lineno) from None
    return out


# -- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    train: Panel
    test: Panel
    seed: int


def split_indices(label: np.ndarray, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    label = np.asarray(label)
    classes = np.unique(label)
    if len(classes) < 2:
        raise ValueError("stratified split needs both classes present")
    rng = np.random.default_rng(seed)
    train = []
    for c in classes:
        idx = np.flatnonzero(label == c)
        idx = idx[rng.permutation(len(idx))]
        train.append(idx[: int(round(train_fraction * len(idx)))])
    train_idx = np.sort(np.concatenate(train))
    test_mask = np.ones(len(label), dtype=bool)
    test_mask[train_idx] = False
    return train_idx, np.flatnonzero(test_mask)


def stratified_split(panel: Panel, train_fraction: float = 0.8, seed: int = 0) -> Split:
    """Label-stratified random split; row order within each side is preserved."""
    if panel.label is None:
        raise ValueError("panel must be labeled before splitting")
    train_idx, test_idx = split_indices(panel.label, train_fraction, seed)
    return Split(panel.take(train_idx), panel.take(test_idx), seed)
