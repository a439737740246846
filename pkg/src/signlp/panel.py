"""Unbalanced country-by-month panel: loading, validation, transforms, lags.

Storage is one long frame with columns (country, month, variable, value);
``month`` is the integer index from :mod:`signlp.months`.  Missing values are
absent rows, never sentinels.  Datasets are immutable after construction:
every operation returns a new :class:`PanelDataset`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
import pandas as pd

from .errors import (
    DuplicateKeyError,
    SchemaError,
    TransformDomainError,
    TransformStateError,
    UnknownVariableError,
)
from .months import format_month, parse_month

TRANSFORMS = ("log-times-100", "level", "diff-level", "none")
ROLES = ("outcome", "control", "global-control")

CSV_COLUMNS = ("country", "date", "variable", "value")


class SeriesKey(NamedTuple):
    country: str
    variable: str


class Observation(NamedTuple):
    key: SeriesKey
    month: int
    value: float


@dataclass(frozen=True)
class VariableDecl:
    """Declares a panel variable: its transform and its place in the model."""

    name: str
    transform: str = "none"
    role: str = "control"

    def __post_init__(self):
        if not self.name:
            raise SchemaError("variable name must be non-empty")
        if self.transform not in TRANSFORMS:
            raise SchemaError(
                f"unknown transform {self.transform!r} for {self.name!r}; "
                f"expected one of {TRANSFORMS}"
            )
        if self.role not in ROLES:
            raise SchemaError(
                f"unknown role {self.role!r} for {self.name!r}; "
                f"expected one of {ROLES}"
            )


@dataclass
class LoadReport:
    """Row accounting for one load; dropped rows are counted, never silent."""

    rows_read: int = 0
    rows_dropped: int = 0
    duplicates: int = 0

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_dropped": self.rows_dropped,
            "duplicates": self.duplicates,
        }


def load_schema(path) -> list[VariableDecl]:
    """Read a schema file: a JSON list of {name, transform, role}."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise SchemaError(f"schema file {path} must hold a JSON list")
    decls = []
    for entry in raw:
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError(f"schema entry {entry!r} lacks a name")
        decls.append(
            VariableDecl(
                name=entry["name"],
                transform=entry.get("transform", "none"),
                role=entry.get("role", "control"),
            )
        )
    return decls


def write_schema(path, decls: Sequence[VariableDecl]) -> None:
    payload = [
        {"name": d.name, "transform": d.transform, "role": d.role} for d in decls
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Immutable observation store plus variable declarations.

    ``country_windows`` records per-country inclusion intervals already
    applied (inclusive month indices); ``transformed`` records variables whose
    declared transform has been applied, so it cannot be applied twice.
    """

    frame: pd.DataFrame
    declarations: Mapping[str, VariableDecl]
    transformed: frozenset = frozenset()
    country_windows: Mapping[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        missing = set(self.frame["variable"].unique()) - set(self.declarations)
        if missing:
            raise UnknownVariableError(
                f"observations carry undeclared variables: {sorted(missing)}"
            )

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_observations(
        obs: Iterable[Observation], decls: Sequence[VariableDecl]
    ) -> "PanelDataset":
        rows = [(o.key.country, o.month, o.key.variable, o.value) for o in obs]
        frame = pd.DataFrame(rows, columns=["country", "month", "variable", "value"])
        return PanelDataset(_canonical(frame), {d.name: d for d in decls})

    # -- basic accessors ----------------------------------------------------

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def countries(self) -> list[str]:
        return sorted(self.frame["country"].unique())

    @property
    def variables(self) -> list[str]:
        return sorted(self.frame["variable"].unique())

    @property
    def date_range(self) -> tuple[int, int]:
        if self.frame.empty:
            raise SchemaError("dataset is empty; no date range")
        months = self.frame["month"]
        return int(months.min()), int(months.max())

    def observations(self) -> Iterator[Observation]:
        for row in self.frame.itertuples(index=False):
            yield Observation(SeriesKey(row.country, row.variable), int(row.month), float(row.value))

    def counts_by_country(self) -> dict[str, int]:
        counts = self.frame.groupby("country").size()
        return {c: int(n) for c, n in counts.items()}

    def pivot(self, variable: str) -> pd.DataFrame:
        """Wide view of one variable: index month, one column per country."""
        self._require_declared(variable)
        sub = self.frame[self.frame["variable"] == variable]
        return sub.pivot(index="month", columns="country", values="value")

    def global_series(self, variable: str) -> pd.Series:
        """Collapse a global-control variable to one value per month.

        The series may be stored under any single country code; if it appears
        under several, the values must agree month by month.
        """
        self._require_declared(variable)
        sub = self.frame[self.frame["variable"] == variable]
        per_month = sub.groupby("month")["value"].nunique()
        conflicts = per_month[per_month > 1]
        if not conflicts.empty:
            month = format_month(int(conflicts.index[0]))
            raise SchemaError(
                f"global control {variable!r} has conflicting values in {month}"
            )
        return sub.groupby("month")["value"].first()

    def equals(self, other: "PanelDataset") -> bool:
        return (
            _canonical(self.frame).reset_index(drop=True).equals(
                _canonical(other.frame).reset_index(drop=True)
            )
            and dict(self.declarations) == dict(other.declarations)
        )

    def _require_declared(self, variable: str) -> VariableDecl:
        decl = self.declarations.get(variable)
        if decl is None:
            raise UnknownVariableError(f"variable {variable!r} is not declared")
        return decl

    # -- sample restriction -------------------------------------------------

    def restrict(
        self,
        countries: Sequence[str] | None = None,
        start: int | None = None,
        end: int | None = None,
        windows: Mapping[str, tuple[int, int]] | None = None,
    ) -> "PanelDataset":
        """Subset the panel: country list, global month range, and per-country
        inclusion windows (e.g. dropping a country after a currency-union
        entry date).  Countries absent from ``windows`` are unrestricted."""
        frame = self.frame
        if countries is not None:
            frame = frame[frame["country"].isin(set(countries))]
        if start is not None:
            frame = frame[frame["month"] >= start]
        if end is not None:
            frame = frame[frame["month"] <= end]
        merged = dict(self.country_windows)
        if windows:
            for country, (w0, w1) in windows.items():
                keep = (frame["country"] != country) | (
                    (frame["month"] >= w0) & (frame["month"] <= w1)
                )
                frame = frame[keep]
                merged[country] = (int(w0), int(w1))
        return replace(self, frame=_canonical(frame), country_windows=merged)

    # -- serialization ------------------------------------------------------

    def to_csv(self, path) -> None:
        """Write the observation CSV contract: country,date,variable,value.

        Values are written with full round-trip precision so that
        load(serialize(ds)) is bit-identical to ds.
        """
        frame = _canonical(self.frame)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in frame.itertuples(index=False):
                writer.writerow(
                    [row.country, format_month(row.month), row.variable, repr(float(row.value))]
                )


def _canonical(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame[["country", "month", "variable", "value"]].copy()
    frame["country"] = frame["country"].astype(str)
    frame["month"] = frame["month"].astype(np.int64)
    frame["variable"] = frame["variable"].astype(str)
    frame["value"] = frame["value"].astype(np.float64)
    return frame.sort_values(["country", "variable", "month"], kind="mergesort").reset_index(
        drop=True
    )


# ---------------------------------------------------------------------------
# loading


def load_panel(path, schema: Sequence[VariableDecl]) -> tuple[PanelDataset, LoadReport]:
    """Load the panel CSV against a declared schema.

    Rows with an unparseable date, a blank/unparseable/non-finite value, or an
    empty key field are dropped and counted in the report.  A duplicated
    (country, variable, date) key raises :class:`DuplicateKeyError`; a variable
    with no declaration raises :class:`UnknownVariableError`.
    """
    decls = {d.name: d for d in schema}
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing_cols = [c for c in CSV_COLUMNS if c not in raw.columns]
    if missing_cols:
        raise SchemaError(f"panel CSV {path} lacks required columns {missing_cols}")

    report = LoadReport(rows_read=len(raw))
    month_cache: dict[str, int | None] = {}

    def month_of(text: str) -> int | None:
        if text not in month_cache:
            try:
                month_cache[text] = parse_month(text)
            except ValueError:
                month_cache[text] = None
        return month_cache[text]

    countries, monthss, variables, values = [], [], [], []
    for country, date, variable, value in zip(
        raw["country"], raw["date"], raw["variable"], raw["value"]
    ):
        month = month_of(date)
        try:
            parsed = float(value)
        except ValueError:
            parsed = math.nan
        if not country or not variable or month is None or not math.isfinite(parsed):
            report.rows_dropped += 1
            continue
        countries.append(country)
        monthss.append(month)
        variables.append(variable)
        values.append(parsed)

    frame = pd.DataFrame(
        {
            "country": pd.array(countries, dtype=str),
            "month": np.asarray(monthss, dtype=np.int64),
            "variable": pd.array(variables, dtype=str),
            "value": np.asarray(values, dtype=np.float64),
        }
    )
    dup = frame.duplicated(["country", "variable", "month"])
    if dup.any():
        first = frame[dup].iloc[0]
        raise DuplicateKeyError(
            "duplicate observation key "
            f"({first['country']}, {first['variable']}, {format_month(first['month'])})"
        )
    undeclared = sorted(set(frame["variable"].unique()) - set(decls))
    if undeclared:
        raise UnknownVariableError(
            f"panel CSV {path} carries undeclared variables: {undeclared}"
        )
    return PanelDataset(_canonical(frame), decls), report


# ---------------------------------------------------------------------------
# transforms


def apply_transform(ds: PanelDataset, variable: str) -> PanelDataset:
    """Apply a variable's declared transform, once.

    log-times-100 maps v to 100*ln(v) and requires strictly positive values;
    diff-level replaces each observation by its change from the previous
    observation of the same country (the first per country is dropped);
    level/none leave values untouched.  A second application raises
    :class:`TransformStateError`.
    """
    decl = ds._require_declared(variable)
    if variable in ds.transformed:
        raise TransformStateError(f"transform already applied to {variable!r}")
    frame = ds.frame
    mask = frame["variable"] == variable
    sub = frame[mask]

    if decl.transform == "log-times-100":
        bad = sub[sub["value"] <= 0.0]
        if not bad.empty:
            first = bad.iloc[0]
            raise TransformDomainError(
                f"log-times-100 on {variable!r} needs positive values; "
                f"got {first['value']} at ({first['country']}, "
                f"{format_month(first['month'])})"
            )
        new_sub = sub.assign(value=100.0 * np.log(sub["value"].to_numpy()))
    elif decl.transform == "diff-level":
        sub = sub.sort_values(["country", "month"], kind="mergesort")
        diffed = sub.assign(value=sub.groupby("country")["value"].diff())
        new_sub = diffed.dropna(subset=["value"])
    else:  # level / none
        new_sub = sub

    frame = pd.concat([frame[~mask], new_sub], ignore_index=True)
    return replace(
        ds, frame=_canonical(frame), transformed=ds.transformed | {variable}
    )


def apply_declared_transforms(ds: PanelDataset) -> PanelDataset:
    """Apply every declared transform that has not been applied yet."""
    for name in ds.declarations:
        if name not in ds.transformed and name in set(ds.frame["variable"].unique()):
            ds = apply_transform(ds, name)
    return ds


# ---------------------------------------------------------------------------
# lagged controls


def lag_column_name(variable: str, lag: int) -> str:
    return f"{variable}.l{lag}"


def build_lagged_controls(
    ds: PanelDataset, variables: Sequence[str], lags: int
) -> pd.DataFrame:
    """Build the aligned lag block for the listed control variables.

    Returns a frame indexed by (country, month) over the dataset's full
    country-by-month grid, with one column per (variable, lag) pair; lag k of
    variable x at month t is x at t-k.  Global controls are replicated across
    countries.  Rows with any missing lag carry NaN there: a row is available
    for estimation only if all its lags are present.
    """
    if lags < 1:
        raise ValueError("lags must be >= 1")
    for v in variables:
        decl = ds._require_declared(v)
        if decl.role not in ("control", "global-control"):
            raise SchemaError(
                f"{v!r} is declared {decl.role!r}; controls must be "
                "'control' or 'global-control'"
            )
    m0, m1 = ds.date_range
    grid_months = np.arange(m0, m1 + 1)
    countries = ds.countries
    index = pd.MultiIndex.from_product(
        [countries, grid_months], names=["country", "month"]
    )
    block = pd.DataFrame(index=index)
    for v in variables:
        decl = ds.declarations[v]
        if decl.role == "global-control":
            base = ds.global_series(v).reindex(grid_months)
            for k in range(1, lags + 1):
                shifted = base.shift(k)
                block[lag_column_name(v, k)] = np.tile(
                    shifted.to_numpy(), len(countries)
                )
        else:
            wide = ds.pivot(v).reindex(index=grid_months, columns=countries)
            for k in range(1, lags + 1):
                shifted = wide.shift(k)
                # column-major: all months for country 0, then country 1, ...
                block[lag_column_name(v, k)] = shifted.to_numpy().T.reshape(-1)
    return block
