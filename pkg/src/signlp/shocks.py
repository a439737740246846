"""High-frequency shock identification.

Event-level surprises (interest-rate futures plus a stock index, measured in
narrow windows around policy announcements) are turned into a monthly policy
shock series in three steps: a first principal component compresses the rate
surprises to one factor, a rotation of the Cholesky factor of the
(factor, stock) covariance separates the policy shock from the central-bank
information component using sign restrictions, and event-level shocks are
summed within calendar months.  The simpler classification rule that splits
events by the joint sign of rate and stock surprises is also provided.

Sign conventions: a positive policy shock raises rates and lowers stock
prices (impact column signs (+, -)); the information shock moves both up
(+, +).
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateCovarianceError,
    DegenerateInputError,
    IdentificationFailureError,
    SchemaError,
)
from .months import format_month, month_of_date, parse_day, parse_month

DEFAULT_GRID_STEP = np.pi / 1800.0  # 0.1 degrees
MAX_GRID_STEP = np.pi / 180.0

METHODS = ("median-rotation", "poor-man", "external")
UNITS = ("standard-deviation", "percentage-point")


@dataclass(frozen=True)
class EventSurprise:
    """One announcement window: rate surprises per futures maturity plus the
    stock-index surprise, both in percent-style units."""

    date: _dt.date
    rate_surprises: tuple[float, ...]
    stock_surprise: float

    def __post_init__(self):
        if len(self.rate_surprises) == 0:
            raise SchemaError(f"event {self.date} has no rate surprises")
        values = np.asarray(self.rate_surprises, dtype=float)
        if not np.all(np.isfinite(values)) or not np.isfinite(self.stock_surprise):
            raise SchemaError(f"event {self.date} has non-finite surprises")


@dataclass(frozen=True)
class RotationResult:
    """Outcome of the rotation identification.

    ``impact`` maps unit structural shocks (policy, information) into
    (rate factor, stock) space; ``mp`` / ``info`` are the per-event structural
    shocks recovered with the median admissible rotation angle ``theta_star``.
    """

    theta_star: float
    admissible: np.ndarray
    impact: np.ndarray
    mp: np.ndarray
    info: np.ndarray
    grid_step: float


@dataclass(frozen=True)
class ShockSeries:
    """Monthly shock series: at most one entry per month index; months with
    no entry are zero when densified."""

    entries: Mapping[int, float]
    method: str
    units: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise SchemaError(f"unknown shock method {self.method!r}")
        if self.units not in UNITS:
            raise SchemaError(f"unknown shock units {self.units!r}")

    def densify(self, start: int, end: int) -> np.ndarray:
        """Values over months start..end inclusive, zero-filled."""
        out = np.zeros(end - start + 1)
        for month, value in self.entries.items():
            if start <= month <= end:
                out[month - start] = value
        return out

    def months(self) -> list[int]:
        return sorted(self.entries)

    def to_csv(
        self,
        path,
        sidecar: dict | None = None,
        start: int | None = None,
        end: int | None = None,
    ) -> None:
        """Write `date,shock` rows plus a `<path>.meta.json` sidecar with the
        method and units (and any extra report fields).  The written range
        defaults to the span of recorded months; months without entries are
        written as zero."""
        months = self.months()
        if start is None:
            start = months[0] if months else None
        if end is None:
            end = months[-1] if months else None
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "shock"])
            if start is not None and end is not None:
                for m in range(start, end + 1):
                    writer.writerow(
                        [format_month(m), repr(float(self.entries.get(m, 0.0)))]
                    )
        meta = {"method": self.method, "units": self.units}
        if sidecar:
            meta.update(sidecar)
        with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def from_csv(path) -> "ShockSeries":
        """Read a `date,shock` CSV; method/units come from the sidecar when
        present, else the series is tagged as externally supplied."""
        entries: dict[int, float] = {}
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"date", "shock"} <= set(reader.fieldnames):
                raise SchemaError(f"shock CSV {path} must have columns date,shock")
            for row in reader:
                month = parse_month(row["date"])
                if month in entries:
                    raise SchemaError(
                        f"shock CSV {path} repeats month {row['date']}"
                    )
                entries[month] = float(row["shock"])
        method, units = "external", "percentage-point"
        try:
            with open(f"{path}.meta.json", "r", encoding="utf-8") as fh:
                meta = json.load(fh)
            method = meta.get("method", method)
            units = meta.get("units", units)
        except FileNotFoundError:
            pass
        return ShockSeries(entries, method, units)


# ---------------------------------------------------------------------------
# event CSV


def load_events(path) -> list[EventSurprise]:
    """Read the event CSV: `date,stock_surprise,rate_m1,...` with at least one
    rate column; dates are YYYY-MM-DD."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["date", "stock_surprise"]:
            raise SchemaError(
                f"event CSV {path} must start with columns date,stock_surprise"
            )
        if len(header) < 3:
            raise SchemaError(f"event CSV {path} has no rate surprise columns")
        events = []
        for row in reader:
            if not row:
                continue
            try:
                date = parse_day(row[0])
                stock = float(row[1])
                rates = tuple(float(x) for x in row[2:])
            except ValueError as exc:
                raise SchemaError(f"event CSV {path}: bad row {row!r}") from exc
            events.append(EventSurprise(date, rates, stock))
    return events


# ---------------------------------------------------------------------------
# principal component


def first_principal_component(
    events: Sequence[EventSurprise],
) -> tuple[np.ndarray, np.ndarray]:
    """Factor scores and loading of the first PC of the rate surprises.

    Columns are demeaned (not standardized: maturities share units) before
    the eigen-decomposition; the unit-norm loading is sign-normalized to a
    positive mean so a positive factor move means higher rates.
    Returns (scores, loading).
    """
    if len(events) < 2:
        raise DegenerateInputError("need at least 2 events for a principal component")
    widths = {len(e.rate_surprises) for e in events}
    if len(widths) != 1:
        raise SchemaError(f"events disagree on maturity count: {sorted(widths)}")
    data = np.array([e.rate_surprises for e in events], dtype=float)
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / (len(events) - 1)
    if not np.any(np.abs(cov) > 0):
        raise DegenerateInputError("rate surprises have zero variance")
    eigvals, eigvecs = np.linalg.eigh(cov)
    loading = eigvecs[:, -1]
    mean_load = loading.mean()
    if mean_load < 0 or (mean_load == 0 and loading[np.nonzero(loading)[0][0]] < 0):
        loading = -loading
    return centered @ loading, loading


def _scalar_rates(events: Sequence[EventSurprise]) -> np.ndarray:
    """One rate number per event: the single maturity if there is only one,
    else the first principal component score."""
    if len(events[0].rate_surprises) == 1:
        return np.array([e.rate_surprises[0] for e in events], dtype=float)
    scores, _ = first_principal_component(events)
    return scores


# ---------------------------------------------------------------------------
# rotation identification


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _admissible_mask(chol: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    cos, sin = np.cos(thetas), np.sin(thetas)
    # B(theta) = chol @ Q(theta), columns checked against the sign pattern
    b11 = chol[0, 0] * cos
    b21 = chol[1, 0] * cos + chol[1, 1] * sin
    b12 = -chol[0, 0] * sin
    b22 = -chol[1, 0] * sin + chol[1, 1] * cos
    return (b11 > 0) & (b21 < 0) & (b12 > 0) & (b22 > 0)


def _circular_median(thetas: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Median angle of a single admissible arc on a circular grid.

    The arc may wrap past 2*pi; more than one arc means the sign restrictions
    do not pin down a contiguous set and identification fails.
    """
    n = len(mask)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise IdentificationFailureError("no rotation satisfies the sign restrictions")
    starts = np.sum(mask & ~np.roll(mask, 1))
    if mask.all():
        raise IdentificationFailureError("sign restrictions never bind on the grid")
    if starts > 1:
        raise IdentificationFailureError(
            f"admissible rotations split into {starts} arcs"
        )
    if mask[0] and mask[-1]:
        # unwrap: shift the leading segment up by a full turn
        start = np.flatnonzero(mask & ~np.roll(mask, 1))[0]
        ordered = np.concatenate([idx[idx >= start], idx[idx < start] + n])
        angles = thetas[ordered % n] + 2 * np.pi * (ordered // n)
    else:
        angles = thetas[idx]
    return float(np.median(angles) % (2 * np.pi)), thetas[idx]


def identify_rotation(
    events: Sequence[EventSurprise], grid_step: float = DEFAULT_GRID_STEP
) -> RotationResult:
    """Separate policy and information shocks by rotating the Cholesky factor.

    With S the sample covariance of (rate factor, stock surprise) and C its
    lower Cholesky factor, every B(theta) = C Q(theta) reproduces S; the
    admissible thetas are those whose impact columns carry the sign pattern
    ((+,-), (+,+)).  The reported angle is the median of the admissible arc,
    and per-event structural shocks solve B(theta*) z = (factor, stock).
    """
    if not 0 < grid_step <= MAX_GRID_STEP:
        raise ValueError(f"grid step must lie in (0, {MAX_GRID_STEP}]")
    if len(events) < 3:
        raise DegenerateInputError("need at least 3 events for rotation identification")
    factor = _scalar_rates(events)
    stock = np.array([e.stock_surprise for e in events], dtype=float)
    data = np.column_stack([factor, stock])
    cov = np.cov(data, rowvar=False)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovarianceError(
            "covariance of (factor, stock) is not positive definite"
        ) from exc

    n_angles = int(np.ceil(2 * np.pi / grid_step - 1e-9))
    thetas = np.arange(n_angles) * grid_step
    mask = _admissible_mask(chol, thetas)
    theta_star, admissible = _circular_median(thetas, mask)

    impact = chol @ rotation_matrix(theta_star)
    structural = np.linalg.solve(impact, data.T)
    return RotationResult(
        theta_star=theta_star,
        admissible=admissible,
        impact=impact,
        mp=structural[0],
        info=structural[1],
        grid_step=grid_step,
    )


# ---------------------------------------------------------------------------
# poor man's classification


def poor_mans_classify(
    events: Sequence[EventSurprise],
) -> tuple[np.ndarray, np.ndarray]:
    """Classify each event by the joint sign of rate and stock surprises.

    Opposite signs: the whole rate surprise is the policy shock.  Same signs:
    it is the information shock.  A zero rate or stock surprise yields zero in
    both components (it carries no sign information and keeps monthly sums
    unchanged).  Returns (mp, info) arrays in rate units.
    """
    rate = _scalar_rates(events)
    stock = np.array([e.stock_surprise for e in events], dtype=float)
    product = rate * stock
    mp = np.where(product < 0, rate, 0.0)
    info = np.where(product > 0, rate, 0.0)
    return mp, info


# ---------------------------------------------------------------------------
# monthly aggregation


def aggregate_monthly(
    dates: Sequence[_dt.date],
    values: Sequence[float] | np.ndarray,
    method: str,
    units: str,
) -> ShockSeries:
    """Sum event-level shock values within calendar months.

    Each month is summed in value-sorted order so the result is exactly
    invariant to the order events arrive in.
    """
    buckets: dict[int, list[float]] = {}
    for date, value in zip(dates, values):
        buckets.setdefault(month_of_date(date), []).append(float(value))
    entries = {
        month: float(np.sum(np.sort(np.asarray(vals))))
        for month, vals in buckets.items()
    }
    return ShockSeries(entries, method, units)
