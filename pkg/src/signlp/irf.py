"""Mapping fitted coefficients into tightening/easing impulse responses.

Conventions: the tightening response IRF+ is the effect of a +1 shock; the
easing response IRF- is the effect of a -1 shock, reported on its own axis so
the two columns are directly comparable (for the abs-sign family these are
the sum and difference of the absolute-value and sign coefficients; for the
split families the easing coefficient is negated).  The linear family reports
its single coefficient in ``irf_linear`` and, for overlay purposes, as a
sign-flipped pair irf_plus = beta, irf_minus = -beta.

Bands are delta-method normal intervals on the requested coverage levels;
missing coefficients at a horizon yield a gap, never an interpolated value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import CovarianceError, DegenerateTestError, SignLPError
from .engine import HorizonFailure, HorizonFit, run_spec
from .panel import PanelDataset
from .specs import (
    DEFAULT_BANDS,
    LPSpecification,
    SHOCK,
    SHOCK_ABS,
    SHOCK_NEG,
    SHOCK_POS,
)

_VAR_CLAMP = 1e-8


def delta_bands(
    fit: HorizonFit, weights: np.ndarray, levels: tuple[float, ...]
) -> tuple[float, float, dict[float, tuple[float, float]]]:
    """Point estimate, standard error, and normal bands for w'beta.

    Variance w'Vw materially below zero is a covariance defect; tiny negative
    values from rounding are clamped to zero.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(fit.beta),):
        raise ValueError("weight dimension does not match coefficients")
    estimate = float(weights @ fit.beta)
    variance = float(weights @ fit.cov @ weights)
    if variance < -_VAR_CLAMP:
        raise CovarianceError(f"negative variance {variance} at h={fit.h}")
    se = float(np.sqrt(max(variance, 0.0)))
    bands = {}
    for level in levels:
        z = norm.ppf(0.5 * (1.0 + level))
        bands[level] = (estimate - z * se, estimate + z * se)
    return estimate, se, bands


@dataclass
class IRFEntry:
    """One horizon of an impulse-response set; None marks a gap."""

    h: int
    irf_plus: float | None = None
    se_plus: float | None = None
    irf_minus: float | None = None
    se_minus: float | None = None
    irf_linear: float | None = None
    se_linear: float | None = None
    bands_plus: dict[float, tuple[float, float]] = field(default_factory=dict)
    bands_minus: dict[float, tuple[float, float]] = field(default_factory=dict)
    missing_reason: str | None = None


def _weight(fit: HorizonFit, spec_names: dict[str, float]) -> np.ndarray | None:
    w = np.zeros(len(fit.beta))
    for name, value in spec_names.items():
        i = fit.index(name)
        if i is None:
            return None
        w[i] = value
    return w


def irf_from_fit(
    family: str,
    fit: HorizonFit,
    levels: tuple[float, ...] = DEFAULT_BANDS,
    raw_easing: bool = False,
) -> IRFEntry:
    """Translate one horizon's coefficients into the family's IRF entry.

    ``raw_easing`` skips the easing-side negation for the split and linear
    families, reporting the raw negative-part coefficient instead of the
    response to a unit-magnitude easing.
    """
    entry = IRFEntry(h=fit.h)
    neg = 1.0 if raw_easing else -1.0
    if family == "abs-sign":
        plans = {
            "plus": {SHOCK_ABS: 1.0, SHOCK: 1.0},
            "minus": {SHOCK_ABS: 1.0, SHOCK: -1.0},
        }
    elif family in ("piecewise", "sign-conditioned"):
        plans = {"plus": {SHOCK_POS: 1.0}, "minus": {SHOCK_NEG: neg}}
    elif family == "linear":
        plans = {"plus": {SHOCK: 1.0}, "minus": {SHOCK: neg}}
    else:
        raise ValueError(f"unknown family {family!r}")

    for side, plan in plans.items():
        w = _weight(fit, plan)
        if w is None:
            missing = [n for n in plan if fit.index(n) is None]
            entry.missing_reason = f"coefficient dropped: {', '.join(missing)}"
            return IRFEntry(h=fit.h, missing_reason=entry.missing_reason)
        estimate, se, bands = delta_bands(fit, w, levels)
        if side == "plus":
            entry.irf_plus, entry.se_plus, entry.bands_plus = estimate, se, bands
        else:
            entry.irf_minus, entry.se_minus, entry.bands_minus = estimate, se, bands
    if family == "linear":
        entry.irf_linear = fit.coef(SHOCK)
        entry.se_linear = fit.se(SHOCK)
    return entry


@dataclass
class AsymmetryTest:
    h: int
    statistic: float
    p_value: float


def test_asymmetry(fit: HorizonFit) -> AsymmetryTest:
    """z-test of the absolute-value coefficient against zero; rejecting means
    tightening and easing responses differ at this horizon."""
    beta = fit.coef(SHOCK_ABS)
    se = fit.se(SHOCK_ABS)
    if beta is None or se is None:
        raise SignLPError(
            f"no absolute-value coefficient at h={fit.h}; "
            "asymmetry test needs the abs-sign family"
        )
    if se == 0.0:
        raise DegenerateTestError(f"zero standard error at h={fit.h}")
    z = beta / se
    return AsymmetryTest(h=fit.h, statistic=z, p_value=2.0 * float(norm.sf(abs(z))))


# ---------------------------------------------------------------------------
# IRF sets


def _level_tag(level: float) -> str:
    pct = 100.0 * level
    return str(int(round(pct))) if abs(pct - round(pct)) < 1e-9 else f"{pct:g}"


@dataclass
class IRFSet:
    """Tightening/easing/linear response paths over horizons 0..H."""

    outcome: str
    family: str
    levels: tuple[float, ...]
    entries: list[IRFEntry]
    units: str = "outcome units per unit shock"

    def validate(self) -> None:
        for entry in self.entries:
            for bands in (entry.bands_plus, entry.bands_minus):
                widths = [bands[lv][1] - bands[lv][0] for lv in sorted(bands)]
                if any(w < -1e-12 for w in widths):
                    raise ValueError(f"negative band width at h={entry.h}")
                if any(b > a + 1e-12 for a, b in zip(widths[1:], widths)):
                    raise ValueError(f"bands not nested at h={entry.h}")
            for se in (entry.se_plus, entry.se_minus, entry.se_linear):
                if se is not None and se < 0:
                    raise ValueError(f"negative se at h={entry.h}")

    def header(self) -> list[str]:
        cols = ["h", "irf_plus", "se_plus", "irf_minus", "se_minus", "irf_linear"]
        for side in ("plus", "minus"):
            for level in self.levels:
                tag = _level_tag(level)
                cols += [f"lo{tag}_{side}", f"hi{tag}_{side}"]
        return cols

    def to_csv(self, path) -> None:
        def cell(value):
            return "" if value is None else repr(float(value))

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for entry in self.entries:
                row = [
                    str(entry.h),
                    cell(entry.irf_plus),
                    cell(entry.se_plus),
                    cell(entry.irf_minus),
                    cell(entry.se_minus),
                    cell(entry.irf_linear),
                ]
                for bands in (entry.bands_plus, entry.bands_minus):
                    for level in self.levels:
                        lo_hi = bands.get(level)
                        row += [cell(lo_hi and lo_hi[0]), cell(lo_hi and lo_hi[1])]
                writer.writerow(row)


def irf_set_from_fits(
    spec: LPSpecification, results: list[HorizonFit | HorizonFailure]
) -> IRFSet:
    entries = []
    for res in results:
        if isinstance(res, HorizonFailure):
            entries.append(IRFEntry(h=res.h, missing_reason=res.reason))
        else:
            entries.append(irf_from_fit(spec.family, res, spec.band_levels))
    irfs = IRFSet(
        outcome=spec.outcome,
        family=spec.family,
        levels=spec.band_levels,
        entries=entries,
    )
    irfs.validate()
    return irfs


def estimate_irfs(
    ds: PanelDataset, spec: LPSpecification, jobs: int = 1
) -> tuple[IRFSet, list[HorizonFit | HorizonFailure]]:
    """Run every horizon of the specification and map the fits to IRFs."""
    results = run_spec(ds, spec, jobs=jobs)
    return irf_set_from_fits(spec, results), results
