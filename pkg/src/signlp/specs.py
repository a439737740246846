"""The regression-family menu and its shock regressor columns.

Four families parameterize how the response may depend on the shock's sign:

* ``linear``            -- the shock alone (symmetric benchmark).
* ``abs-sign``          -- shock plus its absolute value; the tightening and
                           easing responses are sums/differences of the two
                           coefficients.
* ``piecewise``         -- positive part max(e,0) and negative part min(e,0)
                           entered separately.
* ``sign-conditioned``  -- the piecewise shock split, and additionally every
                           control column interacted with the tightening
                           indicator D = 1{e > 0}, so the whole propagation
                           may differ by sign.

Zero shocks count as non-tightening (D = 0) and contribute zero to every
split column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .shocks import ShockSeries

FAMILIES = ("linear", "abs-sign", "piecewise", "sign-conditioned")

SHOCK = "shock"
SHOCK_ABS = "shock_abs"
SHOCK_POS = "shock_pos"
SHOCK_NEG = "shock_neg"

DEFAULT_BANDS = (0.68, 0.90)
DEFAULT_LAGS = 4
DEFAULT_HORIZONS = 24


@dataclass(frozen=True)
class LPSpecification:
    """Declarative description of one local-projection run."""

    family: str
    outcome: str
    shock: ShockSeries
    controls: tuple[str, ...] = ()
    lags: int = DEFAULT_LAGS
    fixed_effects: bool = True
    horizons: int = DEFAULT_HORIZONS
    band_levels: tuple[float, ...] = DEFAULT_BANDS

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected {FAMILIES}")
        if self.horizons < 0:
            raise ConfigError("horizons must be >= 0")
        if self.lags < 1:
            raise ConfigError("lags must be >= 1")
        if not all(0.0 < p < 1.0 for p in self.band_levels):
            raise ConfigError(f"band levels must lie in (0,1): {self.band_levels}")
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "band_levels", tuple(sorted(self.band_levels)))


def shock_column_names(family: str) -> list[str]:
    if family == "linear":
        return [SHOCK]
    if family == "abs-sign":
        return [SHOCK, SHOCK_ABS]
    return [SHOCK_POS, SHOCK_NEG]


def build_shock_columns(
    family: str,
    eps: np.ndarray,
    control_names: Sequence[str] = (),
    control_block: np.ndarray | None = None,
) -> tuple[list[str], np.ndarray]:
    """Materialize the family's regressor columns from the shock values.

    ``eps`` holds the shock aligned to whatever rows are being built.  For
    sign-conditioned runs the control block must be supplied so each control
    column can be split into its tightening (D*x) and easing ((1-D)*x) parts;
    other families return the control block untouched.  Returns
    (column names, matrix).
    """
    eps = np.asarray(eps, dtype=float)
    if family == "linear":
        names, cols = [SHOCK], [eps]
    elif family == "abs-sign":
        names, cols = [SHOCK, SHOCK_ABS], [eps, np.abs(eps)]
    elif family in ("piecewise", "sign-conditioned"):
        names = [SHOCK_POS, SHOCK_NEG]
        cols = [np.maximum(eps, 0.0), np.minimum(eps, 0.0)]
    else:
        raise ConfigError(f"unknown family {family!r}")

    matrix = np.column_stack(cols)
    if family == "sign-conditioned" and control_block is not None and control_block.size:
        tight = (eps > 0).astype(float)
        split_names: list[str] = []
        split_cols: list[np.ndarray] = []
        for j, name in enumerate(control_names):
            split_names.append(f"{name}:pos")
            split_cols.append(control_block[:, j] * tight)
            split_names.append(f"{name}:neg")
            split_cols.append(control_block[:, j] * (1.0 - tight))
        return names + split_names, np.column_stack([matrix] + split_cols)
    if control_block is not None and control_block.size:
        return names + list(control_names), np.column_stack([matrix, control_block])
    return names, matrix
