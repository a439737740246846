"""Synthetic panels with known sign-dependent impulse responses.

The outcome follows an AR(1) hit by one common monthly shock whose impact
loading differs by sign:

    y[i,t] = rho * y[i,t-1] + tp * e[t] * 1{e[t]>0} + tm * e[t] * 1{e[t]<0}
             + fe[i, month(t)] + noise[i,t]

so the true tightening response at horizon h is tp * rho**h and the true
response to a unit-magnitude easing is -tm * rho**h.  Because the shock term
is exactly linear in (e, |e|), the absolute-sign regression recovers these
paths without bias, which is what makes the process a usable oracle.

Two decoy regressors ride along for exercising the controls machinery: a
domestic AR(1) ``z`` per country and a global AR(1) ``g`` (stored under the
first country's code).  Neither enters the outcome.

Randomness is drawn from named child streams of the seed, in a fixed order
documented in :func:`simulate`, so any piece (e.g. the missing-data mask) can
be replayed independently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ConfigError
from .months import parse_month
from .panel import PanelDataset, VariableDecl, _canonical
from .shocks import ShockSeries

BURN_IN = 100
OUTCOME = "y"
DOMESTIC_CONTROL = "z"
GLOBAL_CONTROL = "g"


@dataclass(frozen=True)
class DGPConfig:
    countries: int
    months: int
    rho: float
    theta_plus: float
    theta_minus: float
    shock_dist: str = "gaussian"
    shock_scale: float = 1.0
    student_df: float = 5.0
    fe_magnitude: float = 1.0
    noise_scale: float = 1.0
    missing_rate: float = 0.0
    seed: int = 0
    start: str = "2000-01"

    def __post_init__(self):
        if self.countries < 1 or self.months < 1:
            raise ConfigError("need at least one country and one month")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"rho must lie in [0,1): {self.rho}")
        if self.shock_dist not in ("gaussian", "student-t"):
            raise ConfigError(f"unknown shock distribution {self.shock_dist!r}")
        if min(self.shock_scale, self.fe_magnitude, self.noise_scale) < 0:
            raise ConfigError("scales must be >= 0")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError(f"missing rate must lie in [0,1): {self.missing_rate}")


@dataclass(frozen=True)
class OracleIRF:
    """True response paths implied by a config: geometric decay from the
    impact loadings, with the easing path reported as the response to a -1
    shock."""

    horizons: np.ndarray
    irf_plus: np.ndarray
    irf_minus: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["h", "irf_plus_true", "irf_minus_true"])
            for h, plus, minus in zip(self.horizons, self.irf_plus, self.irf_minus):
                writer.writerow([str(int(h)), repr(float(plus)), repr(float(minus))])


def oracle_irf(cfg: DGPConfig, horizons: int) -> OracleIRF:
    h = np.arange(horizons + 1)
    decay = cfg.rho ** h
    return OracleIRF(
        horizons=h,
        irf_plus=cfg.theta_plus * decay,
        irf_minus=-cfg.theta_minus * decay,
    )


@dataclass(frozen=True)
class SimulationResult:
    panel: PanelDataset
    shocks: ShockSeries
    oracle: OracleIRF


def schema() -> list[VariableDecl]:
    """Variable declarations matching the simulated panel."""
    return [
        VariableDecl(OUTCOME, "none", "outcome"),
        VariableDecl(DOMESTIC_CONTROL, "none", "control"),
        VariableDecl(GLOBAL_CONTROL, "none", "global-control"),
    ]


def country_names(n: int) -> list[str]:
    return [f"C{i:03d}" for i in range(n)]


def simulate(cfg: DGPConfig, horizons: int = 24) -> SimulationResult:
    """Generate one panel, its shock series, and the true IRF paths.

    Child RNG streams are spawned from the seed in this order: shocks,
    fixed effects, noise, missing-data mask, controls.  The missing-data
    stream draws one uniform grid per variable in the order y (countries x
    months), z (countries x months), g (months,); an observation is deleted
    where its uniform falls below the missing rate.  A burn-in of 100 months
    is simulated and discarded.
    """
    streams = np.random.SeedSequence(cfg.seed).spawn(5)
    rng_shock, rng_fe, rng_noise, rng_miss, rng_ctrl = (
        np.random.default_rng(s) for s in streams
    )
    n_c, n_t = cfg.countries, cfg.months
    total = BURN_IN + n_t
    m_start = parse_month(cfg.start)
    months_full = np.arange(m_start - BURN_IN, m_start + n_t)
    moy = months_full % 12

    if cfg.shock_dist == "gaussian":
        eps = rng_shock.standard_normal(total) * cfg.shock_scale
    else:
        eps = rng_shock.standard_t(cfg.student_df, total) * cfg.shock_scale
    impulse = np.where(eps > 0, cfg.theta_plus * eps, 0.0) + np.where(
        eps < 0, cfg.theta_minus * eps, 0.0
    )
    fe = rng_fe.standard_normal((n_c, 12)) * cfg.fe_magnitude
    noise = rng_noise.standard_normal((n_c, total)) * cfg.noise_scale

    y = np.zeros((n_c, total))
    level = np.zeros(n_c)
    for t in range(total):
        level = cfg.rho * level + impulse[t] + fe[:, moy[t]] + noise[:, t]
        y[:, t] = level

    z_innov = rng_ctrl.standard_normal((n_c, total))
    g_innov = rng_ctrl.standard_normal(total)
    z = np.zeros((n_c, total))
    z_level = np.zeros(n_c)
    g = np.zeros(total)
    g_level = 0.0
    for t in range(total):
        z_level = 0.5 * z_level + z_innov[:, t]
        z[:, t] = z_level
        g_level = 0.5 * g_level + g_innov[t]
        g[t] = g_level

    keep_y = rng_miss.random((n_c, n_t)) >= cfg.missing_rate
    keep_z = rng_miss.random((n_c, n_t)) >= cfg.missing_rate
    keep_g = rng_miss.random(n_t) >= cfg.missing_rate

    names = country_names(n_c)
    months_kept = months_full[BURN_IN:]
    rows_country, rows_month, rows_var, rows_val = [], [], [], []

    def emit(values_2d: np.ndarray, keep: np.ndarray, variable: str) -> None:
        c_idx, t_idx = np.nonzero(keep)
        rows_country.extend(names[c] for c in c_idx)
        rows_month.extend(months_kept[t_idx])
        rows_var.extend([variable] * len(c_idx))
        rows_val.extend(values_2d[c_idx, t_idx])

    emit(y[:, BURN_IN:], keep_y, OUTCOME)
    emit(z[:, BURN_IN:], keep_z, DOMESTIC_CONTROL)
    t_idx = np.nonzero(keep_g)[0]
    rows_country.extend([names[0]] * len(t_idx))
    rows_month.extend(months_kept[t_idx])
    rows_var.extend([GLOBAL_CONTROL] * len(t_idx))
    rows_val.extend(g[BURN_IN:][t_idx])

    frame = pd.DataFrame(
        {
            "country": rows_country,
            "month": np.asarray(rows_month, dtype=np.int64),
            "variable": rows_var,
            "value": np.asarray(rows_val, dtype=np.float64),
        }
    )
    panel = PanelDataset(_canonical(frame), {d.name: d for d in schema()})
    shocks = ShockSeries(
        entries={int(m): float(v) for m, v in zip(months_kept, eps[BURN_IN:])},
        method="external",
        units="standard-deviation",
    )
    return SimulationResult(panel, shocks, oracle_irf(cfg, horizons))
