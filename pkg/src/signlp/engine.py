"""Per-horizon panel least squares with fixed-effect absorption and
time-clustered sandwich covariance.

Each horizon h is one regression: the outcome at t+h on the shock columns at
t and the lagged controls at t-1..t-L, for every (country, t) row where all
of those exist.  Country-by-calendar-month intercepts are absorbed by the
within transformation; time clustering allows arbitrary cross-country
correlation within a month, which is the relevant dependence when the shock
is common to all countries.

The solver is a rank-revealing column-pivoted QR: near-duplicate controls are
dropped softly and reported, never silently absorbed into an unstable
inverse.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateDesignError,
    InferenceError,
    InsufficientSampleError,
    SignLPError,
)
from .panel import PanelDataset, build_lagged_controls, lag_column_name
from .specs import LPSpecification, build_shock_columns

PIVOT_RTOL = 1e-10
CONST = "const"


@dataclass
class RegressionProblem:
    """One assembled regression: outcome, named design, and row bookkeeping.

    ``clusters`` holds the per-row time id; ``fe_groups`` the per-row
    country-by-calendar-month group id (None when fixed effects are off).
    ``countries`` and ``months`` keep per-row provenance for reporting.
    """

    y: np.ndarray
    X: np.ndarray
    columns: list[str]
    clusters: np.ndarray
    fe_groups: np.ndarray | None = None
    countries: np.ndarray | None = None
    months: np.ndarray | None = None
    h: int = 0
    demeaned: bool = False
    singleton_rows: np.ndarray | None = None
    n_absorbed_groups: int = 0

    def __post_init__(self):
        n = len(self.y)
        if n < 1:
            raise InsufficientSampleError("empty regression problem", h=self.h)
        if self.X.shape != (n, len(self.columns)):
            raise ValueError("design shape does not match column names")
        if len(self.clusters) != n:
            raise ValueError("cluster ids do not match row count")
        if self.fe_groups is not None and len(self.fe_groups) != n:
            raise ValueError("fixed-effect groups do not match row count")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError(f"duplicate column names: {self.columns}")

    @property
    def n_obs(self) -> int:
        return len(self.y)

    def take(self, mask: np.ndarray) -> "RegressionProblem":
        return replace(
            self,
            y=self.y[mask],
            X=self.X[mask],
            clusters=self.clusters[mask],
            fe_groups=None if self.fe_groups is None else self.fe_groups[mask],
            countries=None if self.countries is None else self.countries[mask],
            months=None if self.months is None else self.months[mask],
            singleton_rows=None
            if self.singleton_rows is None
            else self.singleton_rows[mask],
        )


@dataclass
class HorizonFit:
    """Fitted coefficients and cluster-robust covariance at one horizon."""

    h: int
    names: list[str]
    beta: np.ndarray
    cov: np.ndarray
    n_obs: int
    n_clusters: int
    dropped_columns: list[str]
    n_absorbed_groups: int = 0

    def index(self, name: str) -> int | None:
        try:
            return self.names.index(name)
        except ValueError:
            return None

    def coef(self, name: str) -> float | None:
        i = self.index(name)
        return None if i is None else float(self.beta[i])

    def se(self, name: str) -> float | None:
        i = self.index(name)
        return None if i is None else float(np.sqrt(self.cov[i, i]))

    @property
    def coefficients(self) -> dict[str, float]:
        return {n: float(b) for n, b in zip(self.names, self.beta)}

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "coefficients": self.coefficients,
            "columns": list(self.names),
            "covariance": [[float(v) for v in row] for row in self.cov],
            "n_obs": self.n_obs,
            "n_clusters": self.n_clusters,
            "dropped_columns": list(self.dropped_columns),
            "n_absorbed_groups": self.n_absorbed_groups,
        }

    def validate(self, tol: float = 1e-8) -> None:
        if self.cov.shape != (len(self.beta), len(self.beta)):
            raise ValueError("covariance dimension mismatch")
        asym = float(np.max(np.abs(self.cov - self.cov.T), initial=0.0))
        if asym > tol:
            raise ValueError(f"covariance asymmetry {asym} exceeds {tol}")
        eigmin = float(np.linalg.eigvalsh(self.cov).min()) if len(self.beta) else 0.0
        if eigmin < -tol * max(1.0, float(np.trace(self.cov))):
            raise ValueError(f"covariance not PSD: min eigenvalue {eigmin}")
        if self.n_clusters < 2:
            raise ValueError("fewer than two clusters")


@dataclass
class HorizonFailure:
    """A horizon that could not be estimated; the run carries on."""

    h: int
    error: SignLPError

    @property
    def reason(self) -> str:
        return f"{type(self.error).__name__}: {self.error}"


# ---------------------------------------------------------------------------
# fixed-effect absorption


def absorb_fixed_effects(prob: RegressionProblem) -> RegressionProblem:
    """Replace y and every design column by deviations from fixed-effect
    group means.  Singleton groups demean to exactly zero; they are flagged in
    ``singleton_rows`` and dropped before solving, since they carry no
    identifying variation."""
    if prob.fe_groups is None:
        raise ValueError("problem has no fixed-effect groups")
    _, codes = np.unique(prob.fe_groups, return_inverse=True)
    counts = np.bincount(codes)
    n_groups = len(counts)

    def demean(col: np.ndarray) -> np.ndarray:
        means = np.bincount(codes, weights=col) / counts
        return col - means[codes]

    y = demean(prob.y)
    X = np.column_stack([demean(prob.X[:, j]) for j in range(prob.X.shape[1])])
    return replace(
        prob,
        y=y,
        X=X,
        demeaned=True,
        singleton_rows=counts[codes] == 1,
        n_absorbed_groups=n_groups,
    )


# ---------------------------------------------------------------------------
# least squares


@dataclass
class OLSSolution:
    beta: np.ndarray
    kept: np.ndarray          # design-column indices retained, design order
    kept_names: list[str]
    dropped_names: list[str]
    residuals: np.ndarray


def solve_ols(prob: RegressionProblem, pivot_rtol: float = PIVOT_RTOL) -> OLSSolution:
    """Least squares via column-pivoted QR.

    Columns whose pivot falls below ``pivot_rtol`` times the leading pivot are
    collinear with earlier ones: they are dropped, reported, and get no
    coefficient."""
    y, X = prob.y, prob.X
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    lead = diag[0] if diag.size else 0.0
    if lead <= 0.0:
        raise DegenerateDesignError(
            f"all {X.shape[1]} design columns are zero at h={prob.h}"
        )
    rank = int(np.sum(diag >= pivot_rtol * lead))
    kept_piv = piv[:rank]
    dropped_piv = piv[rank:]
    if len(y) < rank + 1:
        raise InsufficientSampleError(
            f"{len(y)} rows cannot support {rank} retained columns", h=prob.h
        )
    qty = q.T @ y
    beta_piv = scipy.linalg.solve_triangular(
        r[:rank, :rank], qty[:rank], check_finite=False
    )
    # report in design order, not pivot order
    order = np.argsort(kept_piv)
    kept = kept_piv[order]
    beta = beta_piv[order]
    residuals = y - X[:, kept] @ beta
    return OLSSolution(
        beta=beta,
        kept=kept,
        kept_names=[prob.columns[i] for i in kept],
        dropped_names=[prob.columns[i] for i in sorted(dropped_piv)],
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# cluster-robust covariance


def cluster_covariance(
    X: np.ndarray, residuals: np.ndarray, clusters: np.ndarray
) -> np.ndarray:
    """Sandwich covariance with scores summed within time clusters.

    V = c (X'X)^-1 (sum_g X_g' u_g u_g' X_g) (X'X)^-1 with the small-sample
    factor c = [G/(G-1)] [(n-1)/(n-K)].  ``X`` must hold only the retained
    columns.  With every row its own cluster this reduces to the standard
    heteroskedasticity-robust estimator."""
    n, k = X.shape
    _, codes = np.unique(clusters, return_inverse=True)
    n_clusters = int(codes.max()) + 1 if n else 0
    if n_clusters < 2:
        raise InferenceError("need at least 2 time clusters for inference")
    r = scipy.linalg.qr(X, mode="r", check_finite=False)[0][:k, :k]
    r_inv = scipy.linalg.solve_triangular(r, np.eye(k), check_finite=False)
    bread = r_inv @ r_inv.T
    scores = np.zeros((n_clusters, k))
    np.add.at(scores, codes, X * residuals[:, None])
    meat = scores.T @ scores
    c = (n_clusters / (n_clusters - 1.0)) * ((n - 1.0) / (n - k))
    cov = c * bread @ meat @ bread
    return 0.5 * (cov + cov.T)


# ---------------------------------------------------------------------------
# per-horizon assembly


class LPWorkspace:
    """Dense per-spec arrays shared by all horizons of one run.

    Immutable once built; per-horizon row selection is pure slicing, so
    horizons can be estimated concurrently.
    """

    def __init__(self, ds: PanelDataset, spec: LPSpecification):
        self.spec = spec
        m0, m1 = ds.date_range
        self.month_values = np.arange(m0, m1 + 1)
        self.countries = ds.countries
        n_c, n_t = len(self.countries), len(self.month_values)

        wide = ds.pivot(spec.outcome).reindex(
            index=self.month_values, columns=self.countries
        )
        self.outcome = wide.to_numpy().T  # (country, month)
        self.eps = spec.shock.densify(m0, m1)

        if spec.controls:
            block = build_lagged_controls(ds, list(spec.controls), spec.lags)
            self.control_names = list(block.columns)
            self.controls = block.to_numpy().reshape(n_c, n_t, -1)
        else:
            self.control_names = []
            self.controls = np.empty((n_c, n_t, 0))

        self.month_of_year = self.month_values % 12

    def problem(self, h: int) -> RegressionProblem:
        spec = self.spec
        n_t = len(self.month_values)
        if h < 0:
            raise ValueError("horizon must be >= 0")
        if n_t - h < 1:
            raise InsufficientSampleError(f"panel shorter than horizon {h}", h=h)
        lead = self.outcome[:, h:]                  # outcome at t+h
        ctrl = self.controls[:, : n_t - h, :]       # lags at t-1..t-L
        ok = np.isfinite(lead)
        if ctrl.shape[2]:
            ok &= np.all(np.isfinite(ctrl), axis=2)
        c_idx, t_idx = np.nonzero(ok)
        if c_idx.size == 0:
            raise InsufficientSampleError(f"no usable rows at h={h}", h=h)

        y = lead[c_idx, t_idx]
        eps_rows = self.eps[t_idx]
        ctrl_rows = ctrl[c_idx, t_idx, :]
        names, X = build_shock_columns(
            spec.family, eps_rows, self.control_names, ctrl_rows
        )
        fe_groups = None
        if spec.fixed_effects:
            fe_groups = c_idx * 12 + self.month_of_year[t_idx]
        else:
            names = names + [CONST]
            X = np.column_stack([X, np.ones(len(y))])
        return RegressionProblem(
            y=y,
            X=X,
            columns=names,
            clusters=self.month_values[t_idx],
            fe_groups=fe_groups,
            countries=np.asarray(self.countries, dtype=object)[c_idx],
            months=self.month_values[t_idx],
            h=h,
        )

    def run(self, h: int) -> HorizonFit:
        prob = self.problem(h)
        n_absorbed = 0
        if prob.fe_groups is not None:
            prob = absorb_fixed_effects(prob)
            n_absorbed = prob.n_absorbed_groups
            if prob.singleton_rows is not None and prob.singleton_rows.any():
                prob = prob.take(~prob.singleton_rows)
        if prob.n_obs < len(prob.columns) + 1:
            raise InsufficientSampleError(
                f"{prob.n_obs} usable rows for {len(prob.columns)} columns at h={h}",
                h=h,
            )
        sol = solve_ols(prob)
        cov = cluster_covariance(prob.X[:, sol.kept], sol.residuals, prob.clusters)
        fit = HorizonFit(
            h=h,
            names=sol.kept_names,
            beta=sol.beta,
            cov=cov,
            n_obs=prob.n_obs,
            n_clusters=len(np.unique(prob.clusters)),
            dropped_columns=sol.dropped_names,
            n_absorbed_groups=n_absorbed,
        )
        fit.validate()
        return fit


def run_horizon(ds: PanelDataset, spec: LPSpecification, h: int) -> HorizonFit:
    """Assemble and estimate the single regression at horizon h."""
    return LPWorkspace(ds, spec).run(h)


def run_spec(
    ds: PanelDataset, spec: LPSpecification, jobs: int = 1
) -> list[HorizonFit | HorizonFailure]:
    """Estimate every horizon 0..H; failures at individual horizons are
    collected rather than aborting the run.  Results come back ordered by h
    regardless of the degree of parallelism."""
    ws = LPWorkspace(ds, spec)

    def one(h: int) -> HorizonFit | HorizonFailure:
        try:
            return ws.run(h)
        except SignLPError as err:
            return HorizonFailure(h=h, error=err)

    horizons = range(spec.horizons + 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, horizons))
    return [one(h) for h in horizons]
