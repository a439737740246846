"""Monte Carlo study drivers and the reusable invariant battery.

The replication worker lives here (not in test code) so it can be dispatched
to process pools and reused by the CLI ``check`` command and the experiment
scripts.
"""

from __future__ import annotations

import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import (
    HorizonFit,
    LPWorkspace,
    absorb_fixed_effects,
    cluster_covariance,
    solve_ols,
)
from .errors import SignLPError
from .irf import IRFSet, estimate_irfs, test_asymmetry
from .panel import PanelDataset, apply_declared_transforms, load_panel, load_schema
from .shocks import ShockSeries
from .simulate import DGPConfig, OUTCOME, simulate
from .specs import LPSpecification


def irf_arrays(irfs: IRFSet) -> dict[str, np.ndarray]:
    """Dense per-horizon arrays from an IRF set, NaN at gaps."""
    n = len(irfs.entries)
    out = {
        key: np.full(n, np.nan)
        for key in ("irf_plus", "se_plus", "irf_minus", "se_minus", "irf_linear")
    }
    for i, entry in enumerate(irfs.entries):
        for key in out:
            value = getattr(entry, key)
            if value is not None:
                out[key][i] = value
    return out


# ---------------------------------------------------------------------------
# Monte Carlo driver


def mc_replication(
    cfg: DGPConfig,
    families: Sequence[str] | dict[str, int] = ("abs-sign",),
    horizons: int = 12,
    controls: tuple[str, ...] = (),
    lags: int = 1,
    fixed_effects: bool = True,
) -> dict[str, dict[str, np.ndarray]]:
    """Simulate one panel and estimate the requested families on it.

    ``families`` may be a mapping family -> max horizon to fit cheaper
    side-specifications (else all run to ``horizons``).  Returns, per family,
    the IRF point paths plus (for abs-sign) the per-horizon p-value of the
    asymmetry test.
    """
    fam_h = families if isinstance(families, dict) else {f: horizons for f in families}
    sim = simulate(cfg, horizons=max(fam_h.values()))
    out: dict[str, dict[str, np.ndarray]] = {}
    for family, fam_horizon in fam_h.items():
        spec = LPSpecification(
            family=family,
            outcome=OUTCOME,
            shock=sim.shocks,
            controls=controls,
            lags=lags,
            fixed_effects=fixed_effects,
            horizons=fam_horizon,
        )
        irfs, results = estimate_irfs(sim.panel, spec)
        arrays = irf_arrays(irfs)
        p_abs = np.full(fam_horizon + 1, np.nan)
        if family == "abs-sign":
            for res in results:
                if isinstance(res, HorizonFit):
                    try:
                        p_abs[res.h] = test_asymmetry(res).p_value
                    except SignLPError:
                        pass
        arrays["p_abs"] = p_abs
        out[family] = arrays
    return out


def replication_seeds(seed: int, reps: int) -> list[int]:
    """Deterministic per-replication seeds derived from one master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(reps)]


def run_mc_study(
    cfg: DGPConfig,
    reps: int,
    jobs: int = 1,
    families: Sequence[str] | dict[str, int] = ("abs-sign",),
    horizons: int = 12,
    controls: tuple[str, ...] = (),
    lags: int = 1,
    fixed_effects: bool = True,
) -> dict[str, dict[str, np.ndarray]]:
    """Run replications (optionally in a process pool) and stack the results
    into (reps, horizons+1) arrays, ordered by replication index."""
    configs = [replace(cfg, seed=s) for s in replication_seeds(cfg.seed, reps)]
    fam_h = dict(families) if isinstance(families, dict) else {
        f: horizons for f in families
    }
    worker = partial(
        mc_replication,
        families=fam_h,
        controls=tuple(controls),
        lags=lags,
        fixed_effects=fixed_effects,
    )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, configs, chunksize=max(1, reps // (4 * jobs))))
    else:
        results = [worker(c) for c in configs]
    stacked: dict[str, dict[str, np.ndarray]] = {}
    for family in fam_h:
        keys = results[0][family].keys()
        stacked[family] = {
            key: np.vstack([r[family][key] for r in results]) for key in keys
        }
    return stacked


def mc_standard_error(samples: np.ndarray) -> np.ndarray:
    """Monte Carlo standard error of the mean along axis 0."""
    return samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


# ---------------------------------------------------------------------------
# invariant battery (CLI `check`)


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    detail: str


def _outcome_name(ds: PanelDataset, requested: str | None) -> str | None:
    if requested is not None:
        return requested
    for name, decl in ds.declarations.items():
        if decl.role == "outcome" and name in set(ds.frame["variable"]):
            return name
    return None


def run_check_battery(
    panel_path,
    schema_path,
    shocks_path=None,
    outcome: str | None = None,
    lags: int = 2,
    horizons: int = 4,
) -> list[CheckOutcome]:
    """Verify the package's core invariants on user-supplied inputs.

    Always: serialization round-trip and log-transform invertibility.  With a
    shock series and an outcome: abs-sign/piecewise equivalence, the
    sum/difference coefficient identities, covariance symmetry and positive
    semi-definiteness, band nesting, and row-permutation invariance.
    """
    results: list[CheckOutcome] = []
    schema = load_schema(schema_path)
    raw, _report = load_panel(panel_path, schema)

    with tempfile.TemporaryDirectory() as tmp:
        copy_path = Path(tmp) / "roundtrip.csv"
        raw.to_csv(copy_path)
        again, _ = load_panel(copy_path, schema)
        results.append(
            CheckOutcome(
                "csv-roundtrip",
                raw.equals(again),
                f"{len(raw)} observations re-serialized",
            )
        )

    ds = apply_declared_transforms(raw)
    for name, decl in ds.declarations.items():
        if decl.transform != "log-times-100" or name not in raw.frame["variable"].values:
            continue
        original = raw.frame[raw.frame["variable"] == name]["value"].to_numpy()
        transformed = ds.frame[ds.frame["variable"] == name]["value"].to_numpy()
        rel = np.max(np.abs(np.exp(transformed / 100.0) - original) / np.abs(original))
        results.append(
            CheckOutcome(
                f"log-transform-inverse[{name}]",
                bool(rel <= 1e-12),
                f"max relative error {rel:.3e}",
            )
        )

    target = _outcome_name(ds, outcome)
    if shocks_path is None or target is None:
        return results
    shocks = ShockSeries.from_csv(shocks_path)
    controls = tuple(
        n
        for n, d in ds.declarations.items()
        if d.role in ("control", "global-control") and n in set(ds.frame["variable"])
    )

    def spec_for(family: str) -> LPSpecification:
        return LPSpecification(
            family=family,
            outcome=target,
            shock=shocks,
            controls=controls,
            lags=lags,
            horizons=horizons,
        )

    abs_irfs, abs_fits = estimate_irfs(ds, spec_for("abs-sign"))
    pw_irfs, _ = estimate_irfs(ds, spec_for("piecewise"))
    a, p = irf_arrays(abs_irfs), irf_arrays(pw_irfs)
    devs = [
        np.nanmax(np.abs(a[k] - p[k]))
        for k in ("irf_plus", "irf_minus", "se_plus", "se_minus")
    ]
    dev = float(np.nanmax(devs))
    results.append(
        CheckOutcome(
            "abs-sign/piecewise-equivalence", dev <= 1e-8, f"max deviation {dev:.3e}"
        )
    )

    identity_dev = 0.0
    sym_dev, psd_floor = 0.0, 0.0
    for res in abs_fits:
        if not isinstance(res, HorizonFit):
            continue
        b_sign, b_abs = res.coef("shock"), res.coef("shock_abs")
        entry = a["irf_plus"][res.h], a["irf_minus"][res.h]
        if b_sign is not None and b_abs is not None and np.isfinite(entry).all():
            identity_dev = max(
                identity_dev,
                abs(entry[0] + entry[1] - 2 * b_abs),
                abs(entry[0] - entry[1] - 2 * b_sign),
            )
        sym_dev = max(sym_dev, float(np.max(np.abs(res.cov - res.cov.T))))
        eigmin = float(np.linalg.eigvalsh(res.cov).min())
        psd_floor = min(psd_floor, eigmin + 1e-8 * float(np.trace(res.cov)))
    results.append(
        CheckOutcome(
            "irf-coefficient-identities",
            identity_dev <= 1e-12,
            f"max deviation {identity_dev:.3e}",
        )
    )
    results.append(
        CheckOutcome(
            "covariance-symmetry", sym_dev <= 1e-12, f"max asymmetry {sym_dev:.3e}"
        )
    )
    results.append(
        CheckOutcome("covariance-psd", psd_floor >= 0.0, f"margin {psd_floor:.3e}")
    )

    try:
        abs_irfs.validate()
        pw_irfs.validate()
        results.append(CheckOutcome("band-nesting", True, "all horizons nested"))
    except ValueError as err:
        results.append(CheckOutcome("band-nesting", False, str(err)))

    ws = LPWorkspace(ds, spec_for("abs-sign"))
    prob = ws.problem(0)
    if prob.fe_groups is not None:
        prob = absorb_fixed_effects(prob)
        if prob.singleton_rows is not None and prob.singleton_rows.any():
            prob = prob.take(~prob.singleton_rows)
    perm = np.random.default_rng(0).permutation(prob.n_obs)
    base = solve_ols(prob)
    shuffled = solve_ols(prob.take(perm))
    if base.kept_names == shuffled.kept_names:
        cov_a = cluster_covariance(prob.X[:, base.kept], base.residuals, prob.clusters)
        prob_p = prob.take(perm)
        cov_b = cluster_covariance(
            prob_p.X[:, shuffled.kept], shuffled.residuals, prob_p.clusters
        )
        dev = max(
            float(np.max(np.abs(base.beta - shuffled.beta))),
            float(np.max(np.abs(cov_a - cov_b))),
        )
        results.append(
            CheckOutcome(
                "permutation-invariance", dev <= 1e-10, f"max deviation {dev:.3e}"
            )
        )
    else:
        results.append(
            CheckOutcome(
                "permutation-invariance", False, "column drops differ under shuffle"
            )
        )
    return results
