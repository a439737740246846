"""Command-line front end.

Subcommands: ``identify`` (event surprises -> monthly shock series),
``estimate`` (panel + shocks -> IRF CSVs, fit dumps, manifest), ``simulate``
(synthetic panel with known truth), and ``check`` (invariant battery on given
inputs).

Exit codes: 0 success; 2 schema or configuration error; 3 identification
failure; 4 degenerate estimation.  All outputs are deterministic functions of
the inputs and flags: rerunning a command byte-identically reproduces its
files, regardless of ``--jobs``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .engine import HorizonFailure
from .errors import (
    ConfigError,
    DegenerateCovarianceError,
    DegenerateInputError,
    IdentificationFailureError,
    SchemaError,
    SignLPError,
)
from .irf import estimate_irfs
from .months import format_month, parse_month
from .panel import apply_declared_transforms, load_panel, load_schema, write_schema
from .shocks import (
    DEFAULT_GRID_STEP,
    ShockSeries,
    aggregate_monthly,
    identify_rotation,
    load_events,
    poor_mans_classify,
)
from .simulate import DGPConfig, simulate
from .specs import DEFAULT_HORIZONS, DEFAULT_LAGS, FAMILIES, LPSpecification
from .validation import run_check_battery

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_IDENTIFICATION = 3
EXIT_DEGENERATE = 4


def _exit_code(err: SignLPError) -> int:
    if isinstance(
        err, (IdentificationFailureError, DegenerateCovarianceError, DegenerateInputError)
    ):
        return EXIT_IDENTIFICATION
    if isinstance(err, (SchemaError, ConfigError)):
        return EXIT_SCHEMA
    return EXIT_DEGENERATE


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return p


def _parse_month_flag(value: str | None, flag: str) -> int | None:
    if value is None:
        return None
    try:
        return parse_month(value)
    except ValueError as exc:
        raise ConfigError(f"{flag} expects YYYY-MM: {exc}") from exc


# ---------------------------------------------------------------------------
# identify


def cmd_identify(args) -> int:
    events_path = _require_file(args.events, "event CSV")
    events = load_events(events_path)
    start = _parse_month_flag(args.start_date, "--start-date")
    end = _parse_month_flag(args.end_date, "--end-date")
    dates = [e.date for e in events]

    report: dict = {"n_events": len(events), "method": args.method}
    if args.method == "rotation":
        grid_step = np.deg2rad(args.grid_deg)
        rotation = identify_rotation(events, grid_step=grid_step)
        series = aggregate_monthly(
            dates, rotation.mp, "median-rotation", "standard-deviation"
        )
        report.update(
            {
                "grid_step_rad": grid_step,
                "theta_star_rad": rotation.theta_star,
                "theta_star_deg": float(np.rad2deg(rotation.theta_star)),
                "n_admissible": int(len(rotation.admissible)),
                "admissible_arc_width_rad": float(len(rotation.admissible) * grid_step),
                "impact_matrix": [[float(v) for v in row] for row in rotation.impact],
            }
        )
    else:
        mp, info = poor_mans_classify(events)
        series = aggregate_monthly(dates, mp, "poor-man", "percentage-point")
        report["classification_counts"] = {
            "mp": int(np.sum(mp != 0.0)),
            "info": int(np.sum(info != 0.0)),
            "zero": int(np.sum((mp == 0.0) & (info == 0.0))),
        }
    series.to_csv(args.out, sidecar=report, start=start, end=end)
    print(f"wrote {args.out} ({len(events)} events, method={args.method})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate


def _split_list(value: str | None) -> list[str] | None:
    if value is None:
        return None
    items = [v.strip() for v in value.split(",") if v.strip()]
    return items or None


def cmd_estimate(args) -> int:
    panel_path = _require_file(args.panel, "panel CSV")
    schema_path = _require_file(args.schema, "schema file")
    shocks_path = _require_file(args.shocks, "shock CSV")
    if args.cluster != "date":
        raise ConfigError(f"only --cluster date is supported, got {args.cluster!r}")
    bands = tuple(float(b) for b in args.bands.split(","))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    schema = load_schema(schema_path)
    ds, report = load_panel(panel_path, schema)

    countries = _split_list(args.countries)
    start = _parse_month_flag(args.start_date, "--start-date")
    end = _parse_month_flag(args.end_date, "--end-date")
    windows = None
    if args.country_windows:
        windows_path = _require_file(args.country_windows, "country windows file")
        with open(windows_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        windows = {
            c: (parse_month(v["start"]), parse_month(v["end"])) for c, v in raw.items()
        }
    if countries or start is not None or end is not None or windows:
        ds = ds.restrict(countries=countries, start=start, end=end, windows=windows)
    if ds.frame.empty:
        raise ConfigError("no observations left after sample restriction")
    ds = apply_declared_transforms(ds)

    shocks = ShockSeries.from_csv(shocks_path)
    present = set(ds.frame["variable"].unique())
    outcomes = args.outcome or [
        n for n, d in ds.declarations.items() if d.role == "outcome" and n in present
    ]
    if not outcomes:
        raise ConfigError("no outcome variables to estimate")
    controls = _split_list(args.controls)
    if controls is None:
        controls = [
            n
            for n, d in ds.declarations.items()
            if d.role in ("control", "global-control") and n in present
        ]

    config = {
        "command": "estimate",
        "version": __version__,
        "panel": str(args.panel),
        "schema": str(args.schema),
        "shocks": str(args.shocks),
        "family": args.family,
        "outcomes": list(outcomes),
        "controls": list(controls),
        "lags": args.lags,
        "horizons": args.horizons,
        "fixed_effects": not args.no_fe,
        "cluster": args.cluster,
        "bands": list(bands),
        "countries": countries,
        "start_date": args.start_date,
        "end_date": args.end_date,
        "country_windows": str(args.country_windows) if args.country_windows else None,
    }
    manifest: dict = {
        "command": "estimate",
        "config": config,
        "config_hash": _config_hash(config),
        "load_report": report.to_dict(),
        "sample": {
            "countries": ds.countries,
            "start": format_month(ds.date_range[0]),
            "end": format_month(ds.date_range[1]),
            "observations": len(ds),
        },
        "outcomes": {},
        "files": {},
    }

    written: list[Path] = []
    for outcome in outcomes:
        spec = LPSpecification(
            family=args.family,
            outcome=outcome,
            shock=shocks,
            controls=tuple(controls),
            lags=args.lags,
            fixed_effects=not args.no_fe,
            horizons=args.horizons,
            band_levels=bands,
        )
        irfs, results = estimate_irfs(ds, spec, jobs=args.jobs)
        irf_path = out_dir / f"irf_{outcome}.csv"
        fits_path = out_dir / f"fits_{outcome}.json"
        irfs.to_csv(irf_path)
        fits = [r.to_dict() for r in results if not isinstance(r, HorizonFailure)]
        _write_json(fits_path, {"outcome": outcome, "fits": fits})
        written += [irf_path, fits_path]

        per_h = {str(f["h"]): f["n_obs"] for f in fits}
        manifest["outcomes"][outcome] = {
            "files": {"irf": irf_path.name, "fits": fits_path.name},
            "n_obs": per_h,
            "n_clusters": {str(f["h"]): f["n_clusters"] for f in fits},
            "dropped_columns": {
                str(f["h"]): f["dropped_columns"] for f in fits if f["dropped_columns"]
            },
            "failures": [
                {"h": r.h, "reason": r.reason}
                for r in results
                if isinstance(r, HorizonFailure)
            ],
        }

    manifest["files"] = {p.name: _sha256(p) for p in written}
    _write_json(out_dir / "manifest.json", manifest)
    print(f"wrote {len(written) + 1} files to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    cfg = DGPConfig(
        countries=args.countries,
        months=args.months,
        rho=args.rho,
        theta_plus=args.theta_plus,
        theta_minus=args.theta_minus,
        shock_dist=args.shock_dist,
        shock_scale=args.shock_scale,
        student_df=args.student_df,
        fe_magnitude=args.fe_magnitude,
        noise_scale=args.noise_scale,
        missing_rate=args.missing_rate,
        seed=args.seed,
        start=args.start_date,
    )
    sim = simulate(cfg, horizons=args.horizons)
    sim.panel.to_csv(args.out_panel)
    sim.oracle.to_csv(args.out_oracle)
    if args.out_schema:
        from .simulate import schema

        write_schema(args.out_schema, schema())
    if args.out_shocks:
        m0, m1 = sim.panel.date_range
        sim.shocks.to_csv(
            args.out_shocks,
            sidecar={"seed": cfg.seed, "config": asdict(cfg)},
            start=m0,
            end=m1,
        )
    print(
        f"wrote panel ({len(sim.panel)} observations, "
        f"{cfg.countries} countries x {cfg.months} months) and oracle"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    panel_path = _require_file(args.panel, "panel CSV")
    schema_path = _require_file(args.schema, "schema file")
    if args.shocks:
        _require_file(args.shocks, "shock CSV")
    outcomes = run_check_battery(
        panel_path,
        schema_path,
        shocks_path=args.shocks,
        outcome=args.outcome,
        lags=args.lags,
        horizons=args.horizons,
    )
    failed = 0
    for oc in outcomes:
        status = "PASS" if oc.passed else "FAIL"
        failed += not oc.passed
        print(f"CHECK {oc.name}: {status} ({oc.detail})")
    return EXIT_OK if failed == 0 else EXIT_DEGENERATE


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signlp",
        description="Sign-dependent panel local projections for externally "
        "identified monetary policy shocks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_id = sub.add_parser("identify", help="event surprises -> monthly shock series")
    p_id.add_argument("--events", required=True, help="event CSV (date,stock_surprise,rate_...)")
    p_id.add_argument("--method", choices=("rotation", "poor-man"), default="rotation")
    p_id.add_argument("--grid-deg", type=float, default=float(np.rad2deg(DEFAULT_GRID_STEP)),
                      help="rotation grid step in degrees")
    p_id.add_argument("--start-date", help="densify the output from this YYYY-MM")
    p_id.add_argument("--end-date", help="densify the output to this YYYY-MM")
    p_id.add_argument("--out", required=True, help="output shock CSV")
    p_id.set_defaults(func=cmd_identify)

    p_est = sub.add_parser("estimate", help="panel + shocks -> IRFs")
    p_est.add_argument("--panel", required=True)
    p_est.add_argument("--schema", required=True)
    p_est.add_argument("--shocks", required=True)
    p_est.add_argument("--out-dir", required=True)
    p_est.add_argument("--family", choices=FAMILIES, default="abs-sign")
    p_est.add_argument("--outcome", action="append",
                       help="outcome variable (repeatable; default: all declared outcomes)")
    p_est.add_argument("--controls", help="comma list (default: all declared controls)")
    p_est.add_argument("--lags", type=int, default=DEFAULT_LAGS)
    p_est.add_argument("--horizons", type=int, default=DEFAULT_HORIZONS)
    p_est.add_argument("--no-fe", action="store_true",
                       help="drop country-by-calendar-month fixed effects")
    p_est.add_argument("--cluster", default="date", help="clustering level (only 'date')")
    p_est.add_argument("--bands", default="0.68,0.90", help="comma list of coverage levels")
    p_est.add_argument("--countries", help="comma list of country codes to keep")
    p_est.add_argument("--start-date", help="keep months >= YYYY-MM")
    p_est.add_argument("--end-date", help="keep months <= YYYY-MM")
    p_est.add_argument("--country-windows",
                       help="JSON file {country: {start, end}} of inclusion windows")
    p_est.add_argument("--jobs", type=int, default=1, help="horizon-level parallelism")
    p_est.set_defaults(func=cmd_estimate)

    p_sim = sub.add_parser("simulate", help="synthetic panel with known truth")
    p_sim.add_argument("--countries", type=int, default=20)
    p_sim.add_argument("--months", type=int, default=240)
    p_sim.add_argument("--rho", type=float, default=0.9)
    p_sim.add_argument("--theta-plus", type=float, default=2.0)
    p_sim.add_argument("--theta-minus", type=float, default=0.5)
    p_sim.add_argument("--shock-dist", choices=("gaussian", "student-t"), default="gaussian")
    p_sim.add_argument("--shock-scale", type=float, default=1.0)
    p_sim.add_argument("--student-df", type=float, default=5.0)
    p_sim.add_argument("--fe-magnitude", type=float, default=1.0)
    p_sim.add_argument("--noise-scale", type=float, default=1.0)
    p_sim.add_argument("--missing-rate", type=float, default=0.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--start-date", default="2000-01")
    p_sim.add_argument("--horizons", type=int, default=DEFAULT_HORIZONS)
    p_sim.add_argument("--out-panel", required=True)
    p_sim.add_argument("--out-oracle", required=True)
    p_sim.add_argument("--out-schema")
    p_sim.add_argument("--out-shocks")
    p_sim.set_defaults(func=cmd_simulate)

    p_chk = sub.add_parser("check", help="run the invariant battery on inputs")
    p_chk.add_argument("--panel", required=True)
    p_chk.add_argument("--schema", required=True)
    p_chk.add_argument("--shocks")
    p_chk.add_argument("--outcome")
    p_chk.add_argument("--lags", type=int, default=2)
    p_chk.add_argument("--horizons", type=int, default=4)
    p_chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SignLPError as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code(err)


if __name__ == "__main__":
    sys.exit(main())
