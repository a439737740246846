"""Independent per-horizon row counting, used to audit estimation manifests.

This deliberately re-derives sample sizes from the panel CSV with plain
pandas frames and none of the engine's assembly code: a usable row at
horizon h needs the outcome at t+h, and every control lag at t-1..t-L; with
fixed effects on, rows in singleton (country, calendar-month) cells carry no
identifying variation and are excluded.
"""

import pandas as pd


def _month_index(date: str) -> int:
    year, month = date.split("-")
    return int(year) * 12 + int(month) - 1


def expected_nobs(
    panel_csv,
    outcome: str,
    controls: list[str],
    global_controls: list[str],
    lags: int,
    horizons: int,
    fixed_effects: bool = True,
    countries: list[str] | None = None,
    start: str | None = None,
    end: str | None = None,
) -> dict[int, int]:
    df = pd.read_csv(panel_csv)
    df["m"] = df["date"].map(_month_index)
    if countries is not None:
        df = df[df["country"].isin(countries)]
    if start is not None:
        df = df[df["m"] >= _month_index(start)]
    if end is not None:
        df = df[df["m"] <= _month_index(end)]

    has = {
        var: set(zip(sub["country"], sub["m"]))
        for var, sub in df.groupby("variable")
    }
    global_months = {
        var: {m for (_c, m) in has.get(var, set())} for var in global_controls
    }
    country_list = sorted(df["country"].unique())
    m_lo, m_hi = int(df["m"].min()), int(df["m"].max())

    counts: dict[int, int] = {}
    for h in range(horizons + 1):
        rows = []
        for country in country_list:
            for t in range(m_lo, m_hi + 1 - h):
                if (country, t + h) not in has.get(outcome, set()):
                    continue
                ok = True
                for var in controls:
                    for k in range(1, lags + 1):
                        if (country, t - k) not in has.get(var, set()):
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    for var in global_controls:
                        for k in range(1, lags + 1):
                            if t - k not in global_months[var]:
                                ok = False
                                break
                        if not ok:
                            break
                if ok:
                    rows.append((country, t))
        if fixed_effects:
            sizes: dict[tuple[str, int], int] = {}
            for country, t in rows:
                key = (country, t % 12)
                sizes[key] = sizes.get(key, 0) + 1
            rows = [r for r in rows if sizes[(r[0], r[1] % 12)] > 1]
        counts[h] = len(rows)
    return counts
