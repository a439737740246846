import numpy as np
import pytest

from signlp.errors import ConfigError
from signlp.months import parse_month
from signlp.simulate import (
    BURN_IN,
    DGPConfig,
    country_names,
    oracle_irf,
    simulate,
)


def cfg_with(**kw):
    base = dict(countries=4, months=48, rho=0.8, theta_plus=2.0, theta_minus=0.5, seed=5)
    base.update(kw)
    return DGPConfig(**base)


# ---------------------------------------------------------------------------
# oracle paths


def test_oracle_decay_values():
    oracle = oracle_irf(cfg_with(rho=0.9, theta_plus=1.0, theta_minus=0.5), 4)
    assert oracle.irf_plus[2] == pytest.approx(0.81, abs=1e-15)
    # the easing path is the response to a -1 shock
    assert oracle.irf_minus[0] == -0.5
    neg_loading = oracle_irf(cfg_with(rho=0.5, theta_minus=-0.5), 2)
    assert neg_loading.irf_minus[1] == pytest.approx(0.25, abs=1e-15)


def test_symmetric_loadings_mirror():
    oracle = oracle_irf(cfg_with(theta_plus=1.3, theta_minus=1.3), 8)
    assert oracle.irf_plus == pytest.approx(-oracle.irf_minus, abs=0)


def test_zero_persistence_dies_immediately():
    oracle = oracle_irf(cfg_with(rho=0.0), 5)
    assert oracle.irf_plus[0] == 2.0
    assert np.all(oracle.irf_plus[1:] == 0.0)


def test_oracle_matches_forward_simulation():
    # independent check: average impulse-minus-baseline paths of the full
    # recursion (shared noise across arms), 1e5 draws
    cfg = cfg_with(rho=0.85, theta_plus=1.7, theta_minus=0.4)
    horizons = 8
    draws = 100_000
    rng = np.random.default_rng(99)
    future = rng.standard_normal((draws, horizons)) * cfg.shock_scale
    noise = rng.standard_normal((draws, horizons + 1)) * cfg.noise_scale

    def impulse(e):
        return np.where(e > 0, cfg.theta_plus * e, 0.0) + np.where(
            e < 0, cfg.theta_minus * e, 0.0
        )

    def paths(e0):
        y = np.zeros(draws)
        out = np.empty((horizons + 1, draws))
        for t in range(horizons + 1):
            eps_t = np.full(draws, e0) if t == 0 else future[:, t - 1]
            y = cfg.rho * y + impulse(eps_t) + noise[:, t]
            out[t] = y
        return out

    base = paths(0.0)
    diff_plus = (paths(1.0) - base).mean(axis=1)
    diff_minus = (paths(-1.0) - base).mean(axis=1)
    se = (paths(1.0) - base).std(axis=1, ddof=1) / np.sqrt(draws)

    oracle = oracle_irf(cfg, horizons)
    tol = np.maximum(3.0 * se, 1e-10)
    assert np.all(np.abs(diff_plus - oracle.irf_plus) <= tol)
    assert np.all(np.abs(diff_minus - oracle.irf_minus) <= tol)


# ---------------------------------------------------------------------------
# panel generation


def test_same_seed_bit_identical():
    a = simulate(cfg_with())
    b = simulate(cfg_with())
    assert a.panel.equals(b.panel)
    assert a.shocks.entries == b.shocks.entries


def test_different_seed_differs():
    assert not simulate(cfg_with(seed=1)).panel.equals(simulate(cfg_with(seed=2)).panel)


def test_panel_layout():
    sim = simulate(cfg_with())
    assert sim.panel.countries == country_names(4)
    m0, m1 = sim.panel.date_range
    assert m0 == parse_month("2000-01")
    assert m1 - m0 + 1 == 48
    assert set(sim.panel.variables) == {"y", "z", "g"}
    # complete panel has one y and z per cell, one g per month
    assert len(sim.panel) == 4 * 48 * 2 + 48
    assert sorted(sim.shocks.entries) == list(range(m0, m1 + 1))


def test_missing_rate_counts_replay_from_seed():
    cfg = cfg_with(countries=9, months=80, missing_rate=0.3, seed=123)
    sim = simulate(cfg)

    # replay the documented stream order: shocks, fe, noise, missing, controls
    streams = np.random.SeedSequence(cfg.seed).spawn(5)
    rng_miss = np.random.default_rng(streams[3])
    keep_y = rng_miss.random((9, 80)) >= 0.3
    keep_z = rng_miss.random((9, 80)) >= 0.3
    keep_g = rng_miss.random(80) >= 0.3
    expected = int(keep_y.sum() + keep_z.sum() + keep_g.sum())
    assert len(sim.panel) == expected

    counts = sim.panel.frame.groupby("variable").size()
    assert counts["y"] == keep_y.sum()
    assert counts["z"] == keep_z.sum()
    assert counts["g"] == keep_g.sum()


def test_shock_term_exactly_linear_in_shock_and_abs():
    # the impact term rewrites as mean_load * e + half_gap * |e|
    cfg = cfg_with(theta_plus=2.0, theta_minus=0.5)
    eps = np.linspace(-3, 3, 13)
    impulse = np.where(eps > 0, cfg.theta_plus * eps, 0.0) + np.where(
        eps < 0, cfg.theta_minus * eps, 0.0
    )
    recon = 0.5 * (cfg.theta_plus + cfg.theta_minus) * eps + 0.5 * (
        cfg.theta_plus - cfg.theta_minus
    ) * np.abs(eps)
    assert impulse == pytest.approx(recon, abs=1e-12)


def test_student_t_shocks_supported():
    sim = simulate(cfg_with(shock_dist="student-t", student_df=4.0))
    values = np.array(list(sim.shocks.entries.values()))
    assert np.all(np.isfinite(values))


def test_burn_in_value():
    assert BURN_IN == 100


@pytest.mark.parametrize(
    "kw",
    [
        dict(rho=1.0),
        dict(rho=-0.1),
        dict(missing_rate=1.0),
        dict(noise_scale=-1.0),
        dict(shock_dist="uniform"),
        dict(countries=0),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        cfg_with(**kw)


def test_oracle_csv(tmp_path):
    sim = simulate(cfg_with(), horizons=3)
    path = tmp_path / "oracle.csv"
    sim.oracle.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "h,irf_plus_true,irf_minus_true"
    assert len(lines) == 5
    h, plus, minus = lines[1].split(",")
    assert (h, float(plus), float(minus)) == ("0", 2.0, -0.5)
