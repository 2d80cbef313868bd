import math
from datetime import date

import numpy as np
import pytest

from mccs_lab.scenario import (
    MarketSnapshot,
    PlantedHistory,
    ScenarioConfig,
    generate_history,
    plant_signal,
    snapshots_from_csv,
    snapshots_to_csv,
)


def test_same_seed_identical_history():
    cfg = ScenarioConfig(seed=7, years=3.0)
    h1 = generate_history(cfg)
    h2 = generate_history(cfg)
    assert len(h1) == len(h2)
    for a, b in zip(h1, h2):
        assert a.date == b.date
        assert np.array_equal(a.curve.zero_rates, b.curve.zero_rates)
        assert np.array_equal(a.surface.alpha, b.surface.alpha)
        assert a.funding_rate == b.funding_rate


def test_different_seed_differs():
    h1 = generate_history(ScenarioConfig(seed=1, years=3.0))
    h2 = generate_history(ScenarioConfig(seed=2, years=3.0))
    assert not np.array_equal(h1[-1].curve.zero_rates, h2[-1].curve.zero_rates)


def test_zero_vols_constant_history():
    cfg = ScenarioConfig(seed=0, years=3.0, curve_sigma=0.0, alpha_sigma=0.0,
                         alpha_idio_sigma=0.0)
    hist = generate_history(cfg)
    first = hist[0]
    for s in hist:
        assert np.array_equal(s.curve.zero_rates, first.curve.zero_rates)
        assert np.array_equal(s.surface.alpha, first.surface.alpha)


def test_snapshot_count_10y_weekly():
    n = len(ScenarioConfig(seed=0, years=10.0).wednesdays())
    assert abs(n - 522) <= 1


def test_dates_strictly_increasing_wednesdays():
    hist = generate_history(ScenarioConfig(seed=3, years=3.0))
    dates = [s.date for s in hist]
    assert all(b > a for a, b in zip(dates, dates[1:]))
    assert all(d.weekday() == 2 for d in dates)


def test_snapshots_respect_floors():
    for seed in range(4):
        for s in generate_history(ScenarioConfig(seed=seed, years=5.0)):
            s.validate()  # raises on any violated invariant


def test_years_below_minimum_rejected():
    with pytest.raises(ValueError):
        ScenarioConfig(seed=0, years=2.0)


def test_curve_level_mean_reverts_to_long_run():
    cfg = ScenarioConfig(seed=11, years=10.0)
    hist = generate_history(cfg)
    # recover the level from the shortest knot minus the shape offset
    shape0 = cfg.curve_slope * (1.0 - math.exp(-0.25 / cfg.curve_slope_tau))
    levels = np.array([s.curve.zero_rates[0] - shape0 for s in hist])
    stat_sd = cfg.curve_sigma / math.sqrt(2.0 * cfg.curve_kappa)
    se_mean = stat_sd * math.sqrt(2.0 / (cfg.curve_kappa * cfg.years))
    assert abs(levels.mean() - cfg.curve_theta) <= 3.0 * se_mean


def test_surface_interpolation_matches_knots_and_extrapolates_flat():
    hist = generate_history(ScenarioConfig(seed=5, years=3.0))
    sf = hist[-1].surface
    for i in (0, 3):
        for j in (0, 2):
            assert sf.alpha_at(sf.expiries[i], sf.tenors[j]) == pytest.approx(
                sf.alpha[i, j], rel=1e-12)
    assert sf.alpha_at(0.01, 1.0) == pytest.approx(sf.alpha[0, 0], rel=1e-12)
    assert sf.alpha_at(99.0, 99.0) == pytest.approx(sf.alpha[-1, -1], rel=1e-12)


def test_csv_round_trip_bit_exact():
    hist = generate_history(ScenarioConfig(seed=9, years=3.0))[:10]
    text = snapshots_to_csv(hist)
    back = snapshots_from_csv(text)
    assert len(back) == len(hist)
    for a, b in zip(hist, back):
        assert a.date == b.date
        assert np.array_equal(a.curve.tenors, b.curve.tenors)
        assert np.array_equal(a.curve.zero_rates, b.curve.zero_rates)
        assert np.array_equal(a.surface.alpha, b.surface.alpha)
        assert (a.surface.beta, a.surface.rho_sabr, a.surface.nu) == \
               (b.surface.beta, b.surface.rho_sabr, b.surface.nu)
        assert a.funding_rate == b.funding_rate
    assert snapshots_to_csv(back) == text


def test_plant_signal_validation():
    hist = generate_history(ScenarioConfig(seed=0, years=3.0))
    with pytest.raises(ValueError):
        plant_signal(hist, {"implied_vol": 1.0}, snr=0.0)
    with pytest.raises(ValueError):
        plant_signal(hist, {"not_a_feature": 1.0}, snr=2.0)
    planted = plant_signal(hist, {"implied_vol": -1.0}, snr=2.0, seed=4)
    assert isinstance(planted, PlantedHistory)
    assert len(planted) == len(hist)
    assert planted[0] is hist[0]
