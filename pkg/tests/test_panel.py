import numpy as np
import pytest

from mccs_lab.errors import PanelError
from mccs_lab.package import FEATURE_NAMES, MccsSpec
from mccs_lab.panel import (
    HOLDING_WEEKS,
    N_LAGS,
    TradePanel,
    assemble_panel,
    drop_missing,
    holding_return,
    panel_from_csv,
    panel_to_csv,
    winsorize,
)
from mccs_lab.scenario import ScenarioConfig, generate_history, plant_signal


@pytest.fixture(scope="module")
def history():
    return generate_history(ScenarioConfig(seed=0, years=4.0))


@pytest.fixture(scope="module")
def panel(history):
    return assemble_panel(history, MccsSpec("EUR", 1.0, 1.0, 2.0))


# ---------------------------------------------------------------------------
# holding return
# ---------------------------------------------------------------------------

def test_holding_return_no_change_is_zero():
    assert holding_return(100.0, 100.0, 0.0, 0.0) == 0.0


def test_holding_return_gross_arithmetic():
    assert holding_return(100.0, 110.0, 0.0, 0.0, gross=True) == pytest.approx(0.10)


def test_holding_return_net_formula():
    # (110 - 100 - 0.75*4)/100 - 0.02 = 0.05
    assert holding_return(100.0, 110.0, 4.0, 0.02) == pytest.approx(0.05)


def test_holding_return_degenerate_pv_rejected():
    with pytest.raises(ValueError):
        holding_return(5e-7, 1.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def test_panel_row_count(history):
    p = assemble_panel(history, MccsSpec("EUR", 1.0, 1.0, 2.0))
    n = len(history)
    assert len(p) == n - HOLDING_WEEKS - N_LAGS
    # labeled rows stop 52 weeks before the end of the history
    assert int(p.labeled_mask().sum()) == n - 2 * HOLDING_WEEKS - N_LAGS


def test_short_history_rejected():
    hist = generate_history(ScenarioConfig(seed=0, years=3.0))[:56]
    with pytest.raises(PanelError):
        assemble_panel(hist, MccsSpec("EUR", 1.0, 1.0, 2.0))


def test_lag_chain_identity(panel):
    # lag1 at date d equals the label of the trade entered 53 weeks earlier,
    # which is 53 rows up in the contiguous weekly panel
    for i in range(1, len(panel)):
        j = i - (HOLDING_WEEKS + 1)
        if j >= 0 and np.isfinite(panel.labels[j]):
            assert panel.lags[i, 0] == panel.labels[j]
    for i in range(len(panel)):
        j = i - (HOLDING_WEEKS + 3)
        if j >= 0 and np.isfinite(panel.labels[j]):
            assert panel.lags[i, 2] == panel.labels[j]


def test_tail_rows_have_features_but_no_label(panel):
    tail = panel.labels[-HOLDING_WEEKS:]
    assert np.all(~np.isfinite(tail))
    assert np.all(np.isfinite(panel.X[-1]))


def test_no_lookahead_bit_equality(history):
    """Every value in a row is recomputable from snapshots up to its label
    maturity; truncating the history beyond that changes nothing."""
    spec = MccsSpec("EUR", 1.0, 2.0, 3.0)
    full = assemble_panel(history, spec)
    cut = len(history) - 20
    truncated = assemble_panel(history[:cut], spec)
    m = len(truncated)
    assert truncated.dates == full.dates[:m]
    assert np.array_equal(truncated.features, full.features[:m], equal_nan=True)
    assert np.array_equal(truncated.lags, full.lags[:m], equal_nan=True)
    # labels that had matured inside the truncated span are identical
    matured = np.isfinite(truncated.labels)
    assert np.array_equal(truncated.labels[matured], full.labels[:m][matured])
    # and the truncated panel has no label that the full one lacks
    assert np.all(np.isfinite(full.labels[:m][matured]))


def test_planted_labels_reach_target_correlation(history):
    coef = {"implied_vol": -1.0, "carry": 0.7}
    planted = plant_signal(history, coef, snr=4.0, seed=3)
    p = assemble_panel(planted, MccsSpec("EUR", 1.0, 1.0, 2.0))
    mask = p.training_mask()
    z = (p.features - p.features.mean(0)) / p.features.std(0)
    signal = (-1.0 * z[:, FEATURE_NAMES.index("implied_vol")]
              + 0.7 * z[:, FEATURE_NAMES.index("carry")])
    r = np.corrcoef(signal[mask], p.labels[mask])[0, 1]
    # theoretical best sqrt(4/5) ~ 0.894 against the full-sample z-scores
    assert r > 0.75


def test_planted_zero_coefficients_pure_noise(history):
    planted = plant_signal(history, {}, snr=2.0, seed=5)
    p = assemble_panel(planted, MccsSpec("EUR", 1.0, 1.0, 2.0))
    mask = p.training_mask()
    for j in range(p.features.shape[1]):
        col = p.features[mask, j]
        if col.std() == 0.0:
            continue
        r = np.corrcoef(col, p.labels[mask])[0, 1]
        assert abs(r) < 0.35  # no systematic dependence


def test_planted_determinism(history):
    planted = plant_signal(history, {"pv": 1.0}, snr=2.0, seed=9)
    a = assemble_panel(planted, MccsSpec("EUR", 2.0, 1.0, 1.0))
    b = assemble_panel(planted, MccsSpec("EUR", 2.0, 1.0, 1.0))
    assert np.array_equal(a.labels, b.labels, equal_nan=True)


# ---------------------------------------------------------------------------
# winsorizing
# ---------------------------------------------------------------------------

def _toy_panel(n=200, seed=0):
    rng = np.random.default_rng(seed)
    from datetime import date, timedelta
    dates = tuple(date(2015, 1, 7) + timedelta(weeks=i) for i in range(n))
    features = rng.normal(size=(n, len(FEATURE_NAMES)))
    features[:, 1] = 2.5  # constant column
    lags = rng.normal(size=(n, N_LAGS))
    labels = rng.normal(size=n)
    labels[-52:] = np.nan
    return TradePanel("EUR_1y1y1y", dates, features, lags, labels)


def test_winsorize_clips_to_bounds():
    p = _toy_panel()
    w = winsorize(p, 0.01, 0.95)
    lo, hi = w.winsor_bounds["pv"]
    j = FEATURE_NAMES.index("pv")
    assert np.all(w.features[:, j] >= lo) and np.all(w.features[:, j] <= hi)
    assert np.any(p.features[:, j] > hi)  # something actually got clipped


def test_winsorize_constant_column_unchanged():
    p = _toy_panel()
    w = winsorize(p, 0.01, 0.95)
    assert np.array_equal(w.features[:, 1], p.features[:, 1])


def test_winsorize_idempotent():
    p = _toy_panel()
    w1 = winsorize(p, 0.01, 0.95)
    w2 = winsorize(w1, 0.01, 0.95)
    assert np.array_equal(w1.features, w2.features)
    assert np.array_equal(w1.lags, w2.lags)
    assert np.array_equal(w1.labels, w2.labels, equal_nan=True)


def test_winsorize_bounds_fit_on_training_window_only():
    p = _toy_panel()
    fit = np.zeros(len(p), dtype=bool)
    fit[:100] = True
    w = winsorize(p, 0.01, 0.95, fit_mask=fit)
    j = FEATURE_NAMES.index("pv")
    lo, hi = w.winsor_bounds["pv"]
    # bounds derived from the first 100 rows only
    lo2, hi2 = np.quantile(p.features[:100, j], [0.01, 0.95],
                           method="higher"), None
    assert lo == float(np.quantile(p.features[:100, j], 0.01, method="higher"))
    assert hi == float(np.quantile(p.features[:100, j], 0.95, method="lower"))
    # an extreme value outside the fit window must not move the bounds
    p2 = _toy_panel()
    p2.features[150, j] = 1e9
    w2 = winsorize(p2, 0.01, 0.95, fit_mask=fit)
    assert w2.winsor_bounds["pv"] == (lo, hi)


def test_winsorize_empty_fit_window_rejected():
    p = _toy_panel()
    with pytest.raises(ValueError):
        winsorize(p, fit_mask=np.zeros(len(p), dtype=bool))


# ---------------------------------------------------------------------------
# missing data
# ---------------------------------------------------------------------------

def test_drop_missing_complete_panel_unchanged(panel):
    d = drop_missing(panel)
    assert len(d) == len(panel)


def test_drop_missing_removes_feature_gaps():
    p = _toy_panel()
    p.features[10, FEATURE_NAMES.index("be_width")] = np.nan
    d = drop_missing(p)
    assert len(d) == len(p) - 1
    assert p.dates[10] not in d.dates
    # unmatured tail rows survive
    assert np.all(~np.isfinite(d.labels[-10:]))


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def test_panel_csv_round_trip(panel):
    text = panel_to_csv(panel)
    back = panel_from_csv(text)
    assert back.trade_id == panel.trade_id
    assert back.dates == panel.dates
    assert np.array_equal(back.features, panel.features, equal_nan=True)
    assert np.array_equal(back.lags, panel.lags, equal_nan=True)
    assert np.array_equal(back.labels, panel.labels, equal_nan=True)
    assert panel_to_csv(back) == text
