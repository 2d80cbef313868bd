"""Per-trade supervised panels: features at t, net excess 1y return label,
lagged realized returns, winsorizing, missing-data handling.

One row per weekly trade date.  The label of the row dated t is the net
excess holding return of the package entered at t and unwound 52 weekly
steps later; lag k is the label of the row entered 52+k weeks earlier, the
k-th most recent return already realized at decision time.  Head rows
missing a lag are trimmed; tail rows whose label has not matured are kept
for out-of-sample prediction.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace

import numpy as np

from .errors import PanelError
from .package import FEATURE_NAMES, build_package, feature_vector, package_value
from .scenario import PlantedHistory

HOLDING_WEEKS = 52
N_LAGS = 3
LAG_NAMES = ("lag1", "lag2", "lag3")
COLUMN_NAMES = FEATURE_NAMES + LAG_NAMES          # model inputs, in order
PV_EPSILON = 1e-6
DEFAULT_COST_MULT = 0.75


def holding_return(pv_t: float, pv_t1y: float, vega_t: float, funding: float,
                   cost_mult: float = DEFAULT_COST_MULT, gross: bool = False) -> float:
    """Net excess 1y holding return.

    (pv_t1y - pv_t - cost_mult * vega_t) / pv_t - funding, with the vega
    term the combined entry-and-unwind transaction cost.  The gross flag
    drops both the cost and the funding leg.
    """
    if abs(pv_t) <= PV_EPSILON:
        raise ValueError(f"degenerate entry PV {pv_t!r}")
    if gross:
        return (pv_t1y - pv_t) / pv_t
    return (pv_t1y - pv_t - cost_mult * vega_t) / pv_t - funding


@dataclass(frozen=True)
class TradePanel:
    """Time-indexed feature/label table for one trade.

    features: (n, 12) in FEATURE_NAMES order; lags: (n, 3); labels: (n,)
    with nan marking an absent (unmatured or degenerate) label.  Rows are
    consecutive weekly dates, strictly increasing.
    """

    trade_id: str
    dates: tuple
    features: np.ndarray
    lags: np.ndarray
    labels: np.ndarray
    winsor_bounds: dict | None = None

    def __post_init__(self):
        n = len(self.dates)
        if not (self.features.shape == (n, len(FEATURE_NAMES))
                and self.lags.shape == (n, N_LAGS) and self.labels.shape == (n,)):
            raise ValueError("inconsistent panel array shapes")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("panel dates must be strictly increasing")

    def __len__(self):
        return len(self.dates)

    @property
    def X(self) -> np.ndarray:
        return np.hstack([self.features, self.lags])

    def labeled_mask(self) -> np.ndarray:
        return np.isfinite(self.labels)

    def complete_mask(self) -> np.ndarray:
        """Rows usable as model input: every feature and lag present."""
        return np.all(np.isfinite(self.X), axis=1)

    def training_mask(self) -> np.ndarray:
        return self.complete_mask() & self.labeled_mask()


def _planted_labels(panel_features: np.ndarray, planted: PlantedHistory,
                    trade_id: str, n_labeled: int) -> np.ndarray:
    """Realize planted labels: unit-variance standardized-feature combination
    plus N(0, 1/snr) noise, scaled by label_scale.  Zero coefficients give
    pure noise."""
    n = panel_features.shape[0]
    mu = np.nanmean(panel_features, axis=0)
    sd = np.nanstd(panel_features, axis=0)
    sd[sd == 0.0] = 1.0
    z = (panel_features - mu) / sd
    signal = np.zeros(n)
    for name, coef in planted.coefficients.items():
        signal += coef * z[:, FEATURE_NAMES.index(name)]
    s_sd = np.nanstd(signal)
    if s_sd > 0.0:
        signal = signal / s_sd
    key = zlib.crc32(trade_id.encode())
    noise = np.array([
        np.random.default_rng(np.random.SeedSequence(
            entropy=(planted.seed, key, i))).standard_normal()
        for i in range(n)])
    labels = planted.label_scale * (signal + noise / np.sqrt(planted.snr))
    labels[n_labeled:] = np.nan
    return labels


def assemble_panel(history, spec, cost_mult: float = DEFAULT_COST_MULT,
                   gross: bool = False) -> TradePanel:
    """Build the weekly panel for one trade over a market history.

    `history` is a list of MarketSnapshot or a PlantedHistory; with the
    latter the labels come from the planted ground-truth model instead of
    repricing-based holding returns.
    """
    planted = history if isinstance(history, PlantedHistory) else None
    snaps = list(history.snapshots) if planted is not None else list(history)
    n = len(snaps)
    head = HOLDING_WEEKS + N_LAGS
    if n <= head + 1:
        raise PanelError(
            f"history of {n} weeks cannot support {HOLDING_WEEKS}-week labels "
            f"plus {N_LAGS} lags")

    features = np.empty((n, len(FEATURE_NAMES)))
    packages = []
    for i, snap in enumerate(snaps):
        pkg = build_package(spec, snap)
        packages.append(pkg)
        features[i] = feature_vector(pkg, snap).as_array()

    n_labeled = n - HOLDING_WEEKS
    if planted is not None:
        labels_full = _planted_labels(features, planted, spec.trade_id, n_labeled)
    else:
        labels_full = np.full(n, np.nan)
        for i in range(n_labeled):
            pv_t = features[i, FEATURE_NAMES.index("pv")]
            vega_t = features[i, FEATURE_NAMES.index("vega")]
            if abs(pv_t) <= PV_EPSILON:
                continue  # degenerate denominator: label stays absent
            pv_t1y = package_value(packages[i], snaps[i + HOLDING_WEEKS], age=1.0)
            labels_full[i] = holding_return(pv_t, pv_t1y, vega_t,
                                            snaps[i].funding_rate, cost_mult, gross)

    lags_full = np.full((n, N_LAGS), np.nan)
    for k in range(1, N_LAGS + 1):
        shift = HOLDING_WEEKS + k
        lags_full[shift:, k - 1] = labels_full[:n - shift]

    rows = slice(head, n)
    return TradePanel(
        trade_id=spec.trade_id,
        dates=tuple(s.date for s in snaps[rows]),
        features=features[rows].copy(),
        lags=lags_full[rows].copy(),
        labels=labels_full[rows].copy(),
    )


# ---------------------------------------------------------------------------
# winsorizing / missing data
# ---------------------------------------------------------------------------

def winsor_bounds(values: np.ndarray, low_q: float, high_q: float):
    """Order-statistic quantile bounds (inner-rounded so clipping is
    idempotent); nan values are ignored."""
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return (np.nan, np.nan)
    lo = float(np.quantile(finite, low_q, method="higher"))
    hi = float(np.quantile(finite, high_q, method="lower"))
    if lo > hi:
        lo = hi
    return lo, hi


def winsorize(panel: TradePanel, low_q: float = 0.01, high_q: float = 0.95,
              fit_mask: np.ndarray | None = None) -> TradePanel:
    """Clip every feature, lag and label column to its [low_q, high_q]
    quantiles estimated on the fit window (training rows) only."""
    if fit_mask is None:
        fit_mask = np.ones(len(panel), dtype=bool)
    if not np.any(fit_mask):
        raise ValueError("winsorize fit window is empty")

    bounds = {}
    features = panel.features.copy()
    lags = panel.lags.copy()
    labels = panel.labels.copy()
    for j, name in enumerate(FEATURE_NAMES):
        lo, hi = winsor_bounds(panel.features[fit_mask, j], low_q, high_q)
        bounds[name] = (lo, hi)
        if np.isfinite(lo):
            features[:, j] = np.clip(features[:, j], lo, hi)
    for k, name in enumerate(LAG_NAMES):
        lo, hi = winsor_bounds(panel.lags[fit_mask, k], low_q, high_q)
        bounds[name] = (lo, hi)
        if np.isfinite(lo):
            lags[:, k] = np.clip(lags[:, k], lo, hi)
    lo, hi = winsor_bounds(panel.labels[fit_mask], low_q, high_q)
    bounds["label"] = (lo, hi)
    if np.isfinite(lo):
        labels = np.clip(labels, lo, hi)
    return replace(panel, features=features, lags=lags, labels=labels,
                   winsor_bounds=bounds)


def drop_missing(panel: TradePanel) -> TradePanel:
    """Remove rows with an absent feature or lag; rows whose only absence is
    an unmatured label are kept for out-of-sample prediction."""
    keep = panel.complete_mask()
    return replace(panel,
                   dates=tuple(d for d, k in zip(panel.dates, keep) if k),
                   features=panel.features[keep].copy(),
                   lags=panel.lags[keep].copy(),
                   labels=panel.labels[keep].copy())


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

PANEL_CSV_HEADER = "date,trade," + ",".join(COLUMN_NAMES) + ",label"


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else repr(float(x))


def panel_to_csv(panel: TradePanel) -> str:
    lines = [PANEL_CSV_HEADER]
    X = panel.X
    for i, d in enumerate(panel.dates):
        cells = [d.isoformat(), panel.trade_id]
        cells += [_fmt(v) for v in X[i]]
        cells.append(_fmt(panel.labels[i]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def panel_from_csv(text: str) -> TradePanel:
    from datetime import date as _date

    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != PANEL_CSV_HEADER:
        raise ValueError("unrecognized panel CSV header")
    dates, rows, labels = [], [], []
    trade_id = None
    for ln in lines[1:]:
        cells = ln.split(",")
        dates.append(_date.fromisoformat(cells[0]))
        trade_id = cells[1]
        rows.append([float(c) if c else np.nan for c in cells[2:-1]])
        labels.append(float(cells[-1]) if cells[-1] else np.nan)
    arr = np.array(rows)
    return TradePanel(trade_id=trade_id, dates=tuple(dates),
                      features=arr[:, :len(FEATURE_NAMES)],
                      lags=arr[:, len(FEATURE_NAMES):],
                      labels=np.array(labels))
