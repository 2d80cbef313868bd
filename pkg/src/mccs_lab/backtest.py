"""Nested k-rolling cross-validation walk-forward harness.

Outer loop: every week past the 2-year warm-up, train on all rows whose
1y labels have matured by the prediction date (expanding window with a
52-week purge), tune hyperparameters with 5 sequential inner folds after a
1-year inner warm-up, refit, predict that week's row.

Winsor bounds and standardization stats are refit on each step's training
window only.  Every (trade, family, step) cell derives its own RNG seed,
so results are independent of evaluation order and parallelism.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import models
from .models import ModelSpec, default_hyper, min_rows
from .models.base import standardize_training
from .models.kernel import krr_grid_mse, rbf_kernel
from .models.mlp import train_mlp_batch
from .models.svr import _solve_path
from .panel import COLUMN_NAMES, TradePanel, winsor_bounds
from .package import FEATURE_NAMES

HOLDING_WEEKS = 52


@dataclass(frozen=True)
class CvScheme:
    """Warm-ups, fold counts and the purge gap, in weekly steps."""

    outer_warmup: int = 104    # 2 years
    outer_step: int = 1        # 1 week
    inner_warmup: int = 52     # 1 year
    inner_folds: int = 5
    purge_gap: int = 52        # = label horizon

    def __post_init__(self):
        if self.purge_gap < HOLDING_WEEKS:
            raise ValueError("purge gap must cover the 52-week label horizon")
        if self.inner_folds < 2:
            raise ValueError("need at least 2 inner folds")
        if self.outer_step < 1:
            raise ValueError("outer step must be >= 1 week")


@dataclass(frozen=True)
class PredictionRecord:
    date: object
    trade_id: str
    family: str
    prediction: float
    realized: float            # nan until the label matures
    hyper: dict
    row_index: int
    train_end_index: int       # newest training row (audit: purge invariant)
    n_train: int


@dataclass(frozen=True)
class SkippedStep:
    date: object
    trade_id: str
    family: str
    row_index: int
    reason: str


def cell_seed(run_seed: int, trade_index: int, family_index: int, step: int) -> int:
    ss = np.random.SeedSequence(entropy=(run_seed, trade_index, family_index, step))
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# inner CV
# ---------------------------------------------------------------------------

def _inner_fold_slices(n_train: int, scheme: CvScheme):
    block = (n_train - scheme.inner_warmup) // scheme.inner_folds
    out = []
    for i in range(scheme.inner_folds):
        start = scheme.inner_warmup + i * block
        out.append((slice(0, start), slice(start, start + block)))
    return out


def _mse(pred, truth) -> float:
    return float(np.mean((np.asarray(pred) - truth) ** 2))


def _generic_fold_mses(spec, X, y, folds, seed):
    out = np.zeros((len(folds), len(spec.grid)))
    for fi, (tr, va) in enumerate(folds):
        for gi, hyper in enumerate(spec.grid):
            m = models.fit(spec, X[tr], y[tr], seed=cell_seed(seed, 0, fi, gi),
                           hyper=hyper)
            out[fi, gi] = _mse(models.predict(m, X[va]), y[va])
    return out


def _knn_fold_mses(spec, X, y, folds, seed):
    out = np.zeros((len(folds), len(spec.grid)))
    for fi, (tr, va) in enumerate(folds):
        Xs, ys, xm, xs, ym, ysd = standardize_training(X[tr], y[tr])
        Xv = (X[va] - xm) / xs
        d2 = (np.sum(Xv ** 2, axis=1)[:, None] + np.sum(Xs ** 2, axis=1)[None, :]
              - 2.0 * Xv @ Xs.T)
        order = np.argsort(d2, axis=1, kind="stable")
        for gi, hyper in enumerate(spec.grid):
            k = min(int(hyper["k"]), Xs.shape[0])
            pred = ym + ysd * ys[order[:, :k]].mean(axis=1)
            out[fi, gi] = _mse(pred, y[va])
    return out


def _krr_fold_mses(spec, X, y, folds, seed):
    lams = sorted({g["lam"] for g in spec.grid}, reverse=True)
    gammas = sorted({g["gamma"] for g in spec.grid})
    out = np.zeros((len(folds), len(spec.grid)))
    for fi, (tr, va) in enumerate(folds):
        Xs, ys, xm, xs, ym, ysd = standardize_training(X[tr], y[tr])
        Xv = (X[va] - xm) / xs
        yv_std = (y[va] - ym) / ysd
        grid_mse = krr_grid_mse(Xs, ys, Xv, yv_std, lams, gammas)
        for gi, hyper in enumerate(spec.grid):
            mse_std = grid_mse[(hyper["lam"], hyper["gamma"])]
            out[fi, gi] = mse_std * ysd * ysd
    return out


def _svr_fold_mses(spec, X, y, folds, seed):
    Cs = sorted({g["C"] for g in spec.grid})
    gammas = sorted({g["gamma"] for g in spec.grid})
    out = np.zeros((len(folds), len(spec.grid)))
    for fi, (tr, va) in enumerate(folds):
        Xs, ys, xm, xs, ym, ysd = standardize_training(X[tr], y[tr])
        Xv = (X[va] - xm) / xs
        for gamma in gammas:
            K = rbf_kernel(Xs, Xs, gamma)
            K_val = rbf_kernel(Xv, Xs, gamma)
            path = _solve_path(K, ys, Cs)
            for C, (beta, b) in path.items():
                pred = ym + ysd * (K_val @ beta + b)
                gi = spec.grid.index({"C": C, "gamma": gamma})
                out[fi, gi] = _mse(pred, y[va])
    return out


def _mlp_fold_mses(spec, X, y, folds, seed):
    combos = [(int(g["hidden"]), float(g["lam"])) for g in spec.grid]
    out = np.zeros((len(folds), len(spec.grid)))
    for fi, (tr, va) in enumerate(folds):
        Xs, ys, xm, xs, ym, ysd = standardize_training(X[tr], y[tr])
        Xv = (X[va] - xm) / xs
        seeds = [cell_seed(seed, 1, fi, gi) for gi in range(len(combos))]
        fitted = train_mlp_batch(Xs, ys, combos, seeds)
        for gi, params in enumerate(fitted):
            pred = ym + ysd * (np.tanh(Xv @ params["W1"] + params["b1"])
                               @ params["w2"] + params["b2"])
            out[fi, gi] = _mse(pred, y[va])
    return out


_FOLD_MSE_PATHS = {
    "knn": _knn_fold_mses,
    "krr": _krr_fold_mses,
    "svr": _svr_fold_mses,
    "mlp": _mlp_fold_mses,
}


def run_inner(X: np.ndarray, y: np.ndarray, spec: ModelSpec, scheme: CvScheme,
              seed: int = 0) -> dict:
    """Pick the grid point with the lowest mean validation MSE over the
    sequential inner folds; ties resolve to the earliest (most regularized)
    grid entry.  Falls back to the middle grid point when the training
    block is too short for the warm-up plus one row per fold."""
    if not spec.grid:
        return {}
    n = len(y)
    if n < scheme.inner_warmup + scheme.inner_folds:
        warnings.warn(f"{spec.family}: {n} rows are too few for inner CV; "
                      f"using the middle grid point", stacklevel=2)
        return default_hyper(spec)
    folds = _inner_fold_slices(n, scheme)
    path = _FOLD_MSE_PATHS.get(spec.family, _generic_fold_mses)
    fold_mses = path(spec, X, y, folds, seed)
    mean_mse = fold_mses.mean(axis=0)
    return dict(spec.grid[int(np.argmin(mean_mse))])


# ---------------------------------------------------------------------------
# outer walk-forward
# ---------------------------------------------------------------------------

def _winsorize_block(X, y, x_row, low_q, high_q):
    """Column-wise clipping with bounds fit on the training block only."""
    Xc = X.copy()
    x_out = x_row.copy()
    for j in range(X.shape[1]):
        lo, hi = winsor_bounds(X[:, j], low_q, high_q)
        if np.isfinite(lo):
            Xc[:, j] = np.clip(Xc[:, j], lo, hi)
            x_out[j] = np.clip(x_out[j], lo, hi)
    lo, hi = winsor_bounds(y, low_q, high_q)
    yc = np.clip(y, lo, hi) if np.isfinite(lo) else y.copy()
    return Xc, yc, x_out


def run_outer(panel: TradePanel, spec: ModelSpec, scheme: CvScheme,
              seed: int = 0, trade_index: int = 0, family_index: int = 0,
              winsor_q=(0.01, 0.95)):
    """Walk the panel weekly, emitting one out-of-sample PredictionRecord per
    step (or a SkippedStep carrying the reason)."""
    X_all = panel.X
    labels = panel.labels
    complete = panel.complete_mask()
    needed = min_rows(X_all.shape[1])
    records: list[PredictionRecord] = []
    skips: list[SkippedStep] = []

    for t in range(scheme.outer_warmup, len(panel), scheme.outer_step):
        train_end = t - scheme.purge_gap
        if train_end < 0:
            train_idx = np.empty(0, dtype=int)
        else:
            usable = complete[:train_end + 1] & np.isfinite(labels[:train_end + 1])
            train_idx = np.flatnonzero(usable)
        if len(train_idx) < needed:
            skips.append(SkippedStep(panel.dates[t], panel.trade_id, spec.family,
                                     t, "insufficient training rows"))
            continue
        if not complete[t]:
            skips.append(SkippedStep(panel.dates[t], panel.trade_id, spec.family,
                                     t, "missing features"))
            continue

        X_tr, y_tr, x_t = _winsorize_block(X_all[train_idx], labels[train_idx],
                                           X_all[t], *winsor_q)
        step_seed = cell_seed(seed, trade_index, family_index, t)
        hyper = run_inner(X_tr, y_tr, spec, scheme, seed=step_seed)
        model = models.fit(spec, X_tr, y_tr, seed=step_seed,
                           hyper=hyper or None)
        pred = float(models.predict(model, x_t[None, :])[0])
        records.append(PredictionRecord(
            date=panel.dates[t], trade_id=panel.trade_id, family=spec.family,
            prediction=pred, realized=float(labels[t]), hyper=dict(model.hyper),
            row_index=t, train_end_index=int(train_idx[-1]),
            n_train=len(train_idx)))
    return records, skips


# ---------------------------------------------------------------------------
# trader z-score benchmarks
# ---------------------------------------------------------------------------

ZSCORE_METRICS = {
    "zscore_be_width": "be_width",
    "zscore_carry": "carry",
}
ZSCORE_WINDOW = 52


def zscore_signal_series(values: np.ndarray, window: int = ZSCORE_WINDOW) -> np.ndarray:
    """Dead-zone-then-linear trader rule on a rolling z-score.

    Z uses the trailing `window` observations (current included, population
    std); the signal is 0 inside |Z| < 1, Z/3 beyond, saturating at |Z| = 3.
    Emits 0 before the window fills or when the window std is 0.
    """
    n = len(values)
    out = np.zeros(n)
    for t in range(window - 1, n):
        x = values[t]
        if not np.isfinite(x):
            continue
        win = values[t - window + 1: t + 1]
        win = win[np.isfinite(win)]
        if len(win) < window:
            continue
        mu = win.mean()
        sd = win.std()
        if sd <= 1e-12 * max(1.0, abs(mu)):
            continue
        z = (x - mu) / sd
        if abs(z) >= 1.0:
            out[t] = float(np.clip(z / 3.0, -1.0, 1.0))
    return out


def zscore_benchmark(panel: TradePanel, family: str,
                     start: int = 0) -> np.ndarray:
    """Signal series for a trader benchmark; entries before `start` are zeroed
    so all strategies share one evaluation window."""
    metric = ZSCORE_METRICS[family]
    col = panel.features[:, FEATURE_NAMES.index(metric)]
    signals = zscore_signal_series(col)
    if start > 0:
        signals[:start] = 0.0
    return signals
