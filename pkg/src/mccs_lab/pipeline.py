"""End-to-end orchestration: scenario, panels, walk-forward predictions,
signals, metrics and rank statistics for every (trade, strategy) cell.

Trades are independent, so they run in worker processes; every worker pins
its BLAS to one thread and derives all randomness from (seed, trade,
family, step), which makes aggregated results byte-identical no matter
how many workers participate.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import models
from .backtest import (
    CvScheme,
    PredictionRecord,
    SkippedStep,
    cell_seed,
    run_inner,
    run_outer,
    zscore_benchmark,
)
from .config import ALL_STRATEGIES, ZSCORE_FAMILIES, RunConfig
from .evaluation import (
    MetricReport,
    RankAnalysis,
    average_ranks,
    friedman_holm,
    pearson_rho,
    success_rate_and_roc,
)
from .models import ModelSpec, lasso_feature_significance, paper_model_specs
from .models.base import standardize_training
from .panel import COLUMN_NAMES, TradePanel, assemble_panel
from .recommend import SignalRecord, credit_weighted_signals, feature_rule_signals
from .scenario import generate_history, plant_signal


@dataclass
class TradeResult:
    trade_index: int
    trade_id: str
    predictions: list = field(default_factory=list)
    skips: list = field(default_factory=list)
    signals: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    lasso_significance: np.ndarray | None = None
    panel_dates: tuple = ()


@dataclass
class BacktestReport:
    strategies: tuple
    trade_ids: tuple
    predictions: list
    skips: list
    signals: list
    metrics: list
    lasso_significance: dict
    panel_dates: dict

    def metric_matrix(self, attr: str) -> np.ndarray:
        """(trades x strategies) matrix of one metric, nan where absent."""
        idx = {t: i for i, t in enumerate(self.trade_ids)}
        jdx = {s: j for j, s in enumerate(self.strategies)}
        M = np.full((len(self.trade_ids), len(self.strategies)), np.nan)
        for m in self.metrics:
            v = getattr(m, attr)
            if v is not None:
                M[idx[m.trade_id], jdx[m.family]] = v
        return M


def _history_for(cfg: RunConfig):
    history = generate_history(cfg.scenario)
    if cfg.planted is not None:
        history = plant_signal(history, cfg.planted, cfg.snr, seed=cfg.seed,
                               label_scale=cfg.label_scale)
    return history


def metrics_from_signals(trade_id: str, family: str,
                         records: list[SignalRecord],
                         predictions: list[PredictionRecord] | None) -> MetricReport:
    matured = [r for r in records if np.isfinite(r.strategy_return)]
    returns = np.array([r.strategy_return for r in matured])
    avg = float(returns.mean()) if len(returns) else None
    sd = float(returns.std()) if len(returns) else None
    ir = None
    if sd is not None and sd > 0.0:
        ir = float(returns.mean() / sd)
    rho = None
    if predictions is not None:
        pairs = [(p.prediction, p.realized) for p in predictions
                 if np.isfinite(p.realized)]
        if len(pairs) >= 2:
            rho = pearson_rho([a for a, _ in pairs], [b for _, b in pairs])
    rate, _, auc = success_rate_and_roc(
        np.array([r.signal for r in matured]),
        np.array([r.realized for r in matured])) if matured else (None, None, None)
    return MetricReport(trade_id=trade_id, family=family, rho=rho,
                        avg_return=avg, std_dev=sd, information_ratio=ir,
                        success_rate=rate, auc=auc, n_obs=len(matured))


def final_lasso_significance(panel: TradePanel, scheme: CvScheme, seed: int,
                             trade_index: int, winsor_q) -> np.ndarray | None:
    """Normalized t-stats from the last walk-forward lasso refit."""
    from .backtest import _winsorize_block
    from .models import fit, min_rows

    labels = panel.labels
    complete = panel.complete_mask()
    t = len(panel) - 1
    train_end = t - scheme.purge_gap
    usable = complete[:train_end + 1] & np.isfinite(labels[:train_end + 1])
    train_idx = np.flatnonzero(usable)
    if len(train_idx) < min_rows(panel.X.shape[1]):
        return None
    spec = paper_model_specs()["lasso"]
    X_tr, y_tr, _ = _winsorize_block(panel.X[train_idx], labels[train_idx],
                                     panel.X[t], *winsor_q)
    step_seed = cell_seed(seed, trade_index, ALL_STRATEGIES.index("lasso"), t)
    hyper = run_inner(X_tr, y_tr, spec, scheme, seed=step_seed)
    model = fit(spec, X_tr, y_tr, seed=step_seed, hyper=hyper)
    return lasso_feature_significance(model, X_tr, y_tr)


def run_trade(cfg: RunConfig, history, trade_index: int) -> TradeResult:
    """All strategies for one trade: predictions, signals, metrics."""
    spec = cfg.trades[trade_index]
    panel = assemble_panel(history, spec, cost_mult=cfg.cost_mult, gross=cfg.gross)
    result = TradeResult(trade_index=trade_index, trade_id=spec.trade_id,
                         panel_dates=panel.dates)
    model_specs = paper_model_specs()

    for family in cfg.strategies:
        fam_index = ALL_STRATEGIES.index(family)
        if family in ZSCORE_FAMILIES:
            series = zscore_benchmark(panel, family, start=cfg.scheme.outer_warmup)
            sigs = feature_rule_signals(panel, family, series,
                                        start=cfg.scheme.outer_warmup)
            result.signals.extend(sigs)
            result.metrics.append(metrics_from_signals(spec.trade_id, family,
                                                       sigs, None))
            continue
        records, skips = run_outer(panel, model_specs[family], cfg.scheme,
                                   seed=cfg.seed, trade_index=trade_index,
                                   family_index=fam_index, winsor_q=cfg.winsor)
        sigs = credit_weighted_signals(records, panel.labels)
        result.predictions.extend(records)
        result.skips.extend(skips)
        result.signals.extend(sigs)
        result.metrics.append(metrics_from_signals(spec.trade_id, family,
                                                   sigs, records))

    if "lasso" in cfg.strategies:
        result.lasso_significance = final_lasso_significance(
            panel, cfg.scheme, cfg.seed, trade_index, cfg.winsor)
    return result


_WORKER_STATE: dict = {}


def _init_worker(cfg: RunConfig):
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["history"] = _history_for(cfg)


def _worker_run_trade(trade_index: int) -> TradeResult:
    return run_trade(_WORKER_STATE["cfg"], _WORKER_STATE["history"], trade_index)


def run_backtest(cfg: RunConfig, parallel: bool | None = None) -> BacktestReport:
    """Run every (trade, strategy) cell and aggregate deterministically."""
    n_workers = cfg.resolve_threads()
    if parallel is None:
        parallel = n_workers > 1 and len(cfg.trades) > 1

    if parallel:
        # single-threaded BLAS everywhere keeps results identical across
        # every parallelism level (inherited by spawned workers)
        os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
        import multiprocessing as mp
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=n_workers, mp_context=ctx,
                                 initializer=_init_worker,
                                 initargs=(cfg,)) as pool:
            results = list(pool.map(_worker_run_trade, range(len(cfg.trades))))
    else:
        history = _history_for(cfg)
        results = [run_trade(cfg, history, i) for i in range(len(cfg.trades))]

    results.sort(key=lambda r: r.trade_index)
    report = BacktestReport(
        strategies=tuple(cfg.strategies),
        trade_ids=tuple(t.trade_id for t in cfg.trades),
        predictions=[], skips=[], signals=[], metrics=[],
        lasso_significance={}, panel_dates={})
    for res in results:
        report.predictions.extend(res.predictions)
        report.skips.extend(res.skips)
        report.signals.extend(res.signals)
        report.metrics.extend(res.metrics)
        report.panel_dates[res.trade_id] = res.panel_dates
        if res.lasso_significance is not None:
            report.lasso_significance[res.trade_id] = res.lasso_significance
    return report


def rank_analysis_from_report(report: BacktestReport,
                              alpha: float = 0.05) -> RankAnalysis:
    """Friedman/Holm analysis over the information-ratio matrix."""
    M = report.metric_matrix("information_ratio")
    avg, _ = average_ranks(M, list(report.strategies), higher_is_better=True)
    return friedman_holm(avg, list(report.strategies),
                         n_trades=int(np.sum(np.all(np.isfinite(M), axis=1))),
                         alpha=alpha)
