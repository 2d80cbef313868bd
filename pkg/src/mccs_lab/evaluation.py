"""Performance metrics, success-rate/ROC analysis and cross-model rank
statistics (Friedman test with Holm step-down correction)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class MetricReport:
    trade_id: str
    family: str
    rho: float | None
    avg_return: float | None
    std_dev: float | None
    information_ratio: float | None
    success_rate: float | None
    auc: float | None
    n_obs: int


@dataclass(frozen=True)
class RankAnalysis:
    families: tuple
    avg_ranks: tuple
    chi_square: float
    chi_square_p: float
    z_scores: dict          # family -> z vs the best
    p_values: dict
    holm_thresholds: dict
    significant: dict
    n_trades: int


def pearson_rho(a, b) -> float | None:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if len(a) < 2 or a.std() == 0.0 or b.std() == 0.0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def information_ratio(returns, benchmark_mean: float = 0.0) -> float | None:
    """(mean - benchmark) / population std; None when dispersion is zero."""
    r = np.asarray(returns, float)
    sd = r.std()
    if len(r) == 0 or sd == 0.0:
        return None
    return float((r.mean() - benchmark_mean) / sd)


def success_rate_and_roc(signals, realized):
    """Directional hit rate plus the ROC curve over |signal|-ranked calls.

    A call is the sign of the signal; it succeeds when it matches the sign
    of the realized return.  The ROC sweeps a threshold over |signal| with
    success as the positive class; tied scores collapse into one sweep
    point, giving diagonal segments; AUC by the trapezoid rule.
    """
    s = np.asarray(signals, float)
    r = np.asarray(realized, float)
    active = (s != 0.0) & np.isfinite(r)
    if not np.any(active):
        return None, None, None
    s, r = s[active], r[active]
    success = np.sign(s) == np.sign(r)
    rate = float(success.mean())
    if success.all() or not success.any():
        curve = ((0.0, 0.0), (1.0, 1.0))
        return rate, curve, 1.0 if success.all() else 0.0

    order = np.argsort(-np.abs(s), kind="stable")
    scores = np.abs(s)[order]
    hits = success[order]
    P = int(hits.sum())
    N = len(hits) - P
    tpr = [0.0]
    fpr = [0.0]
    tp = fp = 0
    i = 0
    while i < len(hits):
        j = i
        while j < len(hits) and scores[j] == scores[i]:
            tp += int(hits[j])
            fp += int(~hits[j])
            j += 1
        tpr.append(tp / P)
        fpr.append(fp / N)
        i = j
    auc = float(np.trapezoid(tpr, fpr))
    return rate, tuple(zip(fpr, tpr)), auc


def rank_with_ties(values_desc_better: np.ndarray) -> np.ndarray:
    """Rank 1 = best (largest value); ties share the average rank."""
    v = np.asarray(values_desc_better, float)
    order = np.argsort(-v, kind="stable")
    ranks = np.empty(len(v))
    i = 0
    while i < len(v):
        j = i
        while j < len(v) and v[order[j]] == v[order[i]]:
            j += 1
        avg = 0.5 * (i + j - 1) + 1.0
        for k in range(i, j):
            ranks[order[k]] = avg
        i = j
    return ranks


def average_ranks(metric_matrix: np.ndarray, families, higher_is_better=True):
    """Per-family average rank over trades; trades with a missing cell are
    excluded with a warning."""
    M = np.asarray(metric_matrix, float)
    keep = np.all(np.isfinite(M), axis=1)
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(f"excluding {dropped} trades with missing metric cells",
                      stacklevel=2)
    M = M[keep]
    if M.shape[0] == 0:
        raise ValueError("no complete trades to rank")
    signed = M if higher_is_better else -M
    ranks = np.vstack([rank_with_ties(row) for row in signed])
    return ranks.mean(axis=0), ranks


def friedman_holm(avg_ranks, families, n_trades: int, alpha: float = 0.05) -> RankAnalysis:
    """Friedman chi-square over the rank matrix plus Holm step-down z-tests
    of every family against the best ranked one."""
    k = len(families)
    if k < 3:
        raise ValueError("Friedman test needs at least 3 models")
    if n_trades < 2:
        raise ValueError("Friedman test needs at least 2 trades")
    R = np.asarray(avg_ranks, float)
    chi = 12.0 * n_trades / (k * (k + 1)) * (float(np.sum(R * R))
                                             - k * (k + 1) ** 2 / 4.0)
    from scipy.stats import chi2
    chi_p = float(chi2.sf(chi, k - 1))

    best = int(np.argmin(R))
    se = math.sqrt(k * (k + 1) / (6.0 * n_trades))
    others = [i for i in range(k) if i != best]
    z = {families[i]: (R[i] - R[best]) / se for i in others}
    p = {f: float(norm.sf(v)) for f, v in z.items()}

    m = len(others)
    ordered = sorted(others, key=lambda i: p[families[i]])
    thresholds = {}
    significant = {}
    still_rejecting = True
    for pos, i in enumerate(ordered):
        fam = families[i]
        thr = alpha / (m - pos)
        thresholds[fam] = thr
        if still_rejecting and p[fam] < thr:
            significant[fam] = True
        else:
            still_rejecting = False
            significant[fam] = False
    return RankAnalysis(
        families=tuple(families), avg_ranks=tuple(float(r) for r in R),
        chi_square=float(chi), chi_square_p=chi_p, z_scores=z, p_values=p,
        holm_thresholds=thresholds, significant=significant, n_trades=n_trades)


def holm_threshold_column(m: int = 14, alpha: float = 0.05):
    """The step-down thresholds alpha/m ... alpha/1 for m ordered hypotheses."""
    return [alpha / (m - i) for i in range(m)]
