"""Credit-weighted long/short signals and daily trade ranking.

The signal scales a model's expected return by the trailing Pearson
correlation between its past predictions and what those trades actually
returned (the model's credit), normalized by the largest weighted
expectation seen over the trailing year, current date included, so
|S| <= 1 always.  Degenerate cases (young history, zero credit, zero
denominator) emit S = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HOLDING_WEEKS = 52
MIN_CREDIT_PAIRS = 8
TRAILING_WINDOW = 52


@dataclass(frozen=True)
class SignalRecord:
    date: object
    trade_id: str
    family: str
    expected_return: float    # nan for feature-rule strategies
    credit: float
    signal: float
    realized: float           # label of the trade entered this date (nan if unmatured)
    strategy_return: float    # signal * realized (nan until matured)
    row_index: int


def strategy_return(signal: float, realized: float) -> float:
    return signal * realized


def credit_weighted_signals(rows, labels_by_index) -> list[SignalRecord]:
    """Turn one (trade, model) prediction stream into signal records.

    `rows`: time-ordered PredictionRecords for a single trade and family.
    `labels_by_index`: the panel label array (realized returns by row index).
    Credit at t is the Pearson correlation over all pairs matured by t
    (prediction at u pairs with its label, known at u + 52); fewer than
    8 matured pairs, a degenerate correlation, or a zero trailing maximum
    all give S = 0.
    """
    out = []
    if not rows:
        return out
    indices = np.array([r.row_index for r in rows])
    preds = np.array([r.prediction for r in rows])

    weighted = np.full(len(rows), np.nan)   # prediction x credit, as of each date
    credits = np.zeros(len(rows))
    for i, rec in enumerate(rows):
        matured = indices <= rec.row_index - HOLDING_WEEKS
        pairs_pred = preds[matured]
        pairs_real = labels_by_index[indices[matured]]
        ok = np.isfinite(pairs_real)
        pairs_pred, pairs_real = pairs_pred[ok], pairs_real[ok]
        credit = 0.0
        if len(pairs_pred) >= MIN_CREDIT_PAIRS:
            sp = pairs_pred.std()
            sr = pairs_real.std()
            if sp > 0.0 and sr > 0.0:
                credit = float(np.corrcoef(pairs_pred, pairs_real)[0, 1])
        credits[i] = credit
        weighted[i] = preds[i] * credit

        window = (indices > rec.row_index - TRAILING_WINDOW) & (indices <= rec.row_index)
        denom = np.nanmax(np.abs(weighted[window])) if np.any(window) else 0.0
        signal = float(weighted[i] / denom) if denom > 0.0 else 0.0
        realized = float(labels_by_index[rec.row_index])
        out.append(SignalRecord(
            date=rec.date, trade_id=rec.trade_id, family=rec.family,
            expected_return=rec.prediction, credit=credit, signal=signal,
            realized=realized,
            strategy_return=strategy_return(signal, realized),
            row_index=rec.row_index))
    return out


def feature_rule_signals(panel, family: str, signals: np.ndarray,
                         start: int) -> list[SignalRecord]:
    """Wrap a per-row signal series (trader z-score benchmarks) as records."""
    out = []
    for t in range(start, len(panel)):
        s = float(signals[t])
        realized = float(panel.labels[t])
        out.append(SignalRecord(
            date=panel.dates[t], trade_id=panel.trade_id, family=family,
            expected_return=float("nan"), credit=float("nan"), signal=s,
            realized=realized, strategy_return=strategy_return(s, realized),
            row_index=t))
    return out


# ---------------------------------------------------------------------------
# ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankTable:
    """One date's recommendation: longs by descending signal, then shorts by
    ascending (most negative first), then flat trades in input order."""

    date: object
    longs: tuple
    shorts: tuple
    flats: tuple

    @property
    def ordered(self):
        return self.longs + self.shorts + self.flats


def rank_trades(records: list[SignalRecord]) -> RankTable:
    if not records:
        raise ValueError("need at least one active trade to rank")
    date = records[0].date
    longs = [r for r in records if r.signal > 0.0]
    shorts = [r for r in records if r.signal < 0.0]
    flats = [r for r in records if r.signal == 0.0]
    longs.sort(key=lambda r: -r.signal)
    shorts.sort(key=lambda r: r.signal)
    return RankTable(date=date, longs=tuple(longs), shorts=tuple(shorts),
                     flats=tuple(flats))
