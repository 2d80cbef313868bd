"""CSV and SVG emission for every pipeline artifact.

All writers are deterministic: rows are ordered by (trade, model, date),
floats use repr (shortest round-trip form), missing values are empty
fields.  Each CSV round-trips through its reader.
"""

from __future__ import annotations

import ast
import os
from datetime import date as _date

import numpy as np

from .backtest import PredictionRecord, SkippedStep
from .evaluation import MetricReport, RankAnalysis
from .models import DISPLAY_NAMES
from .package import FEATURE_NAMES
from .panel import COLUMN_NAMES
from .recommend import SignalRecord


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if not np.isfinite(x) else repr(x)


def _parse(cell: str) -> float:
    return float(cell) if cell else float("nan")


def _hyper_str(hyper: dict) -> str:
    return ";".join(f"{k}={hyper[k]!r}" for k in sorted(hyper))


def _hyper_parse(text: str) -> dict:
    out = {}
    for tok in text.split(";"):
        if not tok:
            continue
        k, v = tok.split("=", 1)
        out[k] = ast.literal_eval(v)
    return out


PREDICTIONS_HEADER = "date,trade,model,prediction,realized,hyperparameters"


def predictions_to_csv(records) -> str:
    rows = sorted(records, key=lambda r: (r.trade_id, r.family, r.date))
    lines = [PREDICTIONS_HEADER]
    for r in rows:
        lines.append(",".join([
            r.date.isoformat(), r.trade_id, r.family, _fmt(r.prediction),
            _fmt(r.realized), _hyper_str(r.hyper)]))
    return "\n".join(lines) + "\n"


def predictions_from_csv(text: str):
    lines = text.splitlines()
    if not lines or lines[0] != PREDICTIONS_HEADER:
        raise ValueError("unrecognized predictions CSV header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        d, trade, model, pred, realized, hyper = ln.split(",", 5)
        out.append(PredictionRecord(
            date=_date.fromisoformat(d), trade_id=trade, family=model,
            prediction=_parse(pred), realized=_parse(realized),
            hyper=_hyper_parse(hyper), row_index=-1, train_end_index=-1,
            n_train=-1))
    return out


SIGNALS_HEADER = ("date,trade,model,expected_return,credit,signal,realized,"
                  "strategy_return")


def signals_to_csv(records) -> str:
    rows = sorted(records, key=lambda r: (r.trade_id, r.family, r.date))
    lines = [SIGNALS_HEADER]
    for r in rows:
        lines.append(",".join([
            r.date.isoformat(), r.trade_id, r.family, _fmt(r.expected_return),
            _fmt(r.credit), _fmt(r.signal), _fmt(r.realized),
            _fmt(r.strategy_return)]))
    return "\n".join(lines) + "\n"


def signals_from_csv(text: str):
    lines = text.splitlines()
    if not lines or lines[0] != SIGNALS_HEADER:
        raise ValueError("unrecognized signals CSV header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        d, trade, model, er, credit, sig, realized, sr = ln.split(",")
        out.append(SignalRecord(
            date=_date.fromisoformat(d), trade_id=trade, family=model,
            expected_return=_parse(er), credit=_parse(credit),
            signal=_parse(sig), realized=_parse(realized),
            strategy_return=_parse(sr), row_index=-1))
    return out


SKIPS_HEADER = "date,trade,model,reason"


def skips_to_csv(records) -> str:
    rows = sorted(records, key=lambda r: (r.trade_id, r.family, r.date))
    lines = [SKIPS_HEADER]
    for r in rows:
        lines.append(",".join([r.date.isoformat(), r.trade_id, r.family, r.reason]))
    return "\n".join(lines) + "\n"


METRICS_HEADER = ("trade,model,rho,avg_return,std_dev,information_ratio,"
                  "success_rate,auc,n_obs")


def metrics_to_csv(records) -> str:
    rows = sorted(records, key=lambda r: (r.trade_id, r.family))
    lines = [METRICS_HEADER]
    for m in rows:
        lines.append(",".join([
            m.trade_id, m.family, _fmt(m.rho), _fmt(m.avg_return),
            _fmt(m.std_dev), _fmt(m.information_ratio), _fmt(m.success_rate),
            _fmt(m.auc), str(m.n_obs)]))
    return "\n".join(lines) + "\n"


def metrics_from_csv(text: str):
    lines = text.splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ValueError("unrecognized metrics CSV header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        trade, model, rho, avg, sd, ir, rate, auc, n = ln.split(",")
        none_if = lambda c: None if c == "" else float(c)
        out.append(MetricReport(
            trade_id=trade, family=model, rho=none_if(rho),
            avg_return=none_if(avg), std_dev=none_if(sd),
            information_ratio=none_if(ir), success_rate=none_if(rate),
            auc=none_if(auc), n_obs=int(n)))
    return out


RANKS_HEADER = "model,avg_rank,z_score,p_value,holm_threshold,significant"


def rank_analysis_to_csv(analysis: RankAnalysis) -> str:
    """Worst-ranked model first, the best last with empty test columns,
    then the Friedman chi-square line, mirroring the published layout."""
    order = np.argsort(-np.asarray(analysis.avg_ranks), kind="stable")
    lines = [RANKS_HEADER]
    for i in order:
        fam = analysis.families[i]
        if fam in analysis.z_scores:
            lines.append(",".join([
                DISPLAY_NAMES.get(fam, fam), _fmt(analysis.avg_ranks[i]),
                _fmt(analysis.z_scores[fam]), _fmt(analysis.p_values[fam]),
                _fmt(analysis.holm_thresholds[fam]),
                "yes" if analysis.significant[fam] else "no"]))
        else:
            lines.append(",".join([DISPLAY_NAMES.get(fam, fam),
                                   _fmt(analysis.avg_ranks[i]), "", "", "", ""]))
    lines.append(f"Friedman Chi-Square,{_fmt(analysis.chi_square)},"
                 f"{_fmt(analysis.chi_square_p)},,,")
    return "\n".join(lines) + "\n"


SIGNIFICANCE_HEADER = "trade," + ",".join(COLUMN_NAMES)


def significance_to_csv(significance: dict) -> str:
    lines = [SIGNIFICANCE_HEADER]
    for trade in sorted(significance):
        vec = significance[trade]
        lines.append(trade + "," + ",".join(_fmt(v) for v in vec))
    return "\n".join(lines) + "\n"


def significance_from_csv(text: str) -> dict:
    lines = text.splitlines()
    if not lines or lines[0] != SIGNIFICANCE_HEADER:
        raise ValueError("unrecognized significance CSV header")
    out = {}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        cells = ln.split(",")
        out[cells[0]] = np.array([_parse(c) for c in cells[1:]])
    return out


RANK_TABLE_HEADER = "date,side,position,trade,model,signal,credit"


def rank_table_to_csv(tables) -> str:
    lines = [RANK_TABLE_HEADER]
    for table in tables:
        for side, records in (("long", table.longs), ("short", table.shorts),
                              ("flat", table.flats)):
            for pos, r in enumerate(records, start=1):
                lines.append(",".join([
                    table.date.isoformat(), side, str(pos), r.trade_id,
                    r.family, _fmt(r.signal), _fmt(r.credit)]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG heatmaps
# ---------------------------------------------------------------------------

CELL = 18
LEFT = 130
TOP = 60


def _color(v: float, vmax: float) -> str:
    """Diverging blue-white-red scale on [-vmax, vmax]."""
    if not np.isfinite(v):
        return "#cccccc"
    t = max(-1.0, min(1.0, v / vmax if vmax > 0 else 0.0))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t)), round(255 * (1 - t))
    else:
        r, g, b = round(255 * (1 + t)), round(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(matrix, row_labels, col_labels, title: str,
                vmax: float | None = None, col_label_every: int = 1) -> str:
    """Deterministic SVG heatmap; each cell carries its exact value in a
    data-value attribute."""
    M = np.asarray(matrix, dtype=float)
    n_rows, n_cols = M.shape
    if vmax is None:
        finite = M[np.isfinite(M)]
        vmax = float(np.max(np.abs(finite))) if finite.size else 1.0
    width = LEFT + CELL * n_cols + 20
    height = TOP + CELL * n_rows + 30
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="10">',
        f'<text x="{LEFT}" y="20" font-size="13">{title}</text>',
    ]
    for j, label in enumerate(col_labels):
        if j % col_label_every == 0:
            x = LEFT + j * CELL + 4
            parts.append(f'<text x="{x}" y="{TOP - 6}" '
                         f'transform="rotate(-60 {x} {TOP - 6})">{label}</text>')
    for i, label in enumerate(row_labels):
        parts.append(f'<text x="4" y="{TOP + i * CELL + 13}">{label}</text>')
    for i in range(n_rows):
        for j in range(n_cols):
            v = M[i, j]
            parts.append(
                f'<rect x="{LEFT + j * CELL}" y="{TOP + i * CELL}" '
                f'width="{CELL}" height="{CELL}" fill="{_color(v, vmax)}" '
                f'stroke="#888" stroke-width="0.4" data-value="{_fmt(v)}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
