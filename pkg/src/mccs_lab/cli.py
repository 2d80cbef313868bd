"""Command-line front end: synth, backtest, report.

Exit codes: 0 success, 1 configuration error, 2 runtime error.  The
environment variable MCCS_LAB_THREADS caps worker parallelism.
"""

# single-threaded BLAS before numpy loads: outputs must not depend on the
# worker count or the host's thread pool
import os
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import argparse
import sys

from .errors import ConfigError, MccsError


def _add_common(p):
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--threads", type=int, default=None, help="worker cap")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mccs-lab",
        description="Synthetic-market research pipeline for mid-curve "
                    "calendar spread packages")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate and archive a scenario")
    _add_common(p_synth)

    p_back = sub.add_parser("backtest", help="run the walk-forward backtest")
    _add_common(p_back)
    p_back.add_argument("--models", default=None,
                        help="comma list of strategies (default: config/all)")
    p_back.add_argument("--trades", default=None,
                        help="comma list like 1y1y1y,2y3y2y (default: config/paper)")

    p_rep = sub.add_parser("report", help="rank analysis + significance heatmap "
                                          "from backtest outputs")
    _add_common(p_rep)
    return parser


def _load(args):
    from .config import load_config

    overrides = {"seed": args.seed, "out_dir": args.out, "threads": args.threads}
    if getattr(args, "models", None):
        overrides["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    if getattr(args, "trades", None):
        overrides["trades"] = [t.strip() for t in args.trades.split(",") if t.strip()]
    return load_config(args.config, overrides)


def cmd_synth(cfg) -> int:
    from .reporting import write_text
    from .scenario import generate_history, snapshots_to_csv

    history = generate_history(cfg.scenario)
    path = os.path.join(cfg.out_dir, "scenario.csv")
    write_text(path, snapshots_to_csv(history))
    print(f"wrote {len(history)} snapshots to {path}")
    return 0


def cmd_backtest(cfg) -> int:
    import numpy as np

    from . import reporting
    from .models import DISPLAY_NAMES
    from .pipeline import run_backtest
    from .recommend import rank_trades

    report = run_backtest(cfg)
    out = cfg.out_dir
    reporting.write_text(os.path.join(out, "predictions.csv"),
                         reporting.predictions_to_csv(report.predictions))
    reporting.write_text(os.path.join(out, "signals.csv"),
                         reporting.signals_to_csv(report.signals))
    reporting.write_text(os.path.join(out, "skips.csv"),
                         reporting.skips_to_csv(report.skips))
    reporting.write_text(os.path.join(out, "metrics.csv"),
                         reporting.metrics_to_csv(report.metrics))
    if report.lasso_significance:
        reporting.write_text(os.path.join(out, "significance.csv"),
                             reporting.significance_to_csv(report.lasso_significance))

    labels = [DISPLAY_NAMES.get(f, f) for f in report.strategies]
    for attr, name, title in (("avg_return", "avg_return_heatmap.svg",
                               "Average strategy return"),
                              ("information_ratio", "ir_heatmap.svg",
                               "Information ratio")):
        M = report.metric_matrix(attr)
        reporting.write_text(os.path.join(out, name),
                             reporting.heatmap_svg(M, report.trade_ids, labels,
                                                   title))

    # per-strategy signal heatmaps (trades x dates) and daily rank tables
    by_family: dict = {}
    for r in report.signals:
        by_family.setdefault(r.family, {}).setdefault(r.trade_id, {})[r.date] = r
    for family, trades in sorted(by_family.items()):
        dates = sorted({d for rows in trades.values() for d in rows})
        M = np.full((len(report.trade_ids), len(dates)), np.nan)
        di = {d: j for j, d in enumerate(dates)}
        for i, t in enumerate(report.trade_ids):
            for d, rec in trades.get(t, {}).items():
                M[i, di[d]] = rec.signal
        reporting.write_text(
            os.path.join(out, f"signals_heatmap_{family}.svg"),
            reporting.heatmap_svg(M, report.trade_ids,
                                  [d.isoformat() for d in dates],
                                  f"Signals: {DISPLAY_NAMES.get(family, family)}",
                                  vmax=1.0, col_label_every=13))
        tables = [rank_trades([trades[t][d] for t in trades if d in trades[t]])
                  for d in dates]
        reporting.write_text(os.path.join(out, f"rank_table_{family}.csv"),
                             reporting.rank_table_to_csv(tables))

    n_cells = len(report.trade_ids) * len(report.strategies)
    print(f"backtest complete: {len(report.predictions)} predictions, "
          f"{len(report.signals)} signals over {n_cells} trade-strategy cells; "
          f"outputs in {out}")
    return 0


def cmd_report(cfg) -> int:
    import numpy as np

    from . import reporting
    from .evaluation import average_ranks, friedman_holm
    from .models import DISPLAY_NAMES
    from .panel import COLUMN_NAMES

    out = cfg.out_dir
    metrics_path = os.path.join(out, "metrics.csv")
    if not os.path.exists(metrics_path):
        raise MccsError(f"missing backtest outputs: {metrics_path} not found "
                        f"(run the backtest command first)")
    metrics = reporting.metrics_from_csv(open(metrics_path).read())
    trades = sorted({m.trade_id for m in metrics})
    families = sorted({m.family for m in metrics},
                      key=lambda f: (list(DISPLAY_NAMES).index(f)
                                     if f in DISPLAY_NAMES else 99))
    M = np.full((len(trades), len(families)), np.nan)
    for m in metrics:
        if m.information_ratio is not None:
            M[trades.index(m.trade_id), families.index(m.family)] = m.information_ratio
    avg, _ = average_ranks(M, families)
    analysis = friedman_holm(avg, families,
                             n_trades=int(np.sum(np.all(np.isfinite(M), axis=1))))
    reporting.write_text(os.path.join(out, "rank_analysis.csv"),
                         reporting.rank_analysis_to_csv(analysis))

    sig_path = os.path.join(out, "significance.csv")
    if os.path.exists(sig_path):
        sig = reporting.significance_from_csv(open(sig_path).read())
        rows = sorted(sig)
        M = np.array([sig[t] * 100.0 for t in rows])
        reporting.write_text(
            os.path.join(out, "feature_significance.svg"),
            reporting.heatmap_svg(M, rows, list(COLUMN_NAMES),
                                  "Lasso feature significance (%)", vmax=100.0))
    print(f"report complete: rank analysis over {len(trades)} trades x "
          f"{len(families)} strategies in {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "backtest":
            return cmd_backtest(cfg)
        return cmd_report(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MccsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
