"""Research engine for mid-curve calendar spread swaption packages.

Pipeline: synthetic weekly markets -> SABR/Black package features ->
supervised panels -> an 11-model zoo under nested rolling cross-validation
-> credit-weighted long/short signals -> rank statistics.
"""

from .backtest import CvScheme, PredictionRecord, run_inner, run_outer, zscore_benchmark
from .config import ALL_STRATEGIES, RunConfig, load_config, paper_trades
from .errors import (
    ConfigError,
    ConvergenceError,
    CurveCoverageError,
    GenerationError,
    MccsError,
    PanelError,
)
from .evaluation import (
    MetricReport,
    RankAnalysis,
    average_ranks,
    friedman_holm,
    information_ratio,
    pearson_rho,
    success_rate_and_roc,
)
from .package import (
    FEATURE_NAMES,
    FeatureVector,
    MccsSpec,
    PackageState,
    aged_carry_1y,
    breakeven_width,
    build_package,
    carry_at_expiry,
    carry_decomposition,
    feature_vector,
    greeks,
    package_pv,
    package_value,
    payoff_profile,
)
from .panel import TradePanel, assemble_panel, drop_missing, holding_return, winsorize
from .pipeline import BacktestReport, rank_analysis_from_report, run_backtest, run_trade
from .pricing import (
    DiscountCurve,
    SabrParams,
    SwapSpec,
    annuity,
    black_price,
    forward_swap_rate,
    hagan_lognormal_vol,
)
from .recommend import RankTable, SignalRecord, credit_weighted_signals, rank_trades
from .scenario import (
    MarketSnapshot,
    PlantedHistory,
    ScenarioConfig,
    generate_history,
    plant_signal,
    snapshots_from_csv,
    snapshots_to_csv,
)

__version__ = "0.1.0"
