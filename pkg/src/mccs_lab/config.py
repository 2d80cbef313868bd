"""Run configuration: defaults mirror the experiment tables (35 EUR trades,
15 strategies, weekly 10-year scenario, 0.75-vega costs, 0.01/0.95
winsorizing), overridable from a flat INI file and CLI flags."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from datetime import date

from .backtest import CvScheme
from .errors import ConfigError
from .models import BASELINE_FAMILIES, MODEL_FAMILIES
from .package import FEATURE_NAMES, MccsSpec
from .scenario import ScenarioConfig

ZSCORE_FAMILIES = ("zscore_be_width", "zscore_carry")
ALL_STRATEGIES = MODEL_FAMILIES + BASELINE_FAMILIES + ZSCORE_FAMILIES  # 15

_TRADE_ROWS = [(e, f, s) for e in (1, 2, 3, 4, 5)
               for f, s in ((1, 1), (1, 4), (2, 3), (2, 8), (3, 2), (4, 1), (5, 5))]


def paper_trades(currency: str = "EUR") -> tuple[MccsSpec, ...]:
    """The 35 (expiry, forward, swap) combinations of the trade table."""
    return tuple(MccsSpec(currency, float(e), float(f), float(s))
                 for e, f, s in _TRADE_ROWS)


def parse_trade_token(token: str, currency: str = "EUR") -> MccsSpec:
    parts = token.replace("EUR_", "").lower().split("y")
    try:
        e, f, s = (float(p) for p in parts if p != "")
    except ValueError as exc:
        raise ConfigError(f"cannot parse trade {token!r} (want e.g. 1y2y3y)") from exc
    return MccsSpec(currency, e, f, s)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str = "out"
    threads: int | None = None
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    trades: tuple = field(default_factory=paper_trades)
    strategies: tuple = ALL_STRATEGIES
    scheme: CvScheme = field(default_factory=CvScheme)
    cost_mult: float = 0.75
    winsor: tuple = (0.01, 0.95)
    gross: bool = False
    planted: dict | None = None    # feature name -> coefficient
    snr: float = 2.0
    label_scale: float = 0.10

    def __post_init__(self):
        if not self.trades:
            raise ConfigError("trade list must not be empty")
        if not self.strategies:
            raise ConfigError("model list must not be empty")
        unknown = set(self.strategies) - set(ALL_STRATEGIES)
        if unknown:
            raise ConfigError(f"unknown strategies: {sorted(unknown)}")
        lo, hi = self.winsor
        if not (0.0 <= lo < hi <= 1.0):
            raise ConfigError(f"winsor quantiles must satisfy 0 <= lo < hi <= 1, "
                              f"got {self.winsor}")
        if self.planted is not None:
            bad = set(self.planted) - set(FEATURE_NAMES)
            if bad:
                raise ConfigError(f"unknown planted features: {sorted(bad)}")
            if self.snr <= 0.0:
                raise ConfigError("snr must be > 0")

    def resolve_threads(self) -> int:
        cap = os.environ.get("MCCS_LAB_THREADS")
        n = self.threads or os.cpu_count() or 1
        if cap:
            n = min(n, max(1, int(cap)))
        return max(1, min(n, len(self.trades)))


def _parse_planted(text: str) -> dict:
    out = {}
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" not in tok:
            raise ConfigError(f"planted coefficient {tok!r} must be name:value")
        name, val = tok.split(":", 1)
        out[name.strip()] = float(val)
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an INI file plus CLI-style overrides.

    Sections: [run] seed/out/threads, [scenario] process parameters,
    [trades] list = paper | 1y1y1y,..., [models] list = all | names,
    [cv] warm-ups and folds, [panel] costs and winsorizing,
    [planted] coefficients/snr/label_scale.
    """
    parser = configparser.ConfigParser()
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser.read(path)

    def get(section, key, cast, default):
        try:
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                if cast is bool:
                    return raw.strip().lower() in ("1", "true", "yes", "on")
                return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}") from exc
        return default

    seed = get("run", "seed", int, 0)
    out_dir = get("run", "out", str, "out")
    threads = get("run", "threads", int, None)

    try:
        return _build(parser, get, seed, out_dir, threads, overrides)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(parser, get, seed, out_dir, threads, overrides) -> RunConfig:
    scen = ScenarioConfig(
        seed=seed,
        start=date.fromisoformat(get("scenario", "start", str, "2010-01-06")),
        years=get("scenario", "years", float, 10.0),
        curve_kappa=get("scenario", "curve_kappa", float, 0.35),
        curve_theta=get("scenario", "curve_theta", float, 0.025),
        curve_sigma=get("scenario", "curve_sigma", float, 0.006),
        alpha_base=get("scenario", "alpha_base", float, 0.22),
        alpha_kappa=get("scenario", "alpha_kappa", float, 0.8),
        alpha_sigma=get("scenario", "alpha_sigma", float, 0.18),
        alpha_idio_kappa=get("scenario", "alpha_idio_kappa", float, 2.0),
        alpha_idio_sigma=get("scenario", "alpha_idio_sigma", float, 0.04),
        rho_sabr=get("scenario", "rho_sabr", float, -0.25),
        nu=get("scenario", "nu", float, 0.30),
        funding_spread=get("scenario", "funding_spread", float, 0.0015),
    )

    trades_txt = get("trades", "list", str, "paper").strip()
    if trades_txt == "paper":
        trades = paper_trades()
    else:
        trades = tuple(parse_trade_token(t) for t in trades_txt.split(",") if t.strip())

    models_txt = get("models", "list", str, "all").strip()
    if models_txt == "all":
        strategies = ALL_STRATEGIES
    else:
        strategies = tuple(m.strip() for m in models_txt.split(",") if m.strip())

    scheme = CvScheme(
        outer_warmup=get("cv", "outer_warmup_weeks", int, 104),
        outer_step=get("cv", "outer_step_weeks", int, 1),
        inner_warmup=get("cv", "inner_warmup_weeks", int, 52),
        inner_folds=get("cv", "inner_folds", int, 5),
        purge_gap=get("cv", "purge_weeks", int, 52),
    )

    planted = None
    if parser.has_section("planted") and parser.has_option("planted", "coefficients"):
        planted = _parse_planted(parser.get("planted", "coefficients"))

    cfg = RunConfig(
        seed=seed, out_dir=out_dir, threads=threads, scenario=scen,
        trades=trades, strategies=strategies, scheme=scheme,
        cost_mult=get("panel", "cost_mult", float, 0.75),
        winsor=(get("panel", "winsor_low", float, 0.01),
                get("panel", "winsor_high", float, 0.95)),
        gross=get("panel", "gross", bool, False),
        planted=planted,
        snr=get("planted", "snr", float, 2.0),
        label_scale=get("planted", "label_scale", float, 0.10),
    )
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "seed" in clean:
            cfg = replace(cfg, seed=clean["seed"],
                          scenario=replace(cfg.scenario, seed=clean["seed"]))
        if "out_dir" in clean:
            cfg = replace(cfg, out_dir=clean["out_dir"])
        if "threads" in clean:
            cfg = replace(cfg, threads=clean["threads"])
        if "models" in clean:
            cfg = replace(cfg, strategies=tuple(clean["models"]))
        if "trades" in clean:
            cfg = replace(cfg, trades=tuple(parse_trade_token(t)
                                            for t in clean["trades"]))
    return cfg
