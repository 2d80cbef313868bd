"""Synthetic weekly market history: curves plus a SABR parameter surface.

The generator stands in for a market-data system.  A single curve level and
the log of every surface alpha follow exactly-discretized mean-reverting
(OU) processes; draws come from per-(seed, step, stream) RNG streams so
the history for a given seed is bit-identical no matter how consumers
parallelize around it.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from datetime import date, timedelta

import numpy as np

from .errors import GenerationError
from .pricing import DiscountCurve, SabrParams

CURVE_TENORS = np.array([0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0])
SURFACE_EXPIRIES = np.array([0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0])
SURFACE_TENORS = np.array([1.0, 2.0, 3.0, 5.0, 8.0, 10.0])

_CURVE_STREAM = 10_000_019
_COMMON_VOL_STREAM = 10_000_079


@dataclass(frozen=True)
class SabrSurface:
    """SABR parameters per (expiry, underlying-tenor) bucket.

    Continuous lookups bilinearly interpolate alpha over the knot grid with
    flat extrapolation; beta, rho and nu are bucket-constant scalars.
    """

    expiries: np.ndarray
    tenors: np.ndarray
    alpha: np.ndarray  # (n_expiries, n_tenors)
    beta: float
    rho_sabr: float
    nu: float

    def alpha_at(self, expiry: float, tenor: float) -> float:
        e = min(max(expiry, self.expiries[0]), self.expiries[-1])
        t = min(max(tenor, self.tenors[0]), self.tenors[-1])
        i = int(np.clip(np.searchsorted(self.expiries, e) - 1, 0, len(self.expiries) - 2))
        j = int(np.clip(np.searchsorted(self.tenors, t) - 1, 0, len(self.tenors) - 2))
        we = (e - self.expiries[i]) / (self.expiries[i + 1] - self.expiries[i])
        wt = (t - self.tenors[j]) / (self.tenors[j + 1] - self.tenors[j])
        a = self.alpha
        return float((1 - we) * (1 - wt) * a[i, j] + we * (1 - wt) * a[i + 1, j]
                     + (1 - we) * wt * a[i, j + 1] + we * wt * a[i + 1, j + 1])

    def params_at(self, expiry: float, tenor: float) -> SabrParams:
        return SabrParams(self.alpha_at(expiry, tenor), self.beta, self.rho_sabr, self.nu)


@dataclass(frozen=True)
class MarketSnapshot:
    """One dated market state: discount curve, SABR surface, 3m funding rate."""

    date: date
    curve: DiscountCurve
    surface: SabrSurface
    funding_rate: float

    def sabr_at(self, expiry: float, tenor: float) -> SabrParams:
        return self.surface.params_at(expiry, tenor)

    def validate(self, forward_floor: float = 0.001) -> None:
        if np.any(self.surface.alpha <= 0.0):
            raise GenerationError(f"non-positive alpha in surface on {self.date}")
        if _min_knot_forward(self.curve) < forward_floor - 1e-12:
            raise GenerationError(f"curve forward below floor on {self.date}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Process parameters for the synthetic history."""

    seed: int = 0
    start: date = date(2010, 1, 6)
    years: float = 10.0
    # curve level OU + fixed term-structure shape
    curve_kappa: float = 0.35
    curve_theta: float = 0.025
    curve_sigma: float = 0.006
    curve_slope: float = 0.010
    curve_slope_tau: float = 4.0
    # surface alpha dynamics: common log-OU factor + per-bucket log-OU.
    # The bucket means are flat across expiry so the calendar spread keeps a
    # positive value margin for every trade in the table; the idio noise is
    # kept small for the same reason.
    alpha_base: float = 0.22
    alpha_kappa: float = 0.8
    alpha_sigma: float = 0.18
    alpha_idio_kappa: float = 2.0
    alpha_idio_sigma: float = 0.04
    beta: float = 1.0
    rho_sabr: float = -0.25
    nu: float = 0.30
    funding_spread: float = 0.0015
    forward_floor: float = 0.001
    max_retries: int = 100

    def __post_init__(self):
        if self.years < 3.0:
            raise ValueError("years must be >= 3 (training warm-up plus holding period)")
        for name in ("curve_sigma", "alpha_sigma", "alpha_idio_sigma"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    def wednesdays(self) -> list[date]:
        d = self.start + timedelta(days=(2 - self.start.weekday()) % 7)
        end = self.start + timedelta(days=round(self.years * 365.25))
        out = []
        while d < end:
            out.append(d)
            d += timedelta(days=7)
        return out


def _stream(seed: int, step: int, stream_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, step, stream_id)))


def _ou_step(x, mean, kappa, sigma, dt, z):
    if kappa > 0.0:
        decay = math.exp(-kappa * dt)
        sd = sigma * math.sqrt((1.0 - decay * decay) / (2.0 * kappa))
    else:
        decay = 1.0
        sd = sigma * math.sqrt(dt)
    return mean + (x - mean) * decay + sd * z


def _curve_from_level(level: float, cfg: ScenarioConfig) -> DiscountCurve:
    zeros = level + cfg.curve_slope * (1.0 - np.exp(-CURVE_TENORS / cfg.curve_slope_tau))
    return DiscountCurve(CURVE_TENORS.copy(), zeros)


def _min_knot_forward(curve: DiscountCurve) -> float:
    t = curve.tenors
    z = curve.zero_rates
    fwd = np.diff(z * t) / np.diff(t)
    return float(min(z[0], fwd.min()))


def _alpha_term_structure(cfg: ScenarioConfig) -> np.ndarray:
    # flat across expiry, mild decline across underlying tenor
    shape_t = 1.0 + 0.04 * np.exp(-SURFACE_TENORS / 5.0)
    return cfg.alpha_base * np.outer(np.ones(len(SURFACE_EXPIRIES)), shape_t)


def generate_history(cfg: ScenarioConfig) -> list[MarketSnapshot]:
    """Generate one MarketSnapshot per Wednesday over the configured span."""
    dates = cfg.wednesdays()
    dt = 1.0 / 52.0
    n_exp, n_ten = len(SURFACE_EXPIRIES), len(SURFACE_TENORS)
    mean_log_alpha = np.log(_alpha_term_structure(cfg))

    level = cfg.curve_theta
    common = 0.0
    idio = np.zeros((n_exp, n_ten))
    out = []
    for step, d in enumerate(dates):
        if step > 0:
            rng = _stream(cfg.seed, step, _CURVE_STREAM)
            for attempt in range(cfg.max_retries + 1):
                cand = _ou_step(level, cfg.curve_theta, cfg.curve_kappa,
                                cfg.curve_sigma, dt, rng.standard_normal())
                if _min_knot_forward(_curve_from_level(cand, cfg)) >= cfg.forward_floor:
                    level = cand
                    break
            else:
                raise GenerationError(
                    f"could not keep forwards above the floor on {d} "
                    f"after {cfg.max_retries} retries")
            common = _ou_step(common, 0.0, cfg.alpha_kappa, cfg.alpha_sigma, dt,
                              _stream(cfg.seed, step, _COMMON_VOL_STREAM).standard_normal())
            for b in range(n_exp * n_ten):
                z = _stream(cfg.seed, step, b).standard_normal()
                i, j = divmod(b, n_ten)
                idio[i, j] = _ou_step(idio[i, j], 0.0, cfg.alpha_idio_kappa,
                                      cfg.alpha_idio_sigma, dt, z)
        curve = _curve_from_level(level, cfg)
        surface = SabrSurface(SURFACE_EXPIRIES.copy(), SURFACE_TENORS.copy(),
                              np.exp(mean_log_alpha + common + idio),
                              cfg.beta, cfg.rho_sabr, cfg.nu)
        snap = MarketSnapshot(d, curve, surface,
                              float(curve.zero_rate(0.25)) + cfg.funding_spread)
        snap.validate(cfg.forward_floor)
        out.append(snap)
    return out


# ---------------------------------------------------------------------------
# Planted ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantedHistory:
    """A market history whose holding-period returns are replaced by a known
    linear function of the trade's own standardized features plus noise.

    With coefficients all zero the labels are pure noise.  The signal part
    is scaled to unit variance, the noise to 1/sqrt(snr), so the variance
    ratio equals `snr` and the best attainable prediction correlation is
    sqrt(snr / (1 + snr)).
    """

    snapshots: list[MarketSnapshot]
    coefficients: dict[str, float]
    snr: float
    seed: int = 0
    label_scale: float = 0.10

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]


def plant_signal(history, coefficients: dict[str, float], snr: float,
                 seed: int = 0, label_scale: float = 0.10) -> PlantedHistory:
    """Attach a planted label model to a history.

    The panel builder realizes the labels: standardized feature combination
    (unit variance) plus Gaussian noise of variance 1/snr, all times
    `label_scale`.
    """
    if snr <= 0.0:
        raise ValueError(f"snr must be > 0, got {snr}")
    from .package import FEATURE_NAMES
    unknown = set(coefficients) - set(FEATURE_NAMES)
    if unknown:
        raise ValueError(f"unknown feature names in planted coefficients: {sorted(unknown)}")
    snaps = list(history.snapshots) if isinstance(history, PlantedHistory) else list(history)
    return PlantedHistory(snaps, dict(coefficients), float(snr), seed, label_scale)


# ---------------------------------------------------------------------------
# CSV archive (one row per date x surface bucket)
# ---------------------------------------------------------------------------

CSV_HEADER = ("date,expiry_bucket,tenor_bucket,alpha,beta,rho,nu,"
              "curve_tenors,curve_zeros,funding_rate")


def _join_floats(values) -> str:
    return ";".join(repr(float(v)) for v in values)


def snapshots_to_csv(snapshots) -> str:
    lines = [CSV_HEADER]
    for s in snapshots:
        tenors = _join_floats(s.curve.tenors)
        zeros = _join_floats(s.curve.zero_rates)
        sf = s.surface
        for i, e in enumerate(sf.expiries):
            for j, t in enumerate(sf.tenors):
                lines.append(",".join([
                    s.date.isoformat(), repr(float(e)), repr(float(t)),
                    repr(float(sf.alpha[i, j])), repr(float(sf.beta)),
                    repr(float(sf.rho_sabr)), repr(float(sf.nu)),
                    tenors, zeros, repr(float(s.funding_rate)),
                ]))
    return "\n".join(lines) + "\n"


def snapshots_from_csv(text: str) -> list[MarketSnapshot]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized scenario CSV header")
    by_date: dict[str, dict] = {}
    for ln in lines[1:]:
        (d, e, t, a, beta, rho, nu, tenors, zeros, funding) = ln.split(",")
        rec = by_date.setdefault(d, {"cells": {}, "tenors": tenors, "zeros": zeros,
                                     "beta": beta, "rho": rho, "nu": nu,
                                     "funding": funding})
        rec["cells"][(float(e), float(t))] = float(a)
    out = []
    for d in sorted(by_date):
        rec = by_date[d]
        expiries = np.array(sorted({e for e, _ in rec["cells"]}))
        tenors = np.array(sorted({t for _, t in rec["cells"]}))
        alpha = np.array([[rec["cells"][(e, t)] for t in tenors] for e in expiries])
        curve = DiscountCurve(
            np.array([float(x) for x in rec["tenors"].split(";")]),
            np.array([float(x) for x in rec["zeros"].split(";")]))
        surface = SabrSurface(expiries, tenors, alpha, float(rec["beta"]),
                              float(rec["rho"]), float(rec["nu"]))
        out.append(MarketSnapshot(date.fromisoformat(d), curve, surface,
                                  float(rec["funding"])))
    return out
