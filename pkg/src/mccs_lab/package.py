"""Mid-curve calendar spread construction and per-date feature computation.

A package is short an option expiring at e on the swap running over
[e+f, e+f+s] (the mid-curve leg) and long an option expiring at e+f on the
same swap (the spot leg).  Both legs are struck at the swap's forward rate
on the inception date and are valued as straddles.

Scenario repricing follows the carry convention: forwards realize (the
curve rolls along itself, leaving the underlying swap's forward unchanged)
and vols roll down the static surface (the same parameters read at the
aged expiries).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .pricing import SwapSpec, annuity, black_price, forward_swap_rate, hagan_lognormal_vol
from .scenario import MarketSnapshot

FEATURE_NAMES = (
    "pv", "strike", "carry", "be_width", "aged_1y_carry", "theta",
    "implied_vol", "gamma", "vega", "curve_carry", "time_carry", "vol_carry",
)

VEGA_BUMP = 0.01          # one vol point on the SABR alphas
GAMMA_BUMP = 0.0025       # 25 bp parallel forward bump
THETA_DT = 1.0 / 365.0
FORWARD_FLOOR = 0.001
BE_BRACKET = 0.05         # initial breakeven search half-width around the strike
BE_BRACKET_CAP = 0.20     # widest half-width tried before flagging the side missing
BE_TOL = 1e-6             # 0.01 bp
BE_MAX_ITER = 80


@dataclass(frozen=True)
class MccsSpec:
    """One row of the trade table: expiry e, forward gap f, swap tenor s (years)."""

    currency: str
    expiry: float
    forward: float
    swap: float

    def __post_init__(self):
        if min(self.expiry, self.forward, self.swap) <= 0.0:
            raise ValueError("expiry, forward and swap tenors must all be > 0")

    @property
    def trade_id(self) -> str:
        return f"{self.currency}_{self.expiry:g}y{self.forward:g}y{self.swap:g}y"


@dataclass(frozen=True)
class OptionLeg:
    """One straddle leg; times are years from the package inception date."""

    expiry: float
    swap: SwapSpec
    position: int  # +1 long, -1 short

    @property
    def vol_tenor(self) -> float:
        # surface underlying bucket: span from option expiry to swap end
        return self.swap.end - self.expiry


@dataclass(frozen=True)
class PackageState:
    spec: MccsSpec
    strike: float
    short_leg: OptionLeg
    long_leg: OptionLeg
    inception: object  # datetime.date

    @property
    def legs(self):
        return (self.short_leg, self.long_leg)


def build_package(spec: MccsSpec, market: MarketSnapshot) -> PackageState:
    """ATMF package: both legs share the underlying swap and its forward strike."""
    swap = SwapSpec(spec.expiry + spec.forward, spec.swap)
    strike = forward_swap_rate(market.curve, swap)
    return PackageState(
        spec=spec,
        strike=strike,
        short_leg=OptionLeg(spec.expiry, swap, -1),
        long_leg=OptionLeg(spec.expiry + spec.forward, swap, +1),
        inception=market.date,
    )


def _leg_value(leg: OptionLeg, strike: float, market: MarketSnapshot, age: float,
               forward=None, alpha_shift: float = 0.0) -> float:
    """Value one leg `age` years after inception under the given market."""
    T = leg.expiry - age
    swap_now = SwapSpec(leg.swap.start - age, leg.swap.tenor, leg.swap.fixed_freq)
    level = annuity(market.curve, swap_now)
    F = forward_swap_rate(market.curve, swap_now) if forward is None else forward
    if T <= 0.0:
        return leg.position * level * abs(F - strike)
    params = market.sabr_at(T, leg.vol_tenor)
    if alpha_shift:
        params = params.with_alpha(max(params.alpha + alpha_shift, 1e-8))
    vol = hagan_lognormal_vol(F, strike, T, params)
    return leg.position * black_price(F, strike, T, vol, level, "straddle")


def package_value(pkg: PackageState, market: MarketSnapshot, age: float = 0.0) -> float:
    """Mark the (possibly aged) package against an actual market snapshot."""
    return sum(_leg_value(leg, pkg.strike, market, age) for leg in pkg.legs)


def package_pv(pkg: PackageState, market: MarketSnapshot) -> float:
    return package_value(pkg, market, age=0.0)


def _scenario_leg_value(leg: OptionLeg, strike: float, market: MarketSnapshot,
                        horizon: float, forward=None, alpha_shift: float = 0.0,
                        roll_annuity: bool = True, decay_time: bool = True,
                        roll_vol: bool = True) -> float:
    """Leg value at a future horizon under the forwards-realize roll of the
    entry snapshot.  The three roll switches isolate the annuity roll-up,
    the expiry decay and the vol-surface roll for carry attribution.
    """
    level = annuity(market.curve, leg.swap)
    if roll_annuity and horizon != 0.0:
        level /= market.curve.df(horizon)
    F = forward_swap_rate(market.curve, leg.swap) if forward is None else forward
    T = leg.expiry - horizon if decay_time else leg.expiry
    vol_expiry = leg.expiry - horizon if roll_vol else leg.expiry
    if T <= 0.0:
        return leg.position * level * abs(F - strike)
    params = market.sabr_at(max(vol_expiry, 0.0), leg.vol_tenor)
    if alpha_shift:
        params = params.with_alpha(max(params.alpha + alpha_shift, 1e-8))
    vol = hagan_lognormal_vol(F, strike, T, params)
    return leg.position * black_price(F, strike, T, vol, level, "straddle")


def _scenario_value(pkg, market, horizon, forward=None, alpha_shift=0.0,
                    roll_annuity=True, decay_time=True, roll_vol=True) -> float:
    return sum(_scenario_leg_value(leg, pkg.strike, market, horizon, forward,
                                   alpha_shift, roll_annuity, decay_time, roll_vol)
               for leg in pkg.legs)


def payoff_profile(pkg: PackageState, market: MarketSnapshot, horizon: float,
                   rate_grid, vol_shift: float = 0.0) -> list[tuple[float, float]]:
    """Package value change at a horizon across underlying-rate scenarios.

    Each grid rate replaces the underlying forward; all SABR alphas are
    shifted by `vol_shift`; the entry PV is netted out.
    """
    rate_grid = list(rate_grid)
    if not rate_grid:
        raise ValueError("rate grid must not be empty")
    if horizon > pkg.short_leg.expiry + 1e-12:
        raise ValueError("horizon must not exceed the short leg expiry")
    entry = package_pv(pkg, market)
    return [(float(r), _scenario_value(pkg, market, horizon, forward=float(r),
                                       alpha_shift=vol_shift) - entry)
            for r in rate_grid]


def _entry_forward(pkg: PackageState, market: MarketSnapshot) -> float:
    return forward_swap_rate(market.curve, pkg.short_leg.swap)


def carry_at_expiry(pkg: PackageState, market: MarketSnapshot) -> float:
    """Value change at the short leg expiry with the forward realized."""
    F = _entry_forward(pkg, market)
    return payoff_profile(pkg, market, pkg.short_leg.expiry, [F])[0][1]


def aged_carry_1y(pkg: PackageState, market: MarketSnapshot) -> float:
    """Carry at a 1y horizon (clipped to the short leg expiry)."""
    h = min(1.0, pkg.short_leg.expiry)
    F = _entry_forward(pkg, market)
    return payoff_profile(pkg, market, h, [F])[0][1]


def carry_decomposition(pkg: PackageState, market: MarketSnapshot):
    """One-factor-at-a-time attribution of the aged 1y carry.

    Each factor reprices a single roll (annuity roll-up, expiry decay, vol
    surface roll) from the entry state; the residual is the remainder, so
    curve + time + vol + residual equals the aged carry identically.
    """
    h = min(1.0, pkg.short_leg.expiry)
    F = _entry_forward(pkg, market)
    entry = package_pv(pkg, market)
    aged = aged_carry_1y(pkg, market)
    curve = _scenario_value(pkg, market, h, forward=F,
                            decay_time=False, roll_vol=False) - entry
    time = _scenario_value(pkg, market, h, forward=F,
                           roll_annuity=False, roll_vol=False) - entry
    vol = _scenario_value(pkg, market, h, forward=F,
                          roll_annuity=False, decay_time=False) - entry
    residual = aged - (curve + time + vol)
    return curve, time, vol, residual


def greeks(pkg: PackageState, market: MarketSnapshot):
    """(theta, vega, gamma) by central finite differences on the package value.

    theta: 1-day pure time decay (vols and curve held fixed), per year.
    vega: one-vol-point bump of every leg alpha, value per vol point.
    gamma: second difference under a 25 bp parallel forward bump.
    """
    F = _entry_forward(pkg, market)

    up = _scenario_value(pkg, market, THETA_DT, forward=F,
                         roll_annuity=False, roll_vol=False)
    dn = _scenario_value(pkg, market, -THETA_DT, forward=F,
                         roll_annuity=False, roll_vol=False)
    theta = (up - dn) / (2.0 * THETA_DT)

    v_up = _scenario_value(pkg, market, 0.0, alpha_shift=+VEGA_BUMP)
    v_dn = _scenario_value(pkg, market, 0.0, alpha_shift=-VEGA_BUMP)
    vega = 0.5 * (v_up - v_dn)

    bump = GAMMA_BUMP
    if F - bump < FORWARD_FLOOR:
        bump = F - FORWARD_FLOOR
        warnings.warn(f"gamma bump shrunk to {bump:.6f} to keep the forward "
                      f"above {FORWARD_FLOOR}", stacklevel=2)
    mid = _scenario_value(pkg, market, 0.0, forward=F)
    g_up = _scenario_value(pkg, market, 0.0, forward=F + bump)
    g_dn = _scenario_value(pkg, market, 0.0, forward=F - bump)
    gamma = (g_up - 2.0 * mid + g_dn) / (bump * bump)
    return theta, vega, gamma


def _expiry_payoff(pkg, market, entry, rate) -> float:
    return _scenario_value(pkg, market, pkg.short_leg.expiry, forward=rate) - entry


def breakeven_points(pkg: PackageState, market: MarketSnapshot):
    """Roots of the expiry payoff on each side of the strike, or nan.

    Bisection to 0.01 bp inside a bracket that starts at strike +/- 500 bp
    and doubles outward (long-dated packages keep enough wing time value
    that the near root can sit past 500 bp) up to +/- 2000 bp; the lower
    edge stops at the rate floor.  A side without a sign change inside the
    cap is reported nan and the row is dropped later by the missing-data
    pass.
    """
    K = pkg.strike
    entry = package_pv(pkg, market)
    at_k = _expiry_payoff(pkg, market, entry, K)
    if at_k <= 0.0:
        return float("nan"), float("nan")

    def bisect(lo, hi, f_lo, f_hi):
        for _ in range(BE_MAX_ITER):
            mid = 0.5 * (lo + hi)
            f_mid = _expiry_payoff(pkg, market, entry, mid)
            if f_lo * f_mid <= 0.0:
                hi, f_hi = mid, f_mid
            else:
                lo, f_lo = mid, f_mid
            if hi - lo < BE_TOL:
                break
        return 0.5 * (lo + hi)

    upper = float("nan")
    w = BE_BRACKET
    while w <= BE_BRACKET_CAP + 1e-12:
        f_hi = _expiry_payoff(pkg, market, entry, K + w)
        if f_hi < 0.0:
            upper = bisect(K, K + w, at_k, f_hi)
            break
        w *= 2.0

    lower = float("nan")
    w = BE_BRACKET
    while True:
        lo_rate = max(K - w, FORWARD_FLOOR * 0.5)
        f_lo = _expiry_payoff(pkg, market, entry, lo_rate)
        if f_lo < 0.0:
            lower = bisect(lo_rate, K, f_lo, at_k)
            break
        if lo_rate == FORWARD_FLOOR * 0.5 or w > BE_BRACKET_CAP:
            break
        w *= 2.0
    return lower, upper


def breakeven_width(pkg: PackageState, market: MarketSnapshot) -> float:
    lower, upper = breakeven_points(pkg, market)
    return upper - lower


def atmf_implied_vol(pkg: PackageState, market: MarketSnapshot) -> float:
    """ATMF lognormal vol of the long (spot swaption) leg."""
    leg = pkg.long_leg
    F = _entry_forward(pkg, market)
    return hagan_lognormal_vol(F, pkg.strike, leg.expiry,
                               market.sabr_at(leg.expiry, leg.vol_tenor))


@dataclass(frozen=True)
class FeatureVector:
    """The 12 per-date package metrics, in FEATURE_NAMES order."""

    pv: float
    strike: float
    carry: float
    be_width: float
    aged_1y_carry: float
    theta: float
    implied_vol: float
    gamma: float
    vega: float
    curve_carry: float
    time_carry: float
    vol_carry: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])


def feature_vector(pkg: PackageState, market: MarketSnapshot) -> FeatureVector:
    theta, vega, gamma = greeks(pkg, market)
    curve, time, vol, _residual = carry_decomposition(pkg, market)
    return FeatureVector(
        pv=package_pv(pkg, market),
        strike=pkg.strike,
        carry=carry_at_expiry(pkg, market),
        be_width=breakeven_width(pkg, market),
        aged_1y_carry=aged_carry_1y(pkg, market),
        theta=theta,
        implied_vol=atmf_implied_vol(pkg, market),
        gamma=gamma,
        vega=vega,
        curve_carry=curve,
        time_carry=time,
        vol_carry=vol,
    )
