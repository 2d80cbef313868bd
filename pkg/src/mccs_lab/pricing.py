"""SABR implied volatility, Black pricing and discount-curve arithmetic.

Everything here is a pure function of its inputs; there is no shared
mutable state, so all operations are safe to call concurrently.

Conventions: times are year fractions from the valuation date, rates are
continuously compounded decimals, vols are lognormal (Black) decimals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CurveCoverageError

VALID_OPTION_KINDS = ("payer", "receiver", "straddle")


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class SabrParams:
    """SABR parameter set for one (expiry, underlying) bucket.

    alpha: initial vol level, beta: CEV exponent, rho_sabr: spot/vol
    correlation, nu: vol-of-vol.
    """

    alpha: float
    beta: float
    rho_sabr: float
    nu: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if not abs(self.rho_sabr) < 1.0:
            raise ValueError(f"|rho_sabr| must be < 1, got {self.rho_sabr}")
        if not self.nu >= 0.0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")

    def with_alpha(self, alpha: float) -> "SabrParams":
        return SabrParams(alpha, self.beta, self.rho_sabr, self.nu)


@dataclass(frozen=True)
class DiscountCurve:
    """Zero curve: continuously-compounded rates on tenor knots.

    Interpolation is linear in the zero rate between knots with flat
    extrapolation on both sides.  df(0) = 1 by construction, and df is
    strictly positive for any finite rate.
    """

    tenors: np.ndarray
    zero_rates: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tenors, dtype=float)
        z = np.asarray(self.zero_rates, dtype=float)
        if t.ndim != 1 or t.shape != z.shape or t.size == 0:
            raise ValueError("tenors and zero_rates must be equal-length 1-d arrays")
        if np.any(np.diff(t) <= 0.0) or t[0] <= 0.0:
            raise ValueError("tenors must be strictly increasing and positive")
        object.__setattr__(self, "tenors", t)
        object.__setattr__(self, "zero_rates", z)

    @property
    def max_tenor(self) -> float:
        return float(self.tenors[-1])

    def zero_rate(self, t):
        return np.interp(t, self.tenors, self.zero_rates)

    def df(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(-self.zero_rate(t) * t)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SwapSpec:
    """Fixed-for-float swap schedule: start and tenor in years from valuation."""

    start: float
    tenor: float
    fixed_freq: int = 1

    def __post_init__(self):
        if self.start < 0.0:
            raise ValueError(f"start must be >= 0, got {self.start}")
        if self.tenor <= 0.0:
            raise ValueError(f"tenor must be > 0, got {self.tenor}")
        if self.fixed_freq < 1:
            raise ValueError(f"fixed_freq must be >= 1, got {self.fixed_freq}")
        n = self.tenor * self.fixed_freq
        if abs(n - round(n)) > 1e-9:
            raise ValueError("tenor must be a whole number of fixed periods")

    @property
    def end(self) -> float:
        return self.start + self.tenor

    def payment_times(self) -> np.ndarray:
        n = int(round(self.tenor * self.fixed_freq))
        return self.start + np.arange(1, n + 1) / self.fixed_freq


def _check_coverage(curve: DiscountCurve, swap: SwapSpec) -> None:
    if swap.end > curve.max_tenor + 1e-9:
        raise CurveCoverageError(
            f"swap ends at {swap.end:g}y but curve knots stop at {curve.max_tenor:g}y"
        )


def annuity(curve: DiscountCurve, swap: SwapSpec) -> float:
    """Present value of the fixed leg's unit coupon stream (the swaption numeraire)."""
    _check_coverage(curve, swap)
    accrual = 1.0 / swap.fixed_freq
    return float(accrual * np.sum(curve.df(swap.payment_times())))


def forward_swap_rate(curve: DiscountCurve, swap: SwapSpec) -> float:
    """Par rate F = (df(start) - df(end)) / annuity."""
    _check_coverage(curve, swap)
    level = annuity(curve, swap)
    return float((curve.df(swap.start) - curve.df(swap.end)) / level)


def hagan_lognormal_vol(F: float, K: float, T: float, p: SabrParams) -> float:
    """Hagan 2002 lognormal SABR expansion with the standard ATM branch.

    The z/x(z) ratio switches to its small-z series below |z| = 1e-6 so the
    smile is continuous through K = F.
    """
    if F <= 0.0 or K <= 0.0 or T <= 0.0:
        raise ValueError(f"F, K, T must all be > 0 (got F={F}, K={K}, T={T})")
    alpha, beta, rho, nu = p.alpha, p.beta, p.rho_sabr, p.nu
    log_fk = math.log(F / K)
    one_b = 1.0 - beta
    fk_pow = (F * K) ** (0.5 * one_b)

    # T-correction is common to both branches
    corr = 1.0 + T * (
        one_b * one_b * alpha * alpha / (24.0 * fk_pow * fk_pow)
        + 0.25 * rho * beta * nu * alpha / fk_pow
        + (2.0 - 3.0 * rho * rho) * nu * nu / 24.0
    )

    z = (nu / alpha) * fk_pow * log_fk
    if abs(z) < 1e-6:
        zx = 1.0 - 0.5 * rho * z
    else:
        x = math.log((math.sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho))
        zx = z / x

    denom = fk_pow * (
        1.0 + one_b * one_b * log_fk * log_fk / 24.0
        + one_b ** 4 * log_fk ** 4 / 1920.0
    )
    return alpha / denom * zx * corr


def black_price(F: float, K: float, T: float, vol: float, level: float,
                kind: str = "straddle") -> float:
    """Black-76 value under the annuity measure; `level` is the numeraire annuity.

    At T = 0 or vol = 0 the value is the discounted intrinsic.  The identity
    payer - receiver = level * (F - K) holds to machine precision.
    """
    if kind not in VALID_OPTION_KINDS:
        raise ValueError(f"kind must be one of {VALID_OPTION_KINDS}, got {kind!r}")
    if vol < 0.0:
        raise ValueError(f"vol must be >= 0, got {vol}")
    if level <= 0.0:
        raise ValueError(f"level must be > 0, got {level}")
    if T < 0.0:
        raise ValueError(f"T must be >= 0, got {T}")

    stdev = vol * math.sqrt(T)
    if stdev == 0.0:
        payer = level * max(F - K, 0.0)
        receiver = level * max(K - F, 0.0)
    else:
        if F <= 0.0 or K <= 0.0:
            raise ValueError(f"F and K must be > 0 when vol*sqrt(T) > 0 (got F={F}, K={K})")
        d1 = math.log(F / K) / stdev + 0.5 * stdev
        d2 = d1 - stdev
        payer = level * (F * _norm_cdf(d1) - K * _norm_cdf(d2))
        receiver = level * (K * _norm_cdf(-d2) - F * _norm_cdf(-d1))

    if kind == "payer":
        return payer
    if kind == "receiver":
        return receiver
    return payer + receiver


def swap_value(curve: DiscountCurve, swap: SwapSpec, fixed_rate: float) -> float:
    """Payer-swap PV at the given fixed rate; zero at the par rate."""
    _check_coverage(curve, swap)
    return float(curve.df(swap.start) - curve.df(swap.end)) - fixed_rate * annuity(curve, swap)
