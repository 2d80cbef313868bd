"""Linear families: OLS, backward selection by AIC, ridge, lasso.

All solvers work on standardized features and labels with an unpenalized
intercept (zero in standardized coordinates).  Objectives are normalized
by the sample count, so the lasso's full-shrinkage point is
lambda_max = max|X'y|/n.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

LASSO_TOL = 1e-8
LASSO_KKT_STOP = 5e-7      # stationarity stop for nearly collinear designs
LASSO_KKT_ACCEPT = 1e-6    # quality bar when the sweep budget runs out
LASSO_MAX_SWEEPS = 100_000
RIDGE_JITTER = 1e-10


def ols_coefficients(Xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(Xs, ys, rcond=None)
    return beta


def fit_classic(Xs, ys, hyper, seed):
    return {"beta": ols_coefficients(Xs, ys)}


def _aic(rss: float, n: int, n_params: int) -> float:
    return n * math.log(max(rss, 1e-300) / n) + 2.0 * n_params


def fit_backsel(Xs, ys, hyper, seed):
    """Backward elimination: drop the feature whose removal most improves
    AIC, stop when no removal improves it."""
    n, d = Xs.shape
    active = list(range(d))

    def rss_of(cols):
        if not cols:
            return float(np.sum(ys * ys)), np.zeros(0)
        beta = ols_coefficients(Xs[:, cols], ys)
        r = ys - Xs[:, cols] @ beta
        return float(np.sum(r * r)), beta

    rss, beta = rss_of(active)
    current = _aic(rss, n, len(active) + 1)
    while active:
        best_aic, best_j = current, None
        for j in active:
            cols = [c for c in active if c != j]
            rss_j, _ = rss_of(cols)
            cand = _aic(rss_j, n, len(cols) + 1)
            if cand < best_aic:
                best_aic, best_j = cand, j
        if best_j is None:
            break
        active.remove(best_j)
        current = best_aic
    full = np.zeros(d)
    if active:
        full[active] = ols_coefficients(Xs[:, active], ys)
    return {"beta": full, "active": np.array(active, dtype=np.int64)}


def fit_ridge(Xs, ys, hyper, seed):
    n, d = Xs.shape
    lam = float(hyper["lam"])
    A = Xs.T @ Xs / n + lam * np.eye(d)
    b = Xs.T @ ys / n
    try:
        beta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        import warnings
        warnings.warn("singular ridge system; adding diagonal jitter", stacklevel=2)
        beta = np.linalg.solve(A + RIDGE_JITTER * np.eye(d), b)
    return {"beta": beta}


@njit(cache=True)
def _lasso_cd(XtX, Xty, col_norm, lam, beta, max_sweeps, tol, kkt_stop):
    """Cyclic CD; stops on coefficient stability or, for nearly collinear
    designs whose coefficients keep sliding along a flat valley, on the
    stationarity (KKT) residual."""
    d = beta.size
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(d):
            if col_norm[j] == 0.0:
                continue
            rho = Xty[j]
            for k in range(d):
                if k != j:
                    rho -= XtX[j, k] * beta[k]
            if rho > lam:
                new = (rho - lam) / col_norm[j]
            elif rho < -lam:
                new = (rho + lam) / col_norm[j]
            else:
                new = 0.0
            delta = abs(new - beta[j])
            if delta > max_delta:
                max_delta = delta
            beta[j] = new
        if max_delta < tol:
            return sweep + 1
        if sweep % 20 == 19:
            viol = 0.0
            for j in range(d):
                g = Xty[j]
                for k in range(d):
                    g -= XtX[j, k] * beta[k]
                if beta[j] == 0.0:
                    v = abs(g) - lam
                elif beta[j] > 0.0:
                    v = abs(g - lam)
                else:
                    v = abs(g + lam)
                if v > viol:
                    viol = v
            if viol < kkt_stop:
                return sweep + 1
    return -1


def lasso_lambda_max(Xs, ys) -> float:
    return float(np.max(np.abs(Xs.T @ ys)) / len(ys))


def fit_lasso(Xs, ys, hyper, seed, warm_start=None):
    """Cyclic coordinate descent on (1/2n)||y - Xb||^2 + lam*||b||_1.

    Small penalties on nearly collinear columns converge slowly from a cold
    start, so the solve warm-starts down a short geometric lambda path from
    lambda_max; every stage uses the same tolerance and sweep cap.
    """
    from ..errors import ConvergenceError

    n, d = Xs.shape
    lam = float(hyper["lam"])
    XtX = Xs.T @ Xs / n
    Xty = Xs.T @ ys / n
    col_norm = np.diag(XtX).copy()
    beta = np.zeros(d) if warm_start is None else warm_start.copy()

    path = [lam]
    if warm_start is None:
        lam_max = lasso_lambda_max(Xs, ys)
        while path[-1] < 0.25 * lam_max:
            path.append(path[-1] * 4.0)
        path.reverse()
    sweeps = 0
    for stage_lam in path:
        s = _lasso_cd(XtX, Xty, col_norm, stage_lam, beta, LASSO_MAX_SWEEPS,
                      LASSO_TOL, LASSO_KKT_STOP)
        if s < 0:
            if stage_lam == lam:
                # sweep budget exhausted: accept if stationarity already
                # meets the quality bar (flat-valley collinear designs creep
                # toward tighter tolerances at a useless pace)
                g = Xty - XtX @ beta
                viol = 0.0
                for j in range(d):
                    if beta[j] == 0.0:
                        viol = max(viol, abs(g[j]) - lam)
                    else:
                        viol = max(viol, abs(g[j] - lam * np.sign(beta[j])))
                if viol >= LASSO_KKT_ACCEPT:
                    raise ConvergenceError(
                        "lasso coordinate descent did not converge "
                        f"(KKT residual {viol:.2e})", LASSO_MAX_SWEEPS)
            sweeps += LASSO_MAX_SWEEPS
        else:
            sweeps += s
    return {"beta": beta, "sweeps": sweeps}


def predict_linear(params, Xs):
    return Xs @ params["beta"]


def lasso_kkt_residuals(params, Xs, ys, lam):
    """Max violation of the lasso stationarity conditions (0 at an optimum):
    |X_j'r/n| <= lam where beta_j = 0, X_j'r/n = lam*sign(beta_j) otherwise."""
    n = len(ys)
    r = ys - Xs @ params["beta"]
    g = Xs.T @ r / n
    beta = params["beta"]
    viol = 0.0
    for j in range(len(beta)):
        if beta[j] == 0.0:
            viol = max(viol, abs(g[j]) - lam)
        else:
            viol = max(viol, abs(g[j] - lam * np.sign(beta[j])))
    return viol


def lasso_feature_significance(model, X, y) -> np.ndarray:
    """Normalized t-stats of an OLS refit on the lasso active set.

    Each classical t-stat is divided by the sum of absolute t-stats, so the
    entries lie in [-1, 1] and sum to at most 1 in absolute value; inactive
    features report 0.
    """
    if model.family != "lasso":
        raise ValueError(f"feature significance is defined for lasso, got {model.family}")
    beta = model.params["beta"]
    active = np.flatnonzero(beta != 0.0)
    out = np.zeros(beta.size)
    if active.size == 0:
        return out
    Xs = model.standardize(X)
    ys = (np.asarray(y, dtype=float) - model.y_mean) / model.y_std
    A = Xs[:, active]
    n, p = A.shape
    if n <= p:
        return out
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    dof = n - p
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.pinv(A.T @ A)
    se = np.sqrt(np.clip(np.diag(cov), 1e-300, None))
    t = coef / se
    denom = float(np.sum(np.abs(t)))
    if denom == 0.0:
        return out
    out[active] = t / denom
    return out
