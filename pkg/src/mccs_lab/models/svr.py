"""Epsilon-insensitive support vector regression, RBF kernel, SMO solver.

The dual is solved over the 2n box variables (alpha, alpha*) with the
maximal-violating-pair working-set rule and analytic pair updates; the
solutions for an ascending C path share gradients, so the C grid is warm
started for free.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..errors import ConvergenceError
from .kernel import rbf_kernel

EPSILON = 0.1          # insensitivity tube on standardized labels
KKT_TOL = 1e-3
MAX_UPDATES = 400_000


@njit(cache=True)
def _smo(K, y, C, eps, tol, max_iter, lam_box, grad):
    """Run SMO until the KKT gap is below tol; lam_box and grad are carried
    state so an ascending-C path can resume.  Returns (iterations, gap)."""
    n = y.size
    it = 0
    while it < max_iter:
        # maximal violating pair over v_p = -s_p * grad_p
        m_val = -1e300
        m_idx = -1
        M_val = 1e300
        M_idx = -1
        for p in range(2 * n):
            s = 1.0 if p < n else -1.0
            v = -s * grad[p]
            if (s > 0.0 and lam_box[p] < C) or (s < 0.0 and lam_box[p] > 0.0):
                if v > m_val:
                    m_val = v
                    m_idx = p
            if (s > 0.0 and lam_box[p] > 0.0) or (s < 0.0 and lam_box[p] < C):
                if v < M_val:
                    M_val = v
                    M_idx = p
        if m_idx < 0 or M_idx < 0 or m_val - M_val < tol:
            return it, m_val - M_val
        i, j = m_idx, M_idx
        si = 1.0 if i < n else -1.0
        sj = 1.0 if j < n else -1.0
        ii = i % n
        jj = j % n
        eta = K[ii, ii] + K[jj, jj] - 2.0 * K[ii, jj]
        if eta < 1e-12:
            eta = 1e-12
        t = (m_val - M_val) / eta
        # box caps for x_i moving by si*t and x_j by -sj*t
        cap_i = C - lam_box[i] if si > 0.0 else lam_box[i]
        cap_j = lam_box[j] if sj > 0.0 else C - lam_box[j]
        if t > cap_i:
            t = cap_i
        if t > cap_j:
            t = cap_j
        if t <= 0.0:
            return it, m_val - M_val
        lam_box[i] += si * t if si > 0.0 else -t
        lam_box[j] -= sj * t if sj > 0.0 else -t
        # gradient update: d(grad_q) = s_q * t * (K[q, ii] - K[q, jj])
        for q in range(n):
            delta = t * (K[q, ii] - K[q, jj])
            grad[q] += delta
            grad[q + n] -= delta
        it += 1
    return -1, m_val - M_val


def _solve_path(K, ys, Cs, eps=EPSILON, tol=KKT_TOL):
    """Solve the SVR dual for an ascending C path; returns {C: (beta, b)}."""
    n = len(ys)
    lam_box = np.zeros(2 * n)
    grad = np.concatenate([eps - ys, eps + ys])
    out = {}
    for C in sorted(Cs):
        it, gap = _smo(K, ys, float(C), eps, tol, MAX_UPDATES, lam_box, grad)
        if it < 0:
            raise ConvergenceError(f"SVR SMO stalled at C={C} (gap {gap:.2e})",
                                   MAX_UPDATES)
        beta = lam_box[:n] - lam_box[n:]
        b = _bias_from_gap(lam_box, grad, float(C))
        out[float(C)] = (beta.copy(), float(b))
    return out


def _bias_from_gap(lam_box, grad, C):
    """Intercept: average of -s_p*grad_p over interior variables, else the
    midpoint of the up/low KKT bounds."""
    n = grad.size // 2
    s = np.concatenate([np.ones(n), -np.ones(n)])
    v = -s * grad
    interior = (lam_box > 0.0) & (lam_box < C)
    if np.any(interior):
        return float(v[interior].mean())
    up = ((s > 0.0) & (lam_box < C)) | ((s < 0.0) & (lam_box > 0.0))
    low = ((s > 0.0) & (lam_box > 0.0)) | ((s < 0.0) & (lam_box < C))
    m_val = v[up].max() if np.any(up) else 0.0
    M_val = v[low].min() if np.any(low) else 0.0
    return 0.5 * (m_val + M_val)


def fit_svr(Xs, ys, hyper, seed):
    gamma = float(hyper["gamma"])
    C = float(hyper["C"])
    K = rbf_kernel(Xs, Xs, gamma)
    beta, b = _solve_path(K, ys, [C])[C]
    return {"beta": beta, "b": b, "X_train": Xs.copy(), "gamma": gamma,
            "C": C, "eps": EPSILON}


def predict_svr(params, Xs):
    K = rbf_kernel(Xs, params["X_train"], params["gamma"])
    return K @ params["beta"] + params["b"]


def svr_dual_objective(beta, K, ys, eps=EPSILON):
    return float(-0.5 * beta @ K @ beta + beta @ ys - eps * np.sum(np.abs(beta)))
