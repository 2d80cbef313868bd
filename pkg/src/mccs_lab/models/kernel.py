"""Kernel ridge regression with an RBF kernel."""

from __future__ import annotations

import numpy as np


def rbf_kernel(X1: np.ndarray, X2: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (np.sum(X1 ** 2, axis=1)[:, None] + np.sum(X2 ** 2, axis=1)[None, :]
          - 2.0 * X1 @ X2.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


def fit_krr(Xs, ys, hyper, seed):
    gamma = float(hyper["gamma"])
    lam = float(hyper["lam"])
    K = rbf_kernel(Xs, Xs, gamma)
    alpha = np.linalg.solve(K + lam * np.eye(len(ys)), ys)
    return {"alpha": alpha, "X_train": Xs.copy(), "gamma": gamma}


def predict_krr(params, Xs):
    K = rbf_kernel(Xs, params["X_train"], params["gamma"])
    return K @ params["alpha"]


def krr_grid_mse(X_train, y_train, X_val, y_val, lams, gammas):
    """Validation MSE for the full (lam, gamma) grid from one eigendecomposition
    per gamma; returns {(lam, gamma): mse}."""
    out = {}
    for gamma in gammas:
        K = rbf_kernel(X_train, X_train, gamma)
        vals, vecs = np.linalg.eigh(K)
        vty = vecs.T @ y_train
        K_val = rbf_kernel(X_val, X_train, gamma)
        for lam in lams:
            alpha = vecs @ (vty / (vals + lam))
            pred = K_val @ alpha
            out[(lam, gamma)] = float(np.mean((pred - y_val) ** 2))
    return out
