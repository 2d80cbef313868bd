"""The predictive model zoo behind one fit/predict contract.

Eleven families plus the two forecast baselines, each implemented from
scratch on numpy/numba.  Grids follow the experiment table, ordered
strongest-regularization first so MSE ties resolve toward the more
regularized setting.
"""

from __future__ import annotations

import numpy as np

from .base import (
    FittedModel,
    ModelSpec,
    min_rows,
    model_from_text,
    model_to_text,
    standardize_training,
)
from . import baselines, kernel, linear, mlp, neighbors, svr, trees

LAMBDA_GRID = (1.0, 0.1, 0.01, 0.001)      # printed grid deduplicated
GAMMA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
KNN_GRID = (3, 5, 7, 9)
DEPTH_GRID = (2, 3, 5, 7)
LR_GRID = (0.1, 0.3, 0.5)
HIDDEN_GRID = (5, 7, 12)
C_GRID = (1.0, 10.0, 100.0, 1000.0)

MODEL_FAMILIES = ("classic", "backsel", "ridge", "lasso", "krr", "knn",
                  "cart", "rf", "gbm", "mlp", "svr")
BASELINE_FAMILIES = ("mean", "naive")

DISPLAY_NAMES = {
    "classic": "Classic Regression",
    "backsel": "BackSel Regression",
    "ridge": "Ridge Regression",
    "lasso": "Lasso Regression",
    "krr": "KRR-RBF",
    "knn": "kNN",
    "cart": "CART",
    "rf": "Random Forest",
    "gbm": "Grad Boost Reg",
    "mlp": "MLP",
    "svr": "SVR-RBF",
    "mean": "Mean Pred",
    "naive": "Naive",
    "zscore_be_width": "Z-Score: BE-Width",
    "zscore_carry": "Z-Score: CarryAtExpiry",
}


def paper_model_specs() -> dict[str, ModelSpec]:
    """The eleven predictive families plus both baselines, grids as tabled."""
    return {
        "classic": ModelSpec("classic"),
        "backsel": ModelSpec("backsel"),
        "ridge": ModelSpec("ridge", grid=tuple({"lam": l} for l in LAMBDA_GRID)),
        "lasso": ModelSpec("lasso", grid=tuple({"lam": l} for l in LAMBDA_GRID)),
        "krr": ModelSpec("krr", grid=tuple({"lam": l, "gamma": g}
                                           for l in LAMBDA_GRID for g in GAMMA_GRID)),
        "knn": ModelSpec("knn", grid=tuple({"k": k} for k in KNN_GRID)),
        "cart": ModelSpec("cart", grid=tuple({"max_depth": d} for d in DEPTH_GRID)),
        "rf": ModelSpec("rf", fixed={"n_trees": trees.N_TREES,
                                     "max_depth": trees.FOREST_DEPTH}),
        "gbm": ModelSpec("gbm", fixed={"n_trees": trees.N_TREES,
                                       "max_depth": trees.FOREST_DEPTH},
                         grid=tuple({"lr": r} for r in LR_GRID)),
        "mlp": ModelSpec("mlp", grid=tuple({"lam": l, "hidden": h}
                                           for l in LAMBDA_GRID for h in HIDDEN_GRID)),
        "svr": ModelSpec("svr", grid=tuple({"C": c, "gamma": g}
                                           for c in C_GRID for g in GAMMA_GRID)),
        "mean": ModelSpec("mean"),
        "naive": ModelSpec("naive"),
    }


_FITTERS = {
    "classic": linear.fit_classic,
    "backsel": linear.fit_backsel,
    "ridge": linear.fit_ridge,
    "lasso": linear.fit_lasso,
    "krr": kernel.fit_krr,
    "knn": neighbors.fit_knn,
    "cart": trees.fit_cart,
    "rf": trees.fit_rf,
    "gbm": trees.fit_gbm,
    "mlp": mlp.fit_mlp,
    "svr": svr.fit_svr,
    "mean": baselines.fit_mean,
    "naive": baselines.fit_naive,
}

_PREDICTORS = {
    "classic": linear.predict_linear,
    "backsel": linear.predict_linear,
    "ridge": linear.predict_linear,
    "lasso": linear.predict_linear,
    "krr": kernel.predict_krr,
    "knn": neighbors.predict_knn,
    "cart": trees.predict_trees,
    "rf": trees.predict_trees,
    "gbm": trees.predict_trees,
    "mlp": mlp.predict_mlp,
    "svr": svr.predict_svr,
    "mean": baselines.predict_constant,
    "naive": baselines.predict_constant,
}


def default_hyper(spec: ModelSpec) -> dict:
    if not spec.grid:
        return {}
    return dict(spec.grid[len(spec.grid) // 2])


def fit(spec: ModelSpec, X: np.ndarray, y: np.ndarray, seed: int = 0,
        hyper: dict | None = None) -> FittedModel:
    """Standardize on the training window and fit the requested family."""
    if spec.family not in _FITTERS:
        raise ValueError(f"unknown model family {spec.family!r}")
    hyper = dict(hyper) if hyper else (default_hyper(spec) if spec.grid else {})
    Xs, ys, x_mean, x_std, y_mean, y_std = standardize_training(X, y)
    params = _FITTERS[spec.family](Xs, ys, hyper, seed)
    return FittedModel(spec.family, hyper, params, x_mean, x_std, y_mean, y_std)


def predict(model: FittedModel, X: np.ndarray) -> np.ndarray:
    Xs = model.standardize(X)
    out = np.asarray(_PREDICTORS[model.family](model.params, Xs), dtype=float).reshape(-1)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{model.family} produced non-finite predictions")
    return model.y_mean + model.y_std * out


lasso_feature_significance = linear.lasso_feature_significance

__all__ = [
    "BASELINE_FAMILIES",
    "DISPLAY_NAMES",
    "FittedModel",
    "MODEL_FAMILIES",
    "ModelSpec",
    "default_hyper",
    "fit",
    "lasso_feature_significance",
    "min_rows",
    "model_from_text",
    "model_to_text",
    "paper_model_specs",
    "predict",
]
