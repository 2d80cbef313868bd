"""Shared fit/predict contract for the model zoo.

Every family trains on per-training-window standardized features AND
labels (distance- and penalty-based methods need it; linear families are
unaffected in fit quality).  FittedModel carries the standardization stats
so predict is a pure function of the stored state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MIN_ROWS_BASE = 10


def min_rows(n_features: int) -> int:
    return max(MIN_ROWS_BASE, n_features + 2)


@dataclass(frozen=True)
class ModelSpec:
    """A model family plus its fixed settings and ordered hyperparameter grid.

    The grid is listed strongest-regularization first; inner CV breaks MSE
    ties by picking the earliest grid entry.
    """

    family: str
    fixed: dict = field(default_factory=dict)
    grid: tuple = ()        # tuple of hyper dicts; empty = nothing to tune

    @property
    def needs_cv(self) -> bool:
        return len(self.grid) > 0


@dataclass(frozen=True)
class FittedModel:
    family: str
    hyper: dict
    params: dict
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    def standardize(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.x_mean.size:
            raise ValueError(
                f"expected (m, {self.x_mean.size}) input, got {X.shape}")
        return (X - self.x_mean) / self.x_std


def standardize_training(X: np.ndarray, y: np.ndarray):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-d with one label per row")
    if len(y) < min_rows(X.shape[1]):
        raise ValueError(
            f"need at least {min_rows(X.shape[1])} rows to fit, got {len(y)}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data must not contain missing values")
    # reduce over column-sorted values so the stats (and everything downstream,
    # e.g. tree split ties) are bit-identical under training-row permutations
    X_sorted = np.sort(X, axis=0)
    x_mean = X_sorted.mean(axis=0)
    x_std = np.sqrt(((X_sorted - x_mean) ** 2).mean(axis=0))
    x_std = np.where(x_std == 0.0, 1.0, x_std)
    y_sorted = np.sort(y)
    y_mean = float(y_sorted.mean())
    y_std = float(np.sqrt(((y_sorted - y_mean) ** 2).mean()))
    if y_std == 0.0:
        y_std = 1.0
    return (X - x_mean) / x_std, (y - y_mean) / y_std, x_mean, x_std, y_mean, y_std


# ---------------------------------------------------------------------------
# serialization (family tag + json parameter blocks)
# ---------------------------------------------------------------------------

def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__nd__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__nd__" in obj:
            return np.array(obj["__nd__"], dtype=obj["dtype"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_text(model: FittedModel) -> str:
    payload = {
        "family": model.family,
        "hyper": _encode(model.hyper),
        "params": _encode(model.params),
        "x_mean": _encode(model.x_mean),
        "x_std": _encode(model.x_std),
        "y_mean": model.y_mean,
        "y_std": model.y_std,
    }
    return json.dumps(payload)


def model_from_text(text: str) -> FittedModel:
    payload = json.loads(text)
    return FittedModel(
        family=payload["family"],
        hyper=_decode(payload["hyper"]),
        params=_decode(payload["params"]),
        x_mean=_decode(payload["x_mean"]),
        x_std=_decode(payload["x_std"]),
        y_mean=payload["y_mean"],
        y_std=payload["y_std"],
    )
