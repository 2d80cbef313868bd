"""Single-hidden-layer tanh perceptron trained by full-batch gradient descent.

Many (hidden size, weight decay) combinations sharing one training set run
as a padded batch: units beyond a combo's hidden size start at zero and
stay zero under the updates, so one tensor loop trains the whole grid.
"""

from __future__ import annotations

import numpy as np

EPOCHS = 2000
LEARNING_RATE = 1e-2


def _init_params(d, hidden, h_max, rng, dtype):
    W1 = np.zeros((d, h_max), dtype=dtype)
    b1 = np.zeros(h_max, dtype=dtype)
    w2 = np.zeros((h_max, 1), dtype=dtype)
    lim1 = np.sqrt(6.0 / (d + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 1))
    W1[:, :hidden] = rng.uniform(-lim1, lim1, size=(d, hidden))
    w2[:hidden, 0] = rng.uniform(-lim2, lim2, size=hidden)
    return W1, b1, w2, 0.0


def train_mlp_batch(Xs, ys, combos, seeds, epochs=EPOCHS, lr=LEARNING_RATE,
                    dtype=np.float64):
    """Train one network per (hidden, lam) combo on the shared training set.

    Returns a list of parameter dicts aligned with `combos`.
    """
    n, d = Xs.shape
    B = len(combos)
    h_max = max(h for h, _ in combos)
    W1 = np.empty((B, d, h_max), dtype=dtype)
    b1 = np.zeros((B, 1, h_max), dtype=dtype)
    w2 = np.empty((B, h_max, 1), dtype=dtype)
    b2 = np.zeros((B, 1, 1), dtype=dtype)
    lam = np.empty((B, 1, 1), dtype=dtype)
    for b, ((hidden, l), seed) in enumerate(zip(combos, seeds)):
        rng = np.random.default_rng(seed)
        W1[b], b1[b, 0], w2[b], _ = _init_params(d, hidden, h_max, rng, dtype)
        lam[b, 0, 0] = l

    X = np.ascontiguousarray(Xs, dtype=dtype)[None]      # (1, n, d)
    Xt = np.ascontiguousarray(X[0].T)[None]              # (1, d, n)
    y = np.asarray(ys, dtype=dtype)[None, :, None]       # (1, n, 1)
    inv_n = dtype(1.0) / dtype(n)

    for _ in range(epochs):
        A = np.tanh(X @ W1 + b1)                         # (B, n, h)
        out = A @ w2 + b2                                # (B, n, 1)
        delta = (out - y) * inv_n
        g_w2 = np.matmul(A.transpose(0, 2, 1), delta) + lam * w2
        g_b2 = delta.sum(axis=1, keepdims=True)
        dZ = np.matmul(delta, w2.transpose(0, 2, 1)) * (1.0 - A * A)
        g_W1 = np.matmul(Xt, dZ) + lam * W1
        g_b1 = dZ.sum(axis=1, keepdims=True)
        W1 -= lr * g_W1
        b1 -= lr * g_b1
        w2 -= lr * g_w2
        b2 -= lr * g_b2

    return [{"W1": np.array(W1[b], dtype=float),
             "b1": np.array(b1[b, 0], dtype=float),
             "w2": np.array(w2[b, :, 0], dtype=float),
             "b2": float(b2[b, 0, 0]),
             "hidden": combos[b][0], "lam": float(combos[b][1])}
            for b in range(B)]


def fit_mlp(Xs, ys, hyper, seed, dtype=np.float64):
    hidden = int(hyper["hidden"])
    lam = float(hyper["lam"])
    return train_mlp_batch(Xs, ys, [(hidden, lam)], [seed], dtype=dtype)[0]


def predict_mlp(params, Xs):
    A = np.tanh(Xs @ params["W1"] + params["b1"])
    return A @ params["w2"] + params["b2"]


def mlp_loss_and_grad(flat, shapes, Xs, ys, lam):
    """Reference loss/gradient on a flattened parameter vector, used by the
    finite-difference gradient check."""
    d, h = shapes
    idx = 0
    W1 = flat[idx:idx + d * h].reshape(d, h); idx += d * h
    b1 = flat[idx:idx + h]; idx += h
    w2 = flat[idx:idx + h]; idx += h
    b2 = flat[idx]
    n = len(ys)
    Z = Xs @ W1 + b1
    A = np.tanh(Z)
    out = A @ w2 + b2
    r = out - ys
    loss = 0.5 * np.mean(r * r) + 0.5 * lam * (np.sum(W1 * W1) + np.sum(w2 * w2))
    delta = r / n
    g_w2 = A.T @ delta + lam * w2
    g_b2 = delta.sum()
    dZ = np.outer(delta, w2) * (1.0 - A * A)
    g_W1 = Xs.T @ dZ + lam * W1
    g_b1 = dZ.sum(axis=0)
    grad = np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])
    return loss, grad
