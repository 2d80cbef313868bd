import numpy as np
import pytest

from mccs_lab.models import ModelSpec, fit, model_from_text, model_to_text, predict
from mccs_lab.models.trees import (
    FOREST_DEPTH,
    MIN_LEAF,
    canonical_order,
    draw_bootstrap_counts,
    draw_feature_masks,
    max_nodes,
)
from oracles import NaiveTree, naive_gbm_predict, naive_knn_predict, naive_rf_predict


def make_data(n=30, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2 + 0.1 * rng.normal(size=n)
    return X, y


def standardized(m, X, y):
    return m.standardize(X), (y - m.y_mean) / m.y_std


# ---------------------------------------------------------------------------
# CART vs naive reference
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("depth", [1, 2, 3, 5])
def test_cart_agrees_with_naive_reference(seed, depth):
    X, y = make_data(n=30, seed=seed)
    m = fit(ModelSpec("cart"), X, y, hyper={"max_depth": depth})
    Xs, ys = standardized(m, X, y)
    ref = NaiveTree(depth, MIN_LEAF).fit(Xs, ys)
    X_test = np.random.default_rng(seed + 100).normal(size=(25, 4))
    got = predict(m, X_test)
    want = m.y_mean + m.y_std * ref.predict(m.standardize(X_test))
    assert np.allclose(got, want, atol=1e-12)


def test_cart_depth_zero_predicts_training_mean():
    X, y = make_data(n=25, seed=1)
    m = fit(ModelSpec("cart"), X, y, hyper={"max_depth": 0})
    assert np.allclose(predict(m, X), y.mean(), atol=1e-12)


def test_cart_respects_min_leaf():
    X, y = make_data(n=30, seed=2)
    m = fit(ModelSpec("cart"), X, y, hyper={"max_depth": 7})
    Xs, _ = standardized(m, X, y)
    features = m.params["features"][0]
    lefts, rights = m.params["lefts"][0], m.params["rights"][0]
    threshs = m.params["threshs"][0]
    counts = np.zeros(features.size)
    for r in range(len(Xs)):
        nid = 0
        while features[nid] >= 0:
            nid = lefts[nid] if Xs[r, features[nid]] <= threshs[nid] else rights[nid]
        counts[nid] += 1
    leaf_ids = [i for i in range(features.size) if features[i] == -1 and counts[i] > 0]
    assert all(counts[i] >= MIN_LEAF for i in leaf_ids)


# ---------------------------------------------------------------------------
# GBM
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("lr", [0.1, 0.3, 0.5])
def test_gbm_agrees_with_naive_reference(lr):
    X, y = make_data(n=30, seed=3)
    m = fit(ModelSpec("gbm"), X, y, hyper={"lr": lr}, seed=0)
    # replicate on the standardized, canonically ordered data
    Xs, ys = standardized(m, X, y)
    order = canonical_order(Xs, ys)
    X_test = np.random.default_rng(7).normal(size=(20, 4))
    want = naive_gbm_predict(Xs[order], ys[order], m.standardize(X_test),
                             n_trees=25, max_depth=FOREST_DEPTH, lr=lr)
    # compare against a 25-tree refit (same builder, small budget)
    import mccs_lab.models.trees as trees_mod
    saved = trees_mod.N_TREES
    trees_mod.N_TREES = 25
    try:
        m_small = fit(ModelSpec("gbm"), X, y, hyper={"lr": lr}, seed=0)
    finally:
        trees_mod.N_TREES = saved
    got = predict(m_small, X_test)
    assert np.allclose(got, m_small.y_mean + m_small.y_std * want, atol=1e-10)


def test_gbm_zero_learning_rate_is_constant_mean():
    X, y = make_data(n=30, seed=4)
    m = fit(ModelSpec("gbm"), X, y, hyper={"lr": 0.0})
    assert np.allclose(predict(m, X), y.mean(), atol=1e-12)


def test_gbm_fits_training_data_with_enough_trees():
    X, y = make_data(n=40, seed=5)
    m = fit(ModelSpec("gbm"), X, y, hyper={"lr": 0.3})
    mse_model = np.mean((predict(m, X) - y) ** 2)
    mse_mean = np.mean((y.mean() - y) ** 2)
    assert mse_model < 0.5 * mse_mean


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

def test_rf_agrees_with_naive_reference():
    X, y = make_data(n=28, seed=6)
    import mccs_lab.models.trees as trees_mod
    saved = trees_mod.N_TREES
    trees_mod.N_TREES = 20
    try:
        m = fit(ModelSpec("rf"), X, y, seed=11)
    finally:
        trees_mod.N_TREES = saved
    Xs, ys = standardized(m, X, y)
    order = canonical_order(Xs, ys)
    Xc, yc = Xs[order], ys[order]
    n, d = Xc.shape
    k = int(np.ceil(d / 3.0))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(11, n)))
    boot = draw_bootstrap_counts(rng, 20, n)
    masks = draw_feature_masks(rng, 20, FOREST_DEPTH, d, k)
    X_test = np.random.default_rng(8).normal(size=(15, 4))
    want = naive_rf_predict(Xc, yc, m.standardize(X_test), boot, masks,
                            FOREST_DEPTH)
    got = predict(m, X_test)
    assert np.allclose(got, m.y_mean + m.y_std * want, atol=1e-10)


def test_rf_gbm_cart_permutation_invariance():
    X, y = make_data(n=30, seed=9)
    perm = np.random.default_rng(1).permutation(len(y))
    X_test = np.random.default_rng(10).normal(size=(12, 4))
    for family, hyper in (("rf", None), ("gbm", {"lr": 0.3}),
                          ("cart", {"max_depth": 3})):
        a = fit(ModelSpec(family), X, y, seed=5, hyper=hyper)
        b = fit(ModelSpec(family), X[perm], y[perm], seed=5, hyper=hyper)
        assert np.allclose(predict(a, X_test), predict(b, X_test), atol=1e-12)


def test_rf_determinism_given_seed():
    X, y = make_data(n=30, seed=12)
    a = fit(ModelSpec("rf"), X, y, seed=3)
    b = fit(ModelSpec("rf"), X, y, seed=3)
    X_test = np.random.default_rng(13).normal(size=(10, 4))
    assert np.array_equal(predict(a, X_test), predict(b, X_test))
    c = fit(ModelSpec("rf"), X, y, seed=4)
    assert not np.array_equal(predict(a, X_test), predict(c, X_test))


# ---------------------------------------------------------------------------
# kNN
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 3, 5, 9])
def test_knn_agrees_with_naive_reference(k):
    X, y = make_data(n=30, seed=14)
    m = fit(ModelSpec("knn"), X, y, hyper={"k": k})
    Xs, ys = standardized(m, X, y)
    X_test = np.random.default_rng(15).normal(size=(20, 4))
    want = naive_knn_predict(Xs, ys, m.standardize(X_test), k)
    got = predict(m, X_test)
    assert np.allclose(got, m.y_mean + m.y_std * want, atol=1e-12)


def test_knn_k1_training_point_returns_its_label():
    X, y = make_data(n=30, seed=16)
    m = fit(ModelSpec("knn"), X, y, hyper={"k": 1})
    assert predict(m, X[4:5])[0] == pytest.approx(y[4], abs=1e-12)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_tree_serialization_round_trip():
    X, y = make_data(n=30, seed=17)
    m = fit(ModelSpec("cart"), X, y, hyper={"max_depth": 3})
    back = model_from_text(model_to_text(m))
    X_test = np.random.default_rng(18).normal(size=(10, 4))
    assert np.array_equal(predict(back, X_test), predict(m, X_test))
