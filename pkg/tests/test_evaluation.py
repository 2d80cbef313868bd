import numpy as np
import pytest

from mccs_lab.evaluation import (
    average_ranks,
    friedman_holm,
    holm_threshold_column,
    information_ratio,
    pearson_rho,
    rank_with_ties,
    success_rate_and_roc,
)


# ---------------------------------------------------------------------------
# rho / IR
# ---------------------------------------------------------------------------

def test_rho_identical_series_is_one():
    x = np.array([0.1, 0.4, -0.2, 0.3])
    assert pearson_rho(x, x) == pytest.approx(1.0)


def test_rho_negated_series_is_minus_one():
    x = np.array([0.1, 0.4, -0.2, 0.3])
    assert pearson_rho(x, -x) == pytest.approx(-1.0)


def test_rho_hand_example():
    # cov = 5/3, sd = sqrt(2/3)*sqrt(114/9... brute formula gives 0.9934
    assert pearson_rho([1, 2, 3], [2, 4, 7]) == pytest.approx(0.9934, abs=5e-5)


def test_rho_constant_series_absent():
    assert pearson_rho([1.0, 1.0, 1.0], [1, 2, 3]) is None


def test_rho_sign_equivariance():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=50), rng.normal(size=50)
    r = pearson_rho(x, y)
    assert pearson_rho(2.5 * x + 1.0, y) == pytest.approx(r, abs=1e-12)
    assert pearson_rho(-2.5 * x + 1.0, y) == pytest.approx(-r, abs=1e-12)


def test_information_ratio_arithmetic():
    r = np.array([0.3, 0.1, -0.1])  # mean 0.1
    sd = r.std()
    assert information_ratio(r, 0.0) == pytest.approx(0.1 / sd)


def test_information_ratio_uses_population_std():
    r = np.array([0.2, 0.0])
    assert information_ratio(r) == pytest.approx(0.1 / 0.1)


def test_information_ratio_degenerate_absent():
    assert information_ratio(np.full(5, 0.03), benchmark_mean=0.03) is None


def test_information_ratio_leverage_invariance():
    rng = np.random.default_rng(1)
    r = rng.normal(0.02, 0.1, size=200)
    assert information_ratio(2 * r) == pytest.approx(information_ratio(r), abs=1e-12)


# ---------------------------------------------------------------------------
# success rate / ROC
# ---------------------------------------------------------------------------

def test_roc_all_correct():
    s = np.array([0.5, -0.4, 0.2])
    r = np.array([0.1, -0.2, 0.3])
    rate, curve, auc = success_rate_and_roc(s, r)
    assert rate == 1.0 and auc == 1.0


def test_roc_all_wrong():
    s = np.array([0.5, -0.4])
    r = np.array([-0.1, 0.2])
    rate, _, auc = success_rate_and_roc(s, r)
    assert rate == 0.0 and auc == 0.0


def test_roc_all_zero_signals_absent():
    assert success_rate_and_roc(np.zeros(5), np.ones(5)) == (None, None, None)


def test_roc_ties_give_diagonal_segment():
    # equal |s| everywhere: a single sweep point, AUC exactly 1/2
    s = np.array([0.3, -0.3, 0.3, -0.3])
    r = np.array([0.1, 0.1, 0.1, -0.1])
    rate, curve, auc = success_rate_and_roc(s, r)
    assert auc == pytest.approx(0.5)
    assert curve == ((0.0, 0.0), (1.0, 1.0))


def test_roc_score_inversion_flips_auc():
    rng = np.random.default_rng(2)
    strengths = rng.uniform(0.1, 1.0, size=40)
    signs = rng.choice([-1.0, 1.0], size=40)
    realized = rng.normal(size=40)
    s1 = strengths * signs
    # invert the confidence ordering without changing any directional call
    s2 = (1.2 - strengths) * signs
    _, _, auc1 = success_rate_and_roc(s1, realized)
    _, _, auc2 = success_rate_and_roc(s2, realized)
    assert auc1 + auc2 == pytest.approx(1.0, abs=1e-12)


def test_roc_random_signals_auc_near_half():
    rng = np.random.default_rng(3)
    aucs = []
    for _ in range(1000):
        s = rng.normal(size=60)
        r = rng.normal(size=60)
        _, _, auc = success_rate_and_roc(s, r)
        aucs.append(auc)
    assert abs(np.mean(aucs) - 0.5) < 0.05


# ---------------------------------------------------------------------------
# ranks
# ---------------------------------------------------------------------------

def test_rank_with_ties_average():
    assert rank_with_ties(np.array([3.0, 1.0, 3.0])).tolist() == [1.5, 3.0, 1.5]


def test_average_ranks_dominant_model():
    M = np.array([[3.0, 2.0, 1.0]] * 5)  # model 0 dominates everywhere
    avg, ranks = average_ranks(M, ["a", "b", "c"])
    assert avg.tolist() == [1.0, 2.0, 3.0]
    assert np.allclose(ranks.sum(axis=1), 6.0)  # k(k+1)/2 per trade


def test_average_ranks_sum_identity():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(12, 7))
    avg, ranks = average_ranks(M, list("abcdefg"))
    k = 7
    assert np.allclose(ranks.sum(axis=1), k * (k + 1) / 2)
    assert avg.sum() == pytest.approx(k * (k + 1) / 2)


def test_average_ranks_missing_cells_excluded():
    M = np.array([[1.0, 2.0, 3.0], [np.nan, 1.0, 2.0], [2.0, 3.0, 1.0]])
    with pytest.warns(UserWarning):
        avg, ranks = average_ranks(M, ["a", "b", "c"])
    assert ranks.shape == (2, 3)


# ---------------------------------------------------------------------------
# Friedman / Holm
# ---------------------------------------------------------------------------

def test_friedman_chi_square_hand_example():
    # 3 models, 4 trades, strict dominance: ranks (1, 2, 3) per trade,
    # chi2 = 12*4/(3*4) * (14 - 3*16/4) = 8.0
    ranks = np.array([1.0, 2.0, 3.0])
    out = friedman_holm(ranks, ["a", "b", "c"], n_trades=4)
    assert out.chi_square == pytest.approx(8.0)


def test_friedman_zero_on_identical_columns():
    k = 5
    ranks = np.full(k, (k + 1) / 2)  # all tied everywhere
    out = friedman_holm(ranks, list("abcde"), n_trades=6)
    assert out.chi_square == pytest.approx(0.0, abs=1e-12)


def test_friedman_relabeling_invariance():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(10, 6))
    fams = list("abcdef")
    avg, _ = average_ranks(M, fams)
    out1 = friedman_holm(avg, fams, 10)
    perm = [3, 0, 5, 1, 4, 2]
    out2 = friedman_holm(avg[perm], [fams[i] for i in perm], 10)
    assert out1.chi_square == pytest.approx(out2.chi_square, abs=1e-12)


def test_friedman_needs_three_models():
    with pytest.raises(ValueError):
        friedman_holm(np.array([1.0, 2.0]), ["a", "b"], 5)


def test_holm_column_matches_published_table():
    # 15 strategies -> m = 14 ordered hypotheses at alpha = 0.05
    col = holm_threshold_column(14, 0.05)
    rounded = [round(c, 4) for c in col]
    assert rounded == [0.0036, 0.0038, 0.0042, 0.0045, 0.0050, 0.0056, 0.0063,
                       0.0071, 0.0083, 0.0100, 0.0125, 0.0167, 0.0250, 0.0500]
    assert all(b > a for a, b in zip(col, col[1:]))
    assert col[-1] == 0.05


def test_friedman_z_and_holm_structure():
    avg = np.array([3.0, 1.2, 2.4, 3.4])
    fams = ["m1", "m2", "m3", "m4"]
    out = friedman_holm(avg, fams, n_trades=20)
    se = np.sqrt(4 * 5 / (6 * 20))
    assert out.z_scores["m1"] == pytest.approx((3.0 - 1.2) / se)
    assert "m2" not in out.z_scores  # the best model is the reference
    thr = sorted(out.holm_thresholds.values())
    assert thr[-1] == pytest.approx(0.05)
