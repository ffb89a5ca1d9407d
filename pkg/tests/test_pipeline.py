import numpy as np
import pytest

from autoloop.pipeline import (
    ColumnImputer,
    DecisionStump,
    KNNClassifier,
    LogisticRegressionGD,
    Standardizer,
    VarianceRankSelector,
    jitter_duplicate,
    logistic_gradient,
    logistic_loss,
    train_logreg,
)
from autoloop.seeding import make_rng


# ------------------------------------------------------------------ transforms


def test_imputer_mean_uses_train_columns():
    X = np.array([[1.0, np.nan], [3.0, 4.0], [np.nan, 8.0]])
    imp = ColumnImputer("mean").fit(X)
    out = imp.transform(X)
    assert not np.isnan(out).any()
    assert out[2, 0] == 2.0  # mean of 1 and 3
    assert out[0, 1] == 6.0  # mean of 4 and 8
    # validation rows are filled with train statistics
    val = imp.transform(np.array([[np.nan, np.nan]]))
    assert val.tolist() == [[2.0, 6.0]]


def test_imputer_zero():
    X = np.array([[np.nan, 2.0]])
    assert ColumnImputer("zero").fit(X).transform(X).tolist() == [[0.0, 2.0]]


def test_standardizer_moments():
    rng = make_rng(3)
    X = rng.normal(5.0, 3.0, size=(200, 4))
    Z = Standardizer().fit(X).transform(X)
    assert np.abs(Z.mean(axis=0)).max() < 1e-9
    assert np.abs(Z.var(axis=0) - 1.0).max() < 1e-6


def test_standardizer_constant_column_centered_only():
    X = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
    Z = Standardizer().fit(X).transform(X)
    assert np.allclose(Z[:, 0], 0.0)


def test_variance_selector_threshold_zero_keeps_all():
    X = make_rng(0).normal(size=(50, 5))
    sel = VarianceRankSelector(0.0).fit(X)
    assert sel.support_.all()


def test_variance_selector_drops_low_rank():
    # columns with variance ~ [small, large, medium]: ranks [0, 2/3, 1/3]
    rng = make_rng(1)
    X = np.column_stack(
        [rng.normal(0, 0.01, 100), rng.normal(0, 10.0, 100), rng.normal(0, 1.0, 100)]
    )
    assert VarianceRankSelector(0.3).fit(X).support_.tolist() == [False, True, True]
    assert VarianceRankSelector(0.4).fit(X).support_.tolist() == [False, True, False]


def test_variance_selector_all_tied_falls_back_to_one():
    X = np.ones((10, 3))
    sel = VarianceRankSelector(0.3).fit(X)
    assert sel.support_.sum() == 1
    assert sel.support_[0]  # ties keep the lowest column index


def test_jitter_duplicate_doubles_rows():
    X = make_rng(2).normal(size=(20, 3))
    y = np.arange(20) % 2
    X2, y2 = jitter_duplicate(X, y, make_rng(5))
    assert X2.shape == (40, 3)
    assert np.array_equal(X2[:20], X)
    assert np.array_equal(y2, np.concatenate([y, y]))
    # jitter is small relative to the column scale
    assert np.abs(X2[20:] - X).max() < X.std(axis=0).max()


# -------------------------------------------------------------------- learners


def test_knn_single_neighbor_resubstitution_is_exact():
    X = make_rng(4).normal(size=(30, 3))
    y = np.arange(30) % 3
    model = KNNClassifier(k=1).fit(X, y)
    assert np.array_equal(model.predict(X), y)


def test_knn_vote_tie_prefers_lowest_class():
    X = np.array([[0.0], [2.0]])
    y = np.array([1, 0])
    # query equidistant from both training points: one vote each
    assert KNNClassifier(k=2).fit(X, y).predict(np.array([[1.0]])).tolist() == [0]


def test_stump_learns_a_threshold():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = DecisionStump().fit(X, y)
    assert model.feature_ == 0
    assert 2.0 < model.threshold_ < 10.0
    assert np.array_equal(model.predict(X), y)


def test_stump_constant_features_predicts_majority():
    X = np.ones((6, 2))
    y = np.array([0, 1, 1, 1, 0, 1])
    model = DecisionStump().fit(X, y)
    assert model.predict(X).tolist() == [1] * 6


def test_stump_tie_prefers_lowest_feature_then_threshold():
    # both features separate perfectly; feature 0 must win
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    model = DecisionStump().fit(X, y)
    assert model.feature_ == 0
    assert model.threshold_ == 1.5  # lowest of the error-tied thresholds


# ---------------------------------------------------------- logistic regression


def fd_gradient(w, b, X, y, h=1e-5):
    """Central finite differences of the logistic loss."""
    gw = np.zeros_like(w)
    for i in range(len(w)):
        up = w.copy()
        down = w.copy()
        up[i] += h
        down[i] -= h
        gw[i] = (logistic_loss(up, b, X, y) - logistic_loss(down, b, X, y)) / (2 * h)
    gb = (logistic_loss(w, b + h, X, y) - logistic_loss(w, b - h, X, y)) / (2 * h)
    return gw, gb


def test_gradient_matches_finite_differences():
    worst = 0.0
    for trial in range(100):
        rng = make_rng(trial)
        n, d = int(rng.integers(5, 40)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        w = rng.normal(size=d)
        b = float(rng.normal())
        gw, gb = logistic_gradient(w, b, X, y)
        fw, fb = fd_gradient(w, b, X, y)
        numer = np.abs(np.append(gw - fw, gb - fb))
        denom = np.maximum(np.abs(np.append(fw, fb)), 1e-8)
        worst = max(worst, float((numer / denom).max()))
    assert worst < 1e-4


def test_zero_epochs_gives_zero_weights_and_half_probability():
    X = make_rng(0).normal(size=(10, 3))
    y = np.arange(10) % 2
    model = LogisticRegressionGD(lr=0.5, epochs=0).fit(X, y)
    assert np.all(model.coef_ == 0.0)
    assert np.all(model.intercept_ == 0.0)
    assert np.all(model.predict_proba(X) == 0.5)


def test_separable_data_reaches_zero_training_error():
    rng = make_rng(8)
    X = np.vstack([rng.normal(-2, 0.3, (40, 2)), rng.normal(2, 0.3, (40, 2))])
    y = np.array([0] * 40 + [1] * 40)
    model = LogisticRegressionGD(lr=0.1, epochs=200).fit(X, y)
    assert np.mean(model.predict(X) != y) == 0.0


def test_loss_non_increasing_without_adaptation():
    # continuing from e-1 epochs equals one more step, so re-training per
    # epoch count recovers the loss trajectory without any exported trace
    for trial in range(20):
        rng = make_rng(100 + trial)
        X = rng.normal(size=(30, 3))
        y = (rng.random(30) < 0.5).astype(int)
        lr = float(rng.uniform(0.005, 0.1))
        losses = []
        for epochs in range(0, 12):
            W, B, classes = train_logreg(X, y, lr=lr, epochs=epochs, adaptive=False)
            row = list(classes).index(1) if 1 in classes else 0
            losses.append(logistic_loss(W[row], B[row], X, (y == classes[row]).astype(float)))
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_train_logreg_returns_row_per_class():
    X = make_rng(1).normal(size=(30, 4))
    y = np.arange(30) % 3
    W, B, classes = train_logreg(X, y, lr=0.1, epochs=10, adaptive=True)
    assert W.shape == (3, 4)
    assert B.shape == (3,)
    assert classes.tolist() == [0, 1, 2]


def test_train_logreg_rejects_empty():
    with pytest.raises(ValueError):
        train_logreg(np.empty((0, 2)), np.array([]), lr=0.1, epochs=5, adaptive=False)


def test_adaptive_mode_changes_the_trajectory():
    X = make_rng(9).normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(int)
    plain, _, _ = train_logreg(X, y, lr=0.1, epochs=50, adaptive=False)
    adaptive, _, _ = train_logreg(X, y, lr=0.1, epochs=50, adaptive=True)
    assert not np.allclose(plain, adaptive)
