"""Pooling, PCA reduction, fusion, linear SVM, F1, random search."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lsep.augment import gen_entangled_demo
from lsep.classify import (
    PcaReducer,
    decision_value,
    f1_score,
    fuse,
    mean_pool,
    predict,
    random_search,
    reduce_dim,
    svm_objective,
    train_svm,
)
from lsep.errors import InsufficientInputError, ShapeError, TrainingError


def test_mean_pool_examples():
    np.testing.assert_allclose(mean_pool(np.array([[0.0, 2.0], [2.0, 0.0]])), [1.0, 1.0])
    np.testing.assert_allclose(mean_pool(np.array([[3.0, 4.0]])), [3.0, 4.0])


def test_mean_pool_permutation_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 4))
    perm = rng.permutation(10)
    np.testing.assert_allclose(mean_pool(x), mean_pool(x[perm]), atol=1e-12)


def test_mean_pool_empty_error():
    with pytest.raises(InsufficientInputError):
        mean_pool(np.zeros((0, 3)))


# --------------------------------------------------------------------- pca


def test_pca_rank_one_retains_all_variance():
    rng = np.random.default_rng(1)
    direction = np.array([1.0, 2.0, -1.0])
    x = np.outer(rng.normal(size=40), direction)
    reducer = PcaReducer().fit(x)
    assert reducer.retained_variance(1) == pytest.approx(1.0, abs=1e-12)


def test_pca_full_rank_reconstruction():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 5))
    reducer = PcaReducer().fit(x)
    z = reducer.transform(x, 5)
    recon = z @ reducer.components_.T + reducer.mean_
    assert np.max(np.abs(recon - x)) < 1e-6


def test_pca_variance_fractions_non_increasing():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 6)) * np.array([5, 4, 3, 2, 1, 0.5])
    reducer = PcaReducer().fit(x)
    assert np.all(np.diff(reducer.eigenvalues_) <= 1e-9)


def test_pca_sign_fixing_deterministic():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(25, 4))
    a = PcaReducer().fit(x)
    b = PcaReducer().fit(x.copy())
    np.testing.assert_array_equal(a.components_, b.components_)
    for j in range(4):
        col = a.components_[:, j]
        assert col[np.argmax(np.abs(col))] > 0


def test_reduce_dim_errors():
    x = np.random.default_rng(0).normal(size=(10, 3))
    with pytest.raises(ShapeError):
        reduce_dim(x, 4, "pca")
    with pytest.raises(InsufficientInputError):
        reduce_dim(x[:1], 1, "pca")
    with pytest.raises(ShapeError):
        reduce_dim(x, 2, "external", external=np.zeros((10, 3)))
    passthrough = reduce_dim(x, 3, "external", external=x)
    np.testing.assert_array_equal(passthrough, x)


# -------------------------------------------------------------------- fuse


def test_fuse_dims_additive():
    f = fuse(np.zeros(300), np.zeros(300))
    assert f.vector.shape == (600,)
    assert (f.speech_dim, f.reduced_dim) == (300, 300)
    g = fuse(np.zeros(500), np.zeros(300))
    assert g.vector.shape == (800,)


def test_fuse_order_speech_first():
    f = fuse(np.array([1.0, 2.0]), np.array([3.0]))
    np.testing.assert_array_equal(f.vector, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(f.vector[: f.speech_dim], [1.0, 2.0])


def test_fuse_empty_part_rejected():
    with pytest.raises(ShapeError):
        fuse(np.zeros(0), np.zeros(3))


# --------------------------------------------------------------------- svm


def test_svm_analytic_two_point_solution():
    x = np.array([[-1.0, 0.0], [1.0, 0.0]])
    y = np.array([-1, 1])
    model = train_svm(x, y, c=100.0, epochs=2000)
    assert np.all(predict(model, x) == y)
    assert abs(model.w[1] / model.w[0]) < 0.05


def test_svm_separable_hinge_vanishes():
    rng = np.random.default_rng(5)
    x = np.vstack([rng.normal(-3, 0.3, (40, 2)), rng.normal(3, 0.3, (40, 2))])
    y = np.repeat([-1, 1], 40)
    model = train_svm(x, y, c=1.0, epochs=4000)
    margins = y * (x @ model.w + model.b)
    mean_hinge = np.maximum(0.0, 1.0 - margins).mean()
    assert mean_hinge <= 1e-3


def test_svm_entangled_near_chance():
    # quadrant symmetry defeats through-origin boundaries; at c=10 the hinge
    # optimum sits at the near-zero weights, so training accuracy is chance
    _, entangled = gen_entangled_demo(1000, seed=1)
    y = np.where(entangled.labels == 1, 1, -1)
    model = train_svm(entangled.features, y, c=10.0, epochs=500)
    acc = np.mean(predict(model, entangled.features) == y)
    assert 0.45 <= acc <= 0.55


def test_svm_objective_final_not_above_initial():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(60, 3))
    y = np.where(rng.uniform(size=60) > 0.5, 1, -1)
    y[0], y[1] = 1, -1  # both classes guaranteed
    for c in (0.01, 1.0, 50.0):
        model = train_svm(x, y, c=c, epochs=300)
        initial = svm_objective(np.zeros(3), 0.0, x, y.astype(float), c)
        final = svm_objective(model.w, model.b, x, y.astype(float), c)
        assert final <= initial + 1e-9


def test_svm_single_class_error():
    with pytest.raises(TrainingError):
        train_svm(np.zeros((4, 2)), np.ones(4), 1.0, 10)


def test_svm_accepts_01_labels():
    x = np.array([[-1.0, 0.0], [1.0, 0.0]])
    model = train_svm(x, np.array([0, 1]), c=10.0, epochs=500)
    assert np.all(predict(model, x) == [-1, 1])


def test_decision_value_examples():
    from lsep.classify import SvmModel

    model = SvmModel(np.array([1.0, 0.0]), 0.0, 1.0, 0)
    assert decision_value(model, np.array([3.0, 4.0])) == pytest.approx(3.0)
    assert decision_value(model, np.zeros(2)) == pytest.approx(0.0)
    with pytest.raises(ShapeError):
        decision_value(model, np.zeros(3))


def test_decision_value_linearity():
    from lsep.classify import SvmModel

    rng = np.random.default_rng(7)
    model = SvmModel(rng.normal(size=4), 0.3, 1.0, 0)
    rows = rng.normal(size=(9, 4))
    mean_of_values = decision_value(model, rows).mean()
    value_of_mean = decision_value(model, rows.mean(axis=0))
    assert mean_of_values == pytest.approx(value_of_mean, abs=1e-12)


# ---------------------------------------------------------------------- f1


def test_f1_hand_example():
    # TP=12, FP=3, FN=5: P=0.8, R=12/17, F1 = 2PR/(P+R) = 0.75
    preds = np.array([1] * 15 + [-1] * 5 + [-1] * 10)
    labels = np.array([1] * 12 + [-1] * 3 + [1] * 5 + [-1] * 10)
    assert f1_score(preds, labels) == pytest.approx(0.75)


def test_f1_perfect_and_degenerate():
    labels = np.array([1, -1, 1])
    assert f1_score(labels, labels) == 1.0
    assert f1_score(np.array([-1, -1, -1]), labels) == 0.0


@given(arrays(np.int64, st.integers(1, 40), elements=st.sampled_from([-1, 1])), st.integers(0, 10))
def test_f1_in_unit_interval(labels, seed):
    rng = np.random.default_rng(seed)
    preds = rng.choice([-1, 1], size=labels.size)
    assert 0.0 <= f1_score(preds, labels) <= 1.0


# ------------------------------------------------------------------ search


def search_data():
    rng = np.random.default_rng(8)
    x = np.vstack([rng.normal(-1, 1, (60, 3)), rng.normal(1, 1, (60, 3))])
    y = np.repeat([0, 1], 60)
    return x[:80], y[:80], x[80:], y[80:]


def test_search_deterministic():
    a = random_search(*search_data(), n_trials=6, seed=3)
    b = random_search(*search_data(), n_trials=6, seed=3)
    assert a == b


def test_search_reports_all_trials_and_stats():
    report = random_search(*search_data(), n_trials=5, seed=1)
    assert len(report.trials) == 5
    scores = [t.f1 for t in report.trials]
    assert report.f1_avg == pytest.approx(np.mean(scores))
    assert report.f1_max == pytest.approx(max(scores))
    assert report.f1_std == pytest.approx(np.std(scores))
    assert report.f1_avg <= report.f1_max
    for t in report.trials:
        assert 1e-3 <= t.c <= 1e3
        assert t.epochs in (200, 500, 1000)


def test_search_identical_trials_zero_std():
    x_train, y_train, x_eval, y_eval = search_data()
    report = random_search(x_train, y_train, x_eval, y_eval, n_trials=1, seed=0)
    assert report.f1_std == 0.0
