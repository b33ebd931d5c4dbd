import numpy as np
import pytest

from ftca.errors import (
    ConditioningError,
    ConfigError,
    ShapeError,
    UndefinedScoreError,
)
from ftca.regress import (
    MetricsTriple,
    RegressorSpec,
    fit,
    linear_coefficients,
    metrics,
    predict,
)


def test_poly_exact_linear_fit():
    X = np.linspace(-2, 2, 25)[:, None]
    y = 2.0 * X[:, 0]
    f = fit(RegressorSpec(kind="poly", degree=1, ridge_alpha=0.0), X, y)
    intercept, slopes = linear_coefficients(f)
    assert intercept == pytest.approx(0.0, abs=1e-10)
    assert slopes[0] == pytest.approx(2.0, abs=1e-10)
    assert predict(f, np.array([[3.0]]))[0] == pytest.approx(6.0, abs=1e-9)


def test_poly_multivariate_cross_terms():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 2))
    y = 1.0 + 0.5 * X[:, 0] - X[:, 1] + 0.25 * X[:, 0] * X[:, 1]
    f = fit(RegressorSpec(kind="poly", degree=2, ridge_alpha=0.0), X, y)
    got = predict(f, X)
    np.testing.assert_allclose(got, y, atol=1e-9)


def test_poly_underdetermined_without_ridge():
    X = np.random.default_rng(1).normal(size=(4, 3))
    y = np.arange(4.0)
    with pytest.raises(ConditioningError):
        fit(RegressorSpec(kind="poly", degree=2, ridge_alpha=0.0), X, y)


def test_poly_singular_duplicate_feature():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 1))
    X = np.hstack([x, x])  # perfectly collinear
    y = x[:, 0]
    with pytest.raises(ConditioningError):
        fit(RegressorSpec(kind="poly", degree=1, ridge_alpha=0.0), X, y)
    fit(RegressorSpec(kind="poly", degree=1, ridge_alpha=1e-6), X, y)  # ridge rescues


def test_poly_ridge_shrinks_coefficients_monotonically():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 2))
    y = X @ np.array([1.5, -0.7]) + 0.1 * rng.normal(size=60)
    norms = []
    for alpha in (0.0, 1.0, 100.0, 10000.0):
        f = fit(RegressorSpec(kind="poly", degree=2, ridge_alpha=alpha), X, y)
        coef = f.params["coef"]
        norms.append(float(np.linalg.norm(coef[1:])))  # intercept unpenalized
    assert norms[0] >= norms[1] >= norms[2] >= norms[3]
    assert norms[3] < 0.05 * norms[0]


def test_knn_stores_data_and_exact_on_training_point():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    f = fit(RegressorSpec(kind="knn", k=1), X, y)
    np.testing.assert_array_equal(f.params["X"], X)
    np.testing.assert_array_equal(f.params["y"], y)
    got = predict(f, X[7:8])
    assert got[0] == y[7]


def test_knn_permutation_invariance():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 2))
    y = rng.normal(size=40)
    q = rng.normal(size=(10, 2))
    f1 = fit(RegressorSpec(kind="knn", k=5), X, y)
    perm = rng.permutation(40)
    f2 = fit(RegressorSpec(kind="knn", k=5), X[perm], y[perm])
    np.testing.assert_array_equal(predict(f1, q), predict(f2, q))


def test_knn_k_exceeds_training():
    with pytest.raises(ConfigError):
        fit(RegressorSpec(kind="knn", k=5), np.zeros((3, 1)), np.zeros(3))


def test_mlp_learns_identity():
    rng = np.random.default_rng(6)
    X = rng.uniform(-1, 1, size=(200, 1))
    y = X[:, 0]
    f = fit(RegressorSpec(kind="mlp", seed=0), X, y)
    rmse = float(np.sqrt(np.mean((predict(f, X) - y) ** 2)))
    assert rmse < 0.1


def test_constant_label_constant_prediction():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 2))
    y = np.full(30, 4.25)
    q = rng.normal(size=(5, 2))
    for spec in (
        RegressorSpec(kind="poly", degree=2),
        RegressorSpec(kind="knn", k=3),
        RegressorSpec(kind="mlp", seed=1),
    ):
        got = predict(fit(spec, X, y), q)
        np.testing.assert_allclose(got, 4.25, atol=1e-8)


def test_predict_dimension_mismatch():
    f = fit(RegressorSpec(kind="knn", k=1), np.zeros((3, 2)), np.zeros(3))
    with pytest.raises(ShapeError):
        predict(f, np.zeros((1, 3)))


def test_fit_length_mismatch():
    with pytest.raises(ShapeError):
        fit(RegressorSpec(kind="poly"), np.zeros((3, 1)), np.zeros(4))


def test_metrics_perfect():
    y = np.array([1.0, 2.0, 3.0])
    assert metrics(y, y) == MetricsTriple(0.0, 0.0, 1.0)


def test_metrics_hand_value_two_points():
    got = metrics(np.array([0.0, 2.0]), np.array([1.0, 1.0]))
    assert got.mae == 1.0
    assert got.rmse == 1.0
    assert got.r2 == 0.0


def test_metrics_hand_value_three_points():
    got = metrics(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 2.0]))
    assert got.mae == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert got.rmse == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-15)
    assert got.r2 == pytest.approx(0.0, abs=1e-15)


def test_metrics_mean_predictor_r2_zero_and_negative_possible():
    rng = np.random.default_rng(8)
    y = rng.normal(size=50)
    mean_pred = np.full(50, y.mean())
    assert metrics(y, mean_pred).r2 == pytest.approx(0.0, abs=1e-12)
    bad = metrics(y, -3.0 * y)
    assert bad.r2 < 0.0


def test_metrics_rmse_ge_mae_property():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n = rng.integers(2, 30)
        y = rng.normal(size=n)
        p = rng.normal(size=n)
        got = metrics(y, p)
        assert got.rmse >= got.mae - 1e-12
        assert got.r2 <= 1.0


def test_metrics_errors():
    with pytest.raises(ShapeError):
        metrics(np.zeros(3), np.zeros(4))
    with pytest.raises(UndefinedScoreError):
        metrics(np.ones(5), np.zeros(5))
    from ftca.errors import DomainError

    with pytest.raises(DomainError):
        metrics(np.ones(1), np.ones(1))


def test_spec_validation():
    with pytest.raises(ConfigError):
        RegressorSpec(kind="svr")
    with pytest.raises(ConfigError):
        RegressorSpec(degree=0)
    with pytest.raises(ConfigError):
        RegressorSpec(ridge_alpha=-1.0)
    with pytest.raises(ConfigError):
        RegressorSpec(k=0)
