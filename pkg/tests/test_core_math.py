import numpy as np
import pytest

from life_ensemble.core_math import (
    elastic_net_fit,
    kernel_smooth,
    logistic_fit,
    sigmoid,
    silverman_bandwidth,
    solve_least_squares,
    weighted_std,
)
from life_ensemble.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NoConvergenceWarning,
    NonFiniteError,
    ZeroWeightError,
)


class TestSolveLeastSquares:
    def test_identity_design(self):
        fit = solve_least_squares(np.eye(2), [3.0, 5.0])
        np.testing.assert_allclose(fit.coefficients, [3.0, 5.0], atol=1e-12)

    def test_normal_equations_by_hand(self):
        # (X'X)^-1 X'y = (2)^-1 * 4 = 2
        fit = solve_least_squares([[1.0], [1.0]], [1.0, 3.0])
        np.testing.assert_allclose(fit.coefficients, [2.0], atol=1e-12)

    def test_ridge_by_hand(self):
        # (X'X + ridge)^-1 X'y = (2 + 2)^-1 * 4 = 1
        fit = solve_least_squares([[1.0], [1.0]], [2.0, 2.0], ridge=2.0)
        np.testing.assert_allclose(fit.coefficients, [1.0], atol=1e-10)

    def test_minimum_norm_on_rank_deficient(self):
        # duplicated column: solutions b1 + b2 = 2 form a line; the
        # minimum-norm one is (1, 1)
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        fit = solve_least_squares(X, 2.0 * X[:, 0])
        np.testing.assert_allclose(fit.coefficients, [1.0, 1.0], atol=1e-10)

    def test_residual_orthogonal_to_columns(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            X = rng.normal(size=(40, 5))
            y = rng.normal(size=40)
            fit = solve_least_squares(X, y)
            r = y - X @ fit.coefficients
            assert np.max(np.abs(X.T @ r)) < 1e-8 * np.linalg.norm(y)

    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteError):
            solve_least_squares([[np.nan], [1.0]], [0.0, 1.0])
        with pytest.raises(NonFiniteError):
            solve_least_squares([[1.0], [1.0]], [np.inf, 1.0])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            solve_least_squares(np.eye(3), [1.0, 2.0])


class TestElasticNet:
    def test_unpenalized_matches_least_squares(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(200, 4))
        X -= X.mean(axis=0)
        y = X @ np.array([1.0, -2.0, 0.5, 3.0])
        fit = elastic_net_fit(X, y, l1=0.0, l2=0.0)
        ref = solve_least_squares(X, y - y.mean())
        np.testing.assert_allclose(fit.coefficients, ref.coefficients, atol=1e-8)

    def test_huge_l1_zeroes_everything(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(100, 3))
        y = rng.normal(size=100) + 5.0
        fit = elastic_net_fit(X, y, l1=1e9, l2=0.0)
        np.testing.assert_allclose(fit.coefficients, 0.0, atol=1e-15)
        assert fit.intercept == pytest.approx(y.mean())

    def test_univariate_soft_threshold(self):
        # standardized single column with OLS coefficient 2.0 and l1=0.5
        # soft-thresholds to 1.5
        rng = np.random.default_rng(3)
        x = rng.normal(size=5000)
        x = (x - x.mean()) / x.std()
        y = 2.0 * x
        fit = elastic_net_fit(x[:, None], y, l1=0.5, l2=0.0)
        assert fit.coefficients[0] == pytest.approx(1.5, abs=1e-8)

    def test_objective_non_increasing_over_sweeps(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(120, 8))
        y = rng.normal(size=120)
        fit = elastic_net_fit(X, y, l1=0.05, l2=0.01)
        path = np.array(fit.objective_path)
        assert np.all(np.diff(path) <= 1e-12)

    def test_sweep_cap_flags_but_returns(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 6))
        y = rng.normal(size=60)
        with pytest.warns(NoConvergenceWarning):
            fit = elastic_net_fit(X, y, l1=0.0, l2=0.0, max_sweeps=1)
        assert not fit.converged
        assert np.all(np.isfinite(fit.coefficients))

    def test_logistic_family_shrinks_with_l1(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(500, 3))
        z = 1.5 * X[:, 0]
        y = (rng.uniform(size=500) < sigmoid(z)).astype(float)
        loose = elastic_net_fit(X, y, l1=0.0, l2=1e-6, family="logistic")
        tight = elastic_net_fit(X, y, l1=0.5, l2=1e-6, family="logistic")
        assert np.abs(tight.coefficients).sum() < np.abs(loose.coefficients).sum()


class TestLogisticFit:
    def test_constant_class_negative_intercept(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(50, 2))
        fit = logistic_fit(X, np.zeros(50), ridge=1.0)
        assert fit.intercept < 0
        assert np.max(np.abs(fit.coefficients)) < 1.0

    def test_balanced_independent_labels_give_zero_slopes(self):
        # each x appears once with y=0 and once with y=1, so the
        # likelihood is maximized at exactly zero slopes and intercept
        rng = np.random.default_rng(8)
        X_half = rng.normal(size=(5000, 3))
        X = np.vstack([X_half, X_half])
        y = np.concatenate([np.zeros(5000), np.ones(5000)])
        fit = logistic_fit(X, y)
        assert np.max(np.abs(fit.coefficients)) < 1e-3
        assert abs(fit.intercept) < 1e-3

    def test_recovers_true_slope(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=100_000)
        y = (rng.uniform(size=x.size) < sigmoid(2.0 * x)).astype(float)
        fit = logistic_fit(x[:, None], y, ridge=0.0)
        assert fit.coefficients[0] == pytest.approx(2.0, abs=0.1)

    def test_separable_data_stays_finite(self):
        x = np.linspace(-1, 1, 40)
        y = (x > 0).astype(float)
        fit = logistic_fit(x[:, None], y, ridge=0.0)
        assert np.isfinite(fit.coefficients[0]) and np.isfinite(fit.objective)


class TestKernelSmooth:
    def test_constant_response(self):
        x = np.linspace(0, 1, 50)
        out = kernel_smooth(x, np.full(50, 3.25), np.linspace(0, 1, 7))
        np.testing.assert_allclose(out, 3.25, atol=1e-12)

    def test_infinite_bandwidth_is_global_mean(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=200)
        t = rng.normal(size=200)
        out = kernel_smooth(x, t, np.array([-1.0, 0.0, 2.0]), bandwidth=np.inf)
        np.testing.assert_allclose(out, t.mean(), atol=1e-12)

    def test_recovers_identity_in_interior(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(size=10_000)
        grid = np.linspace(0.1, 0.9, 33)
        out = kernel_smooth(x, x, grid)
        assert np.max(np.abs(out - grid)) < 0.05

    def test_output_within_response_range(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=300)
        t = rng.normal(size=300)
        out = kernel_smooth(x, t, np.linspace(-5, 5, 60), bandwidth=0.05)
        assert out.min() >= t.min() - 1e-12 and out.max() <= t.max() + 1e-12

    def test_constant_x_rejected(self):
        with pytest.raises(DegenerateInputError):
            kernel_smooth(np.ones(10), np.arange(10.0), np.array([1.0]))
        with pytest.raises(DegenerateInputError):
            silverman_bandwidth(np.ones(10))


class TestWeightedStd:
    def test_equal_weights_match_population_std(self):
        rng = np.random.default_rng(13)
        v = rng.normal(size=100)
        assert weighted_std(v, np.ones(100)) == pytest.approx(float(v.std()), rel=1e-12)

    def test_point_mass_is_zero(self):
        w = np.zeros(5)
        w[2] = 4.0
        assert weighted_std(np.arange(5.0), w) == 0.0

    def test_two_point_hand_value(self):
        assert weighted_std([0.0, 1.0], [1.0, 1.0]) == pytest.approx(0.5)

    def test_weight_rescaling_invariance(self):
        rng = np.random.default_rng(14)
        v = rng.normal(size=30)
        w = rng.uniform(0.1, 2.0, size=30)
        a = weighted_std(v, w)
        b = weighted_std(v, 17.3 * w)
        assert a == pytest.approx(b, rel=1e-12)

    def test_zero_weights_rejected(self):
        with pytest.raises(ZeroWeightError):
            weighted_std([1.0, 2.0], [0.0, 0.0])
