import math

import numpy as np
import pytest

from mspi.errors import DataError
from mspi.learners import (
    fit_logit_l1,
    fit_logit_l2,
    l1_objective,
    linear_score,
    predict_proba,
    sigmoid,
    standardize_apply,
    standardize_fit,
)

from .oracles import newton_logit


def logistic_sample(rng, n, p, beta=None, intercept=-1.0):
    X = rng.standard_normal((n, p))
    if beta is None:
        beta = rng.standard_normal(p)
    prob = 1.0 / (1.0 + np.exp(-(X @ beta + intercept)))
    y = (rng.random(n) < prob).astype(float)
    return X, y


class TestStandardize:
    def test_two_point_column(self):
        params = standardize_fit(np.array([[1.0], [3.0]]))
        z = standardize_apply(params, np.array([[1.0], [3.0]]))
        assert z[:, 0].tolist() == [-1.0, 1.0]  # population std = 1

    def test_constant_column_dropped(self):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        params = standardize_fit(X)
        assert params.dropped.tolist() == [0]
        assert params.kept.tolist() == [1]
        z = standardize_apply(params, X)
        assert z.shape == (10, 1)

    def test_training_columns_zero_mean(self):
        rng = np.random.default_rng(0)
        X = rng.normal(5.0, 2.0, size=(40, 6))
        params = standardize_fit(X)
        z = standardize_apply(params, X)
        assert np.all(np.abs(z.mean(axis=0)) < 1e-12)
        assert np.all(np.abs(z.std(axis=0) - 1.0) < 1e-12)

    def test_all_constant_errors(self):
        with pytest.raises(DataError, match="zero variance"):
            standardize_fit(np.ones((5, 3)))


class TestLogitL1:
    def test_huge_penalty_gives_base_rate(self):
        rng = np.random.default_rng(1)
        X, _ = logistic_sample(rng, 40, 4)
        y = np.array([1.0] * 10 + [0.0] * 30)  # event rate 0.25
        model = fit_logit_l1(X, y, lam=1e6)
        assert np.all(model.coef == 0.0)
        assert model.intercept == pytest.approx(math.log(1 / 3), abs=1e-8)

    def test_unpenalized_matches_newton(self):
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            X, y = logistic_sample(rng, 50, 5)
            w = newton_logit(X, y)
            model = fit_logit_l1(X, y, lam=0.0)
            got = np.concatenate([[model.intercept], model.coef])
            assert np.max(np.abs(got - w)) < 1e-6

    def test_duplicated_rows_leave_solution_unchanged(self):
        rng = np.random.default_rng(2)
        X, y = logistic_sample(rng, 60, 4)
        m1 = fit_logit_l1(X, y, lam=0.03)
        m2 = fit_logit_l1(np.vstack([X, X]), np.concatenate([y, y]), lam=0.03)
        assert abs(m1.intercept - m2.intercept) < 1e-8
        assert np.max(np.abs(m1.coef - m2.coef)) < 1e-8

    def test_local_optimality_against_perturbations(self):
        rng = np.random.default_rng(3)
        X, y = logistic_sample(rng, 80, 6)
        model = fit_logit_l1(X, y, lam=0.05)
        base = l1_objective(model, X, y)
        for _ in range(100):
            bumped = model.coef + rng.uniform(-1e-3, 1e-3, size=model.coef.shape)
            z = model.intercept + X @ bumped
            perturbed = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.05 * np.sum(np.abs(bumped))
            assert base <= perturbed + 1e-12

    def test_monotone_sparsity_on_fixtures(self):
        for seed in (4, 5, 6):
            rng = np.random.default_rng(seed)
            X, y = logistic_sample(rng, 90, 8)
            lams = [1e-4, 1e-3, 1e-2, 0.05, 0.2, 1.0]
            nnz = [int(np.sum(fit_logit_l1(X, y, lam).coef != 0.0)) for lam in lams]
            assert all(a >= b for a, b in zip(nnz, nnz[1:]))

    def test_single_class_fallback(self):
        X = np.random.default_rng(0).standard_normal((10, 3))
        model = fit_logit_l1(X, np.zeros(10), lam=0.1)
        assert model.fallback
        assert model.intercept == pytest.approx(math.log((0 + 1) / (10 + 2) / (1 - 1 / 12)))

    def test_negative_lambda_rejected(self):
        with pytest.raises(DataError):
            fit_logit_l1(np.zeros((4, 1)), np.array([0.0, 1, 0, 1]), lam=-1.0)


class TestLogitL2:
    def test_huge_penalty_shrinks_to_base_rate(self):
        rng = np.random.default_rng(7)
        X, _ = logistic_sample(rng, 40, 3)
        y = np.array([1.0] * 20 + [0.0] * 20)
        model = fit_logit_l2(X, y, lam=1e8)
        assert np.max(np.abs(model.coef)) < 1e-4
        assert model.intercept == pytest.approx(0.0, abs=1e-6)

    def test_unpenalized_matches_newton(self):
        for seed in range(5):
            rng = np.random.default_rng(200 + seed)
            X, y = logistic_sample(rng, 50, 5)
            w = newton_logit(X, y)
            model = fit_logit_l2(X, y, lam=0.0)
            got = np.concatenate([[model.intercept], model.coef])
            assert np.max(np.abs(got - w)) < 1e-6

    def test_ridge_matches_newton_ridge(self):
        rng = np.random.default_rng(8)
        X, y = logistic_sample(rng, 70, 4)
        w = newton_logit(X, y, l2=0.05)
        model = fit_logit_l2(X, y, lam=0.05)
        got = np.concatenate([[model.intercept], model.coef])
        assert np.max(np.abs(got - w)) < 1e-7

    def test_unique_optimum_from_two_starts(self):
        rng = np.random.default_rng(9)
        X, y = logistic_sample(rng, 60, 5)
        m1 = fit_logit_l2(X, y, lam=0.01)
        m2 = fit_logit_l2(X, y, lam=0.01, init=(0.7, np.full(5, -0.4)))
        assert abs(m1.intercept - m2.intercept) < 1e-8
        assert np.max(np.abs(m1.coef - m2.coef)) < 1e-8

    def test_feature_permutation_symmetry(self):
        rng = np.random.default_rng(10)
        X, y = logistic_sample(rng, 60, 5)
        perm = np.array([3, 0, 4, 1, 2])
        m1 = fit_logit_l2(X, y, lam=0.02)
        m2 = fit_logit_l2(X[:, perm], y, lam=0.02)
        assert np.max(np.abs(m2.coef - m1.coef[perm])) < 1e-7


class TestPredict:
    def test_midpoint(self):
        from mspi.learners.logit import LogitModel

        model = LogitModel(intercept=0.0, coef=np.zeros(2), penalty="l1", lam=0.0,
                           iterations=0, objective=0.0)
        assert predict_proba(model, np.zeros(2)) == 0.5

    def test_saturation_clamped(self):
        from mspi.learners.logit import LogitModel

        model = LogitModel(intercept=50.0, coef=np.zeros(1), penalty="l1", lam=0.0,
                           iterations=0, objective=0.0)
        assert predict_proba(model, np.zeros(1)) == 1.0 - 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        z = rng.normal(0, 3, 100)
        assert np.max(np.abs(sigmoid(z) + sigmoid(-z) - 1.0)) < 1e-14

    def test_dimension_mismatch(self):
        from mspi.learners.logit import LogitModel

        model = LogitModel(intercept=0.0, coef=np.zeros(3), penalty="l1", lam=0.0,
                           iterations=0, objective=0.0)
        with pytest.raises(DataError):
            linear_score(model, np.zeros(2))

    def test_round_trip_json(self):
        from mspi.learners.logit import LogitModel

        rng = np.random.default_rng(12)
        X, y = logistic_sample(rng, 40, 3)
        model = fit_logit_l1(X, y, lam=0.02)
        clone = LogitModel.from_dict(model.to_dict())
        assert clone.intercept == model.intercept
        assert np.array_equal(clone.coef, model.coef)
