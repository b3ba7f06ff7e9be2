"""SVM solver against a convex-QP oracle, plus the CV protocol."""

from __future__ import annotations

import numpy as np
import pytest

from tgkernels.errors import GraphValidationError
from tgkernels.evaluation import (
    CvProtocol,
    cross_validate,
    dual_objective,
    stratified_folds,
    svm_predict,
    svm_train,
)
from tgkernels.kernels import GramMatrix
from tgkernels.seeding import derive_rng

from oracles import svm_dual_reference


def random_psd_gram(n: int, seed: int, dim: int = 6) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, dim))
    return x @ x.T


def separable_problem(n: int = 20, seed: int = 0, margin: float = 2.0):
    """Linearly separable points in feature space, returned as a Gram."""
    rng = np.random.default_rng(seed)
    y = np.asarray([1] * (n // 2) + [-1] * (n - n // 2), dtype=float)
    x = rng.normal(size=(n, 4))
    x[:, 0] = y * margin + 0.3 * rng.normal(size=n)
    return x @ x.T, y


def as_gram(K: np.ndarray) -> GramMatrix:
    return GramMatrix(
        values=K, ids=tuple(str(i) for i in range(K.shape[0])), kind="wl", param=0
    )


class TestSvmTrain:
    def test_two_point_identity(self):
        model = svm_train(as_gram(np.eye(2)), [1, -1], C=10.0)
        assert set(model.support) == {0, 1}
        assert svm_predict(model, [1.0, 0.0]) == 1
        assert svm_predict(model, [0.0, 1.0]) == -1

    def test_single_class_degenerate(self):
        model = svm_train(as_gram(np.eye(3)), [-1, -1, -1], C=1.0)
        assert svm_predict(model, [0.3, 0.1, 0.0]) == -1
        assert model.support.size == 0

    def test_separable_zero_training_error(self):
        K, y = separable_problem()
        model = svm_train(as_gram(K), y, C=100.0)
        pred = np.sign(model.decision_values(K))
        assert np.all(pred == y)

    @pytest.mark.parametrize("C", [0.1, 1.0, 100.0])
    @pytest.mark.parametrize("seed", range(4))
    def test_objective_matches_qp_oracle(self, C, seed):
        n = 20
        K = random_psd_gram(n, seed)
        rng = np.random.default_rng(1000 + seed)
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        if np.all(y == y[0]):
            y[0] = -y[0]
        model = svm_train(as_gram(K), y, C=C)
        alpha = model.dual_coef * y  # recover alpha from alpha*y
        ours = dual_objective(K, y, alpha)
        _, reference = svm_dual_reference(K, y, C)
        assert ours >= reference - 1e-4
        assert abs(ours - reference) <= 1e-3 * max(1.0, abs(reference))

    @pytest.mark.parametrize("seed", range(5))
    def test_dual_feasibility_invariants(self, seed):
        n = 24
        K = random_psd_gram(n, 50 + seed)
        rng = np.random.default_rng(seed)
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        y[0], y[1] = 1.0, -1.0
        C = 10.0
        model = svm_train(as_gram(K), y, C=C)
        alpha = model.dual_coef * y
        assert np.all(alpha >= -1e-12) and np.all(alpha <= C + 1e-12)
        assert abs(np.sum(model.dual_coef)) <= 1e-6
        assert model.kkt_residual <= 1e-3

    def test_identical_rows_opposite_labels(self):
        # duplicated graph with conflicting labels: zero-curvature pairs
        base = random_psd_gram(6, 3)
        K = np.block([[base, base[:, :1]], [base[:1, :], base[:1, :1]]])
        y = np.array([1, -1, 1, -1, 1, -1, -1], dtype=float)  # row 6 duplicates row 0
        model = svm_train(as_gram(K), y, C=1.0)
        assert model.kkt_residual <= 1e-3

    def test_validation_errors(self):
        with pytest.raises(GraphValidationError):
            svm_train(np.array([[1.0, 0.5], [0.4, 1.0]]), [1, -1], C=1.0)
        with pytest.raises(GraphValidationError):
            svm_train(np.eye(2), [1, 0], C=1.0)
        with pytest.raises(GraphValidationError):
            svm_train(np.eye(2), [1, -1], C=0.0)
        with pytest.raises(GraphValidationError):
            svm_train(np.eye(3), [1, -1], C=1.0)


class TestSvmPredict:
    def test_training_row_reproduces_prediction(self):
        K, y = separable_problem(16, seed=2)
        model = svm_train(as_gram(K), y, C=10.0)
        for i in range(16):
            assert svm_predict(model, K[i]) == np.sign(model.decision_values(K)[i])

    def test_zero_row_gives_bias_sign(self):
        K, y = separable_problem(12, seed=3)
        model = svm_train(as_gram(K), y, C=1.0)
        expected = 1 if model.bias >= 0 else -1
        assert svm_predict(model, np.zeros(12)) == expected

    def test_length_mismatch(self):
        model = svm_train(as_gram(np.eye(2)), [1, -1], C=1.0)
        with pytest.raises(GraphValidationError):
            svm_predict(model, [1.0, 0.0, 0.0])

    def test_heldout_accuracy_on_separable(self):
        rng = np.random.default_rng(4)
        n, m = 20, 10
        y_all = np.concatenate([np.ones(15), -np.ones(15)])
        x = rng.normal(size=(30, 4))
        x[:, 0] = y_all * 2.5 + 0.2 * rng.normal(size=30)
        perm = rng.permutation(30)
        train, test = perm[:n], perm[n:]
        K_tr = x[train] @ x[train].T
        model = svm_train(as_gram(K_tr), y_all[train], C=10.0)
        rows = x[test] @ x[train].T
        pred = [svm_predict(model, r) for r in rows]
        assert np.mean(pred == y_all[test]) == 1.0


class TestFolds:
    def test_stratified_and_reproducible(self):
        y = [1] * 13 + [-1] * 17
        f1 = stratified_folds(y, 10, derive_rng(0, 5, 0))
        f2 = stratified_folds(y, 10, derive_rng(0, 5, 0))
        assert all(np.array_equal(a, b) for a, b in zip(f1, f2))
        all_idx = np.concatenate(f1)
        assert sorted(all_idx) == list(range(30))
        y_arr = np.asarray(y)
        for cls in (1, -1):
            counts = [int(np.sum(y_arr[f] == cls)) for f in f1]
            assert max(counts) - min(counts) <= 1

    def test_too_few_graphs(self):
        with pytest.raises(GraphValidationError):
            stratified_folds([1, -1, 1], 10, derive_rng(0))


def family_from(K: np.ndarray, params=(0, 1)) -> dict[int, GramMatrix]:
    ids = tuple(str(i) for i in range(K.shape[0]))
    return {
        p: GramMatrix(values=K, ids=ids, kind="wl", param=p, normalized=True)
        for p in params
    }


class TestCrossValidate:
    def test_block_diagonal_is_perfect(self):
        n = 30
        y = [1] * 15 + [-1] * 15
        K = np.zeros((n, n))
        K[:15, :15] = 1.0
        K[15:, 15:] = 1.0
        np.fill_diagonal(K, 1.0)
        protocol = CvProtocol(
            outer_folds=5, repetitions=3, inner_folds=5, param_grid=(0, 1), seed=1
        )
        res = cross_validate(family_from(K), y, protocol)
        assert res.mean == 1.0
        assert res.std == 0.0
        assert len(res.repetition_accuracies) == 3

    def test_shuffled_labels_near_chance(self):
        n = 40
        K = random_psd_gram(n, 9, dim=8)
        d = np.sqrt(np.diag(K))
        K = K / np.outer(d, d)
        rng = np.random.default_rng(11)
        y = np.asarray([1] * 20 + [-1] * 20)
        y = y[rng.permutation(n)]
        protocol = CvProtocol(
            outer_folds=5, repetitions=5, inner_folds=5, param_grid=(0,), seed=3
        )
        res = cross_validate(family_from(K, (0,)), list(y), protocol)
        assert 0.25 <= res.mean <= 0.75

    def test_requires_enough_graphs(self):
        K = np.eye(5)
        protocol = CvProtocol(outer_folds=10, repetitions=1, param_grid=(0,), seed=0)
        with pytest.raises(GraphValidationError):
            cross_validate(family_from(K, (0,)), [1, -1, 1, -1, 1], protocol)

    def test_missing_param_matrix(self):
        K = np.eye(20)
        protocol = CvProtocol(outer_folds=5, repetitions=1, param_grid=(0, 1, 2), seed=0)
        with pytest.raises(GraphValidationError, match="missing"):
            cross_validate(family_from(K, (0, 1)), [1, -1] * 10, protocol)

    def test_std_over_repetition_means(self):
        n = 24
        K = random_psd_gram(n, 21, dim=3)
        d = np.sqrt(np.diag(K))
        K = K / np.outer(d, d)
        rng = np.random.default_rng(2)
        y = list(np.where(rng.random(n) < 0.5, 1, -1))
        if abs(sum(y)) == n:
            y[0] = -y[0]
        protocol = CvProtocol(
            outer_folds=4, repetitions=4, inner_folds=4, param_grid=(0,), seed=5
        )
        res = cross_validate(family_from(K, (0,)), y, protocol)
        accs = np.asarray(res.repetition_accuracies)
        assert res.mean == pytest.approx(accs.mean())
        assert res.std == pytest.approx(accs.std())

    def test_deterministic_selections(self):
        n = 30
        K = random_psd_gram(n, 31, dim=4)
        d = np.sqrt(np.diag(K))
        K = K / np.outer(d, d)
        y = [1] * 15 + [-1] * 15
        protocol = CvProtocol(
            outer_folds=5, repetitions=2, inner_folds=5, param_grid=(0, 1), seed=7
        )
        r1 = cross_validate(family_from(K), y, protocol)
        r2 = cross_validate(family_from(K), y, protocol)
        assert r1.selections == r2.selections
        assert r1.repetition_accuracies == r2.repetition_accuracies
