"""Kernel-SVM classification harness over precomputed Gram matrices.

The solver is a sequential-minimal-optimization style coordinate ascent on
the soft-margin dual with a precomputed kernel: it repeatedly optimizes the
maximally violating variable pair until the KKT residual drops below
tolerance.  The cross-validation protocol is 10-fold, repeated ten times
with reshuffled stratified folds; the regularization constant and the
kernel parameter are selected jointly by a nested 10-fold cross-validation
on each training portion, so held-out folds never influence selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import GraphValidationError, SolverError
from .kernels import GramMatrix
from .seeding import derive_rng

try:  # pragma: no cover - exercised implicitly by every solver call
    from numba import njit

    _JIT = lambda fn: njit(cache=True)(fn)
except ImportError:  # pragma: no cover
    _JIT = lambda fn: fn

DEFAULT_TOLERANCE = 1e-3
#: Iteration cap factor: at most this many pair updates per training point.
MAX_ITER_FACTOR = 100_000

_C_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
_PARAM_GRID = (0, 1, 2, 3, 4, 5)


@dataclass(frozen=True)
class SvmModel:
    """Trained soft-margin SVM in dual form."""

    dual_coef: np.ndarray  # alpha_i * y_i per training point
    bias: float
    support: np.ndarray
    C: float
    kkt_residual: float
    iterations: int

    def decision_values(self, kernel_rows: np.ndarray) -> np.ndarray:
        """Decision values for rows of kernel values against the training set."""
        rows = np.atleast_2d(np.asarray(kernel_rows, dtype=np.float64))
        if rows.shape[1] != self.dual_coef.shape[0]:
            raise GraphValidationError(
                f"kernel row length {rows.shape[1]} != training size {self.dual_coef.shape[0]}"
            )
        return rows @ self.dual_coef + self.bias


@dataclass(frozen=True)
class CvProtocol:
    """Repeated, nested, stratified cross-validation protocol."""

    outer_folds: int = 10
    repetitions: int = 10
    c_grid: tuple[float, ...] = _C_GRID
    param_grid: tuple[int, ...] = _PARAM_GRID
    inner_folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.outer_folds < 2 or self.inner_folds < 2 or self.repetitions < 1:
            raise GraphValidationError("folds must be >= 2 and repetitions >= 1")
        if not self.c_grid or not self.param_grid:
            raise GraphValidationError("empty parameter grid")


@dataclass(frozen=True)
class CvResult:
    """Aggregated accuracy of one method over the full protocol."""

    mean: float
    std: float
    repetition_accuracies: tuple[float, ...]
    selections: tuple[tuple[int, int, int, float], ...]  # (rep, fold, param, C)


def _smo_core_impl(K, y, C, tol, max_iter):
    n = K.shape[0]
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_i = sum_j alpha_j y_j K_ij
    big = 1e30
    # rounding residue must not fake a free variable at a box bound
    bound_eps = 1e-9 * C
    iters = 0
    while iters < max_iter:
        m = -big
        mm = big
        i = -1
        j = -1
        for idx in range(n):
            v = y[idx] - f[idx]
            at_upper = alpha[idx] >= C - bound_eps
            at_lower = alpha[idx] <= bound_eps
            if (not at_upper and y[idx] > 0.0) or (not at_lower and y[idx] < 0.0):
                if v > m:
                    m = v
                    i = idx
            if (not at_upper and y[idx] < 0.0) or (not at_lower and y[idx] > 0.0):
                if v < mm:
                    mm = v
                    j = idx
        if i < 0 or j < 0 or m - mm <= tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta < 1e-12:
            # zero-curvature direction (duplicate feature rows): floor the
            # curvature; the clipped step then lands on the improving
            # endpoint of the feasible segment without dividing by zero
            eta = 1e-12
        s = y[i] * y[j]
        if s < 0.0:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(C, C + alpha[j] - alpha[i])
        else:
            lo = max(0.0, alpha[i] + alpha[j] - C)
            hi = min(C, alpha[i] + alpha[j])
        ei = f[i] - y[i]
        ej = f[j] - y[j]
        aj = alpha[j] + y[j] * (ei - ej) / eta
        if aj < lo:
            aj = lo
        elif aj > hi:
            aj = hi
        ai = alpha[i] + s * (alpha[j] - aj)
        if ai < 0.0:
            ai = 0.0
        elif ai > C:
            ai = C
        if abs(aj - alpha[j]) + abs(ai - alpha[i]) < 1e-14 * C:
            break  # numerically stalled; wrapper checks the residual
        di = y[i] * (ai - alpha[i])
        dj = y[j] * (aj - alpha[j])
        for idx in range(n):
            f[idx] += di * K[i, idx] + dj * K[j, idx]
        alpha[i] = ai
        alpha[j] = aj
        iters += 1
    # recompute the bounds for the bias after the final update
    m = -big
    mm = big
    for idx in range(n):
        v = y[idx] - f[idx]
        at_upper = alpha[idx] >= C - bound_eps
        at_lower = alpha[idx] <= bound_eps
        if (not at_upper and y[idx] > 0.0) or (not at_lower and y[idx] < 0.0):
            if v > m:
                m = v
        if (not at_upper and y[idx] < 0.0) or (not at_lower and y[idx] > 0.0):
            if v < mm:
                mm = v
    if m <= -big:
        m = mm
    if mm >= big:
        mm = m
    b = 0.5 * (m + mm)
    return alpha, b, m - mm, iters


_smo_core = _JIT(_smo_core_impl)


def _train_raw(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = DEFAULT_TOLERANCE,
) -> tuple[np.ndarray, float, float, int]:
    """Solve the dual on a raw kernel matrix; handles one-class degeneracy."""
    n = K.shape[0]
    if np.all(y > 0) or np.all(y < 0):
        return np.zeros(n), float(y[0]), 0.0, 0
    max_iter = MAX_ITER_FACTOR * n
    alpha, b, residual, iters = _smo_core(K, y, C, tol, max_iter)
    if residual > tol:
        raise SolverError(
            f"solver did not converge (KKT residual {residual:.3g} after {iters} updates)",
            residual=float(residual),
        )
    return alpha, float(b), float(residual), int(iters)


def svm_train(
    gram: GramMatrix | np.ndarray,
    labels: Sequence[int],
    C: float,
    tol: float = DEFAULT_TOLERANCE,
) -> SvmModel:
    """Train a C-SVM on a precomputed kernel matrix."""
    K = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise GraphValidationError("kernel matrix must be square")
    if not np.allclose(K, K.T, atol=1e-8 * (1.0 + np.abs(K).max(initial=0.0))):
        raise GraphValidationError("kernel matrix must be symmetric")
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (K.shape[0],):
        raise GraphValidationError("labels must match the kernel dimension")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise GraphValidationError("labels must be +1/-1")
    if C <= 0:
        raise GraphValidationError("C must be positive")
    K = np.ascontiguousarray(K, dtype=np.float64)
    alpha, b, residual, iters = _train_raw(K, y, C, tol)
    return SvmModel(
        dual_coef=alpha * y,
        bias=b,
        support=np.flatnonzero(alpha > 1e-12),
        C=float(C),
        kkt_residual=residual,
        iterations=iters,
    )


def svm_predict(model: SvmModel, kernel_row: Sequence[float]) -> int:
    """Predicted class for one test point; ties go to +1."""
    value = float(model.decision_values(np.asarray(kernel_row, dtype=np.float64))[0])
    return 1 if value >= 0.0 else -1


def dual_objective(K: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """Soft-margin dual objective (maximized by training)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def stratified_folds(
    labels: Sequence[int], n_folds: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Random class-stratified partition; per-fold class counts differ <= 1."""
    y = np.asarray(labels)
    if y.shape[0] < n_folds:
        raise GraphValidationError(f"{y.shape[0]} graphs cannot fill {n_folds} folds")
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.shape[0])]
        for pos, i in enumerate(idx):
            folds[(offset + pos) % n_folds].append(int(i))
        offset += idx.shape[0]
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


def _inner_splits(
    K: np.ndarray, y: np.ndarray, inner_folds: Sequence[np.ndarray]
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Pre-sliced (train kernel, cross kernel, train labels, test labels)."""
    splits = []
    for fold in inner_folds:
        mask = np.ones(y.shape[0], dtype=bool)
        mask[fold] = False
        tr = np.flatnonzero(mask)
        splits.append(
            (
                np.ascontiguousarray(K[np.ix_(tr, tr)]),
                K[np.ix_(fold, tr)],
                y[tr],
                y[fold],
            )
        )
    return splits


def _accuracy_for_config(
    splits: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]],
    n_total: int,
    C: float,
    tol: float,
) -> float:
    correct = 0
    for K_tr, K_cross, y_tr, y_te in splits:
        alpha, b, _, _ = _train_raw(K_tr, y_tr, C, tol)
        dec = K_cross @ (alpha * y_tr) + b
        pred = np.where(dec >= 0.0, 1.0, -1.0)
        correct += int(np.sum(pred == y_te))
    return correct / n_total


def cross_validate(
    gram_family: Mapping[int, GramMatrix],
    labels: Sequence[int],
    protocol: CvProtocol,
    tol: float = DEFAULT_TOLERANCE,
) -> CvResult:
    """Run the full repeated nested cross-validation protocol.

    ``gram_family`` maps the kernel parameter (walk length or refinement
    depth) to the Gram matrix computed at that parameter; the matrices must
    share size and graph ids.
    """
    params = sorted(gram_family)
    if set(params) != set(protocol.param_grid):
        missing = sorted(set(protocol.param_grid) - set(params))
        if missing:
            raise GraphValidationError(f"missing Gram matrices for parameters {missing}")
        params = sorted(protocol.param_grid)
    mats = {p: gram_family[p] for p in params}
    first = mats[params[0]]
    for p, m in mats.items():
        if m.ids != first.ids:
            raise GraphValidationError("Gram matrices disagree on graph ids")
    y = np.asarray(labels, dtype=np.float64)
    n = first.size
    if y.shape[0] != n:
        raise GraphValidationError("labels must match the Gram dimension")
    if n < protocol.outer_folds:
        raise GraphValidationError(f"{n} graphs cannot fill {protocol.outer_folds} folds")
    Ks = {p: np.ascontiguousarray(m.values) for p, m in mats.items()}

    rep_accs = []
    selections = []
    for rep in range(protocol.repetitions):
        folds = stratified_folds(y, protocol.outer_folds, derive_rng(protocol.seed, 5, rep))
        correct = 0
        for fold_id, test in enumerate(folds):
            mask = np.ones(n, dtype=bool)
            mask[test] = False
            train = np.flatnonzero(mask)
            y_tr = y[train]
            inner = stratified_folds(
                y_tr, protocol.inner_folds, derive_rng(protocol.seed, 5, rep, fold_id)
            )
            best = None
            for p in params:
                K_tr = Ks[p][np.ix_(train, train)]
                splits = _inner_splits(K_tr, y_tr, inner)
                for C in protocol.c_grid:
                    acc = _accuracy_for_config(splits, y_tr.shape[0], C, tol)
                    # deterministic tie-break: first (param, C) in grid order
                    if best is None or acc > best[0]:
                        best = (acc, p, C)
            _, p_sel, c_sel = best
            selections.append((rep, fold_id, p_sel, c_sel))
            K_tr = np.ascontiguousarray(Ks[p_sel][np.ix_(train, train)])
            alpha, b, _, _ = _train_raw(K_tr, y_tr, c_sel, tol)
            dec = Ks[p_sel][np.ix_(test, train)] @ (alpha * y_tr) + b
            pred = np.where(dec >= 0.0, 1.0, -1.0)
            correct += int(np.sum(pred == y[test]))
        rep_accs.append(correct / n)
    accs = np.asarray(rep_accs)
    return CvResult(
        mean=float(accs.mean()),
        std=float(accs.std()),
        repetition_accuracies=tuple(float(a) for a in accs),
        selections=tuple(selections),
    )
