from __future__ import annotations

import numpy as np
import pytest

from gnsindy.sparse import (
    RankDeficientError,
    RegressionProblem,
    SolverKind,
    SparseError,
    SparseSolverConfig,
    ZeroColumnError,
    lasso,
    normalized_coefficients,
    ols,
    ridge,
    solve,
    stridge,
)
from oracles import best_subset_support, kkt_violation, sparse_instance


# ---------------------------------------------------------------- STRidge


def test_stridge_recovers_exact_sparse_system():
    rng = np.random.default_rng(0)
    theta = rng.normal(size=(40, 6))
    u_t = 2 * theta[:, 1] - 3 * theta[:, 3]
    xi = stridge(RegressionProblem(theta, u_t), SparseSolverConfig("stridge", tol=0.1))
    assert np.flatnonzero(xi).tolist() == [1, 3]
    assert np.allclose(xi[[1, 3]], [2, -3], atol=1e-10)


def test_stridge_support_recovery_against_exhaustive_oracle():
    rng = np.random.default_rng(2024)
    cfg = SparseSolverConfig("stridge", lam=0.0, tol=0.1, normalize=True)
    hits = 0
    for _ in range(200):
        theta, u_t, _ = sparse_instance(rng)
        reference = best_subset_support(theta, u_t, 3)
        xi = stridge(RegressionProblem(theta, u_t), cfg)
        hits += set(np.flatnonzero(xi).tolist()) == reference
    assert hits / 200 >= 0.95


def test_stridge_tol_zero_is_plain_least_squares():
    rng = np.random.default_rng(1)
    theta, u_t, _ = sparse_instance(rng, n=30)
    p = RegressionProblem(theta, u_t)
    assert np.allclose(stridge(p, SparseSolverConfig("stridge", tol=0.0)), ols(p), atol=1e-12)


def test_stridge_zero_target_prunes_everything():
    theta = np.random.default_rng(3).normal(size=(10, 4))
    res = solve(RegressionProblem(theta, np.zeros(10)), SparseSolverConfig("stridge", tol=0.1))
    assert res.all_pruned and not res.xi.any()


def test_stridge_support_never_grows():
    rng = np.random.default_rng(5)
    for _ in range(20):
        theta, u_t, _ = sparse_instance(rng, noise=0.3)
        res = solve(RegressionProblem(theta, u_t), SparseSolverConfig("stridge", tol=0.2, lam=1e-3))
        for a, b in zip(res.support_history, res.support_history[1:]):
            assert set(b) <= set(a)


def test_stridge_thresholds_in_normalized_space():
    # a physically tiny coefficient on a large column survives a tolerance far above it
    rng = np.random.default_rng(6)
    theta = rng.normal(size=(50, 3)) * np.array([1.0, 1e4, 1.0])
    u_t = theta[:, 0] + 1e-4 * theta[:, 1]
    xi = stridge(RegressionProblem(theta, u_t), SparseSolverConfig("stridge", tol=0.1))
    assert np.flatnonzero(xi).tolist() == [0, 1]
    assert xi[1] == pytest.approx(1e-4, rel=1e-9)


# ---------------------------------------------------------------- LASSO


def test_lasso_satisfies_kkt_conditions():
    rng = np.random.default_rng(11)
    for _ in range(25):
        theta = rng.normal(size=(50, 8))
        u_t = theta @ (rng.normal(size=8) * (rng.uniform(size=8) < 0.5)) + 0.1 * rng.normal(size=50)
        lam = float(rng.uniform(0.01, 0.5))
        xi = lasso(RegressionProblem(theta, u_t), SparseSolverConfig("lasso", lam=lam, max_iter=10000, normalize=False))
        assert kkt_violation(theta, u_t, xi, lam) <= 1e-6


def test_lasso_single_column_soft_threshold():
    N = 4
    theta = np.ones((N, 1))  # (1/N) theta^T theta = 1
    u_t = np.full(N, 0.3)
    xi = lasso(RegressionProblem(theta, u_t), SparseSolverConfig("lasso", lam=0.1, normalize=False))
    assert xi[0] == pytest.approx(0.2, abs=1e-12)


def test_lasso_without_penalty_is_ols():
    rng = np.random.default_rng(12)
    theta, u_t, _ = sparse_instance(rng, n=60, d=5, noise=0.1)
    p = RegressionProblem(theta, u_t)
    xi = lasso(p, SparseSolverConfig("lasso", lam=0.0, max_iter=100000))
    assert np.allclose(xi, ols(p), atol=1e-8)


# ---------------------------------------------------------------- OLS, ridge, masks


def test_ols_and_ridge_closed_forms():
    rng = np.random.default_rng(13)
    theta, u_t = rng.normal(size=(30, 4)), rng.normal(size=30)
    p = RegressionProblem(theta, u_t)
    assert np.allclose(ols(p), np.linalg.lstsq(theta, u_t, rcond=None)[0], atol=1e-12)
    expected = np.linalg.solve(theta.T @ theta + 0.5 * np.eye(4), theta.T @ u_t)
    assert np.allclose(ridge(p, 0.5), expected, atol=1e-12)


@pytest.mark.parametrize("kind", list(SolverKind))
def test_inactive_columns_are_exactly_zero(kind):
    rng = np.random.default_rng(14)
    theta, u_t = rng.normal(size=(30, 6)), rng.normal(size=30)
    mask = np.array([True, False, True, True, False, True])
    xi = solve(RegressionProblem(theta, u_t, mask), SparseSolverConfig(kind, lam=0.01, tol=0.01)).xi
    assert np.all(xi[~mask] == 0.0)


def test_normalized_ols_is_invariant_to_column_scaling():
    rng = np.random.default_rng(15)
    theta, u_t = rng.normal(size=(30, 4)), rng.normal(size=30)
    cfg = SparseSolverConfig("ols")
    a = solve(RegressionProblem(theta, u_t), cfg).xi
    scale = np.array([1e3, 1.0, 1e-2, 7.0])
    b = solve(RegressionProblem(theta * scale, u_t), cfg).xi
    assert np.allclose(b * scale, a, rtol=1e-10)


def test_normalized_coefficients_scale_free():
    theta = np.array([[1.0, 10.0], [1.0, -10.0]])
    u_t = np.array([2.0, 0.0])
    # column norms sqrt(2) and 10 sqrt(2), target norm 2
    assert np.allclose(normalized_coefficients(theta, u_t, [1.0, 0.1]), [np.sqrt(0.5), np.sqrt(0.5)])


def test_empty_mask_returns_flagged_zero():
    res = solve(RegressionProblem(np.eye(3), np.ones(3), np.zeros(3, bool)), SparseSolverConfig())
    assert res.all_pruned and not res.xi.any()


def test_errors():
    with pytest.raises(SparseError):
        RegressionProblem(np.ones((3, 2)), np.ones(4))
    with pytest.raises(SparseError):
        SparseSolverConfig(lam=-1)
    with pytest.raises(ZeroColumnError, match="u_x"):
        solve(RegressionProblem(np.array([[1.0, 0.0], [2.0, 0.0]]), np.ones(2), labels=("u", "u_x")), SparseSolverConfig("ols"))
    with pytest.raises(RankDeficientError):
        ols(RegressionProblem(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]), np.ones(3)))
