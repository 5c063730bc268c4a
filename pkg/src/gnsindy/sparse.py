"""Sparse regression kernels for ``theta @ xi = u_t``.

All solvers respect an ``active_columns`` mask: inactive coefficients come
back as exact zeros. With ``normalize=True``, thresholds and penalties act on
the scale-free coefficients ``xi_k * ||theta_k|| / ||u_t||``; returned
coefficients are always in the units of the original problem.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SolverKind",
    "SparseSolverConfig",
    "RegressionProblem",
    "SparseResult",
    "SparseError",
    "RankDeficientError",
    "ZeroColumnError",
    "normalize_columns",
    "normalized_coefficients",
    "ols",
    "ridge",
    "stridge",
    "lasso",
    "solve",
]

RANK_RTOL = 1e-12
LASSO_TOL = 1e-8


class SparseError(ValueError):
    pass


class RankDeficientError(SparseError):
    pass


class ZeroColumnError(SparseError):
    def __init__(self, column: int, label: str | None = None):
        name = label if label is not None else f"#{column}"
        super().__init__(f"dictionary column {name} is identically zero")
        self.column = column
        self.label = label


class SolverKind(str, enum.Enum):
    OLS = "ols"
    RIDGE = "ridge"
    STRIDGE = "stridge"
    LASSO = "lasso"


@dataclass(frozen=True)
class SparseSolverConfig:
    kind: SolverKind = SolverKind.STRIDGE
    lam: float = 0.0
    tol: float = 0.1
    max_iter: int = 100
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", SolverKind(self.kind))
        if self.lam < 0:
            raise SparseError("lambda must be non-negative")
        if self.tol < 0:
            raise SparseError("tol must be non-negative")
        if self.max_iter < 1:
            raise SparseError("max_iter must be positive")


@dataclass
class RegressionProblem:
    theta: np.ndarray
    u_t: np.ndarray
    active_columns: np.ndarray | None = None
    labels: tuple | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.u_t = np.asarray(self.u_t, dtype=np.float64).reshape(-1)
        if self.theta.ndim != 2 or self.theta.shape[0] != self.u_t.size:
            raise SparseError(f"theta {self.theta.shape} and u_t ({self.u_t.size},) do not align")
        if self.active_columns is None:
            self.active_columns = np.ones(self.theta.shape[1], dtype=bool)
        self.active_columns = np.asarray(self.active_columns, dtype=bool)
        if self.active_columns.shape != (self.theta.shape[1],):
            raise SparseError("mask length differs from the number of columns")

    @property
    def n_terms(self) -> int:
        return self.theta.shape[1]

    @property
    def active_index(self) -> np.ndarray:
        return np.flatnonzero(self.active_columns)

    def label(self, k: int) -> str | None:
        return None if self.labels is None else self.labels[k]


@dataclass
class SparseResult:
    xi: np.ndarray
    all_pruned: bool = False
    iterations: int = 0
    support_history: list = field(default_factory=list)


def normalize_columns(theta, labels=None):
    """Scale every column to unit L2 norm; return ``(theta_normalized, scales)``.

    Map coefficients of the normalized system back with ``xi = xi_n / scales``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    scales = np.linalg.norm(theta, axis=0)
    zero = np.flatnonzero(scales == 0)
    if zero.size:
        k = int(zero[0])
        raise ZeroColumnError(k, None if labels is None else labels[k])
    return theta / scales, scales


def normalized_coefficients(theta, u_t, xi) -> np.ndarray:
    """Scale-free view ``xi_k * ||theta_k|| / ||u_t||`` of a coefficient vector."""
    un = np.linalg.norm(u_t)
    if un == 0:
        return np.zeros_like(np.asarray(xi, dtype=np.float64))
    return np.asarray(xi) * np.linalg.norm(theta, axis=0) / un


def _lstsq(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if X.shape[1] == 0:
        return np.zeros(0)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if X.shape[0] < X.shape[1] or s[-1] <= RANK_RTOL * s[0]:
        raise RankDeficientError(
            f"active submatrix ({X.shape[0]}x{X.shape[1]}) is rank deficient"
            + (f" (condition {s[0] / s[-1]:.3g})" if s[-1] > 0 else "")
        )
    return Vt.T @ ((U.T @ y) / s)


def _ridge_solve(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    if lam == 0:
        return _lstsq(X, y)
    k = X.shape[1]
    return np.linalg.solve(X.T @ X + lam * np.eye(k), X.T @ y)


def _scatter(problem: RegressionProblem, coef_active: np.ndarray) -> np.ndarray:
    xi = np.zeros(problem.n_terms)
    xi[problem.active_index] = coef_active
    return xi


def ols(problem: RegressionProblem) -> np.ndarray:
    """Least squares on the active columns via SVD; zeros elsewhere."""
    X = problem.theta[:, problem.active_columns]
    return _scatter(problem, _lstsq(X, problem.u_t))


def ridge(problem: RegressionProblem, lam: float) -> np.ndarray:
    """Solve ``(X^T X + lam I) xi = X^T u_t`` on the active columns."""
    if lam < 0:
        raise SparseError("lambda must be non-negative")
    X = problem.theta[:, problem.active_columns]
    return _scatter(problem, _ridge_solve(X, problem.u_t, lam))


def _normalized_active(problem: RegressionProblem, normalize: bool):
    idx = problem.active_index
    X = problem.theta[:, idx]
    y = problem.u_t
    if not normalize:
        return X, y, np.ones(idx.size), 1.0
    labels = None if problem.labels is None else [problem.labels[k] for k in idx]
    Xn, scales = normalize_columns(X, labels)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0:
        return Xn, y, scales, 1.0
    return Xn, y / ynorm, scales, ynorm


def _stridge(problem: RegressionProblem, config: SparseSolverConfig) -> SparseResult:
    idx = problem.active_index
    X, y, scales, ynorm = _normalized_active(problem, config.normalize)
    keep = np.arange(idx.size)
    history = [idx.copy()]
    if idx.size == 0:
        return SparseResult(np.zeros(problem.n_terms), True, 0, history)
    w = _ridge_solve(X, y, config.lam)
    sweeps = 0
    for sweeps in range(1, config.max_iter + 1):
        small = np.abs(w) < config.tol
        if not small.any():
            break
        keep = keep[~small]
        history.append(idx[keep])
        if keep.size == 0:
            return SparseResult(np.zeros(problem.n_terms), True, sweeps, history)
        w = _ridge_solve(X[:, keep], y, config.lam)
    if config.lam != 0:
        w = _lstsq(X[:, keep], y)
    xi = np.zeros(problem.n_terms)
    xi[idx[keep]] = w * ynorm / scales[keep]
    return SparseResult(xi, False, sweeps, history)


def stridge(problem: RegressionProblem, config: SparseSolverConfig) -> np.ndarray:
    """Sequential-threshold ridge regression.

    Repeat: ridge solve on the surviving columns, drop every coefficient with
    ``|xi| < tol``; stop at a fixed point or after ``max_iter`` sweeps, then
    refit the survivors by unpenalised least squares. If everything is pruned
    the zero vector is returned.
    """
    return _stridge(problem, config).xi


def _lasso(problem: RegressionProblem, config: SparseSolverConfig) -> SparseResult:
    idx = problem.active_index
    N = problem.theta.shape[0]
    X, y, scales, ynorm = _normalized_active(problem, config.normalize)
    if config.normalize:
        # root-mean-square scaling: (1/N) x_k^T x_k = 1
        X = X * np.sqrt(N)
        y = y * np.sqrt(N)
        scales = scales / np.sqrt(N)
        ynorm = ynorm / np.sqrt(N)
    k = idx.size
    w = np.zeros(k)
    if k == 0:
        return SparseResult(np.zeros(problem.n_terms), True, 0, [idx])
    col_sq = np.einsum("ij,ij->j", X, X) / N
    if np.any(col_sq == 0):
        j = int(np.flatnonzero(col_sq == 0)[0])
        raise ZeroColumnError(int(idx[j]), problem.label(int(idx[j])))
    r = y.copy()
    lam = config.lam
    sweeps = 0
    for sweeps in range(1, config.max_iter + 1):
        delta = 0.0
        for j in range(k):
            old = w[j]
            rho = X[:, j] @ r / N + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new != old:
                r -= X[:, j] * (new - old)
                w[j] = new
                delta = max(delta, abs(new - old))
        if delta < LASSO_TOL:
            break
    xi = np.zeros(problem.n_terms)
    xi[idx] = w * ynorm / scales
    return SparseResult(xi, not np.any(w), sweeps, [idx[w != 0]])


def lasso(problem: RegressionProblem, config: SparseSolverConfig) -> np.ndarray:
    """Cyclic coordinate descent on ``(1/2N)||X xi - y||^2 + lam ||xi||_1``.

    With ``normalize=True`` the columns and the target are first rescaled to
    unit root-mean-square, so ``lam`` is scale free.
    """
    return _lasso(problem, config).xi


def solve(problem: RegressionProblem, config: SparseSolverConfig) -> SparseResult:
    """Dispatch on ``config.kind``; an empty active set yields zeros with ``all_pruned``."""
    if not problem.active_columns.any():
        return SparseResult(np.zeros(problem.n_terms), True, 0, [problem.active_index])
    kind = config.kind
    if kind is SolverKind.STRIDGE:
        return _stridge(problem, config)
    if kind is SolverKind.LASSO:
        return _lasso(problem, config)
    idx = problem.active_index
    X, y, scales, ynorm = _normalized_active(problem, config.normalize)
    lam = config.lam if kind is SolverKind.RIDGE else 0.0
    xi = np.zeros(problem.n_terms)
    xi[idx] = _ridge_solve(X, y, lam) * ynorm / scales
    return SparseResult(xi, False, 1, [idx])
