"""Exact dense LS-SVM solvers and brute-force oracles for small instances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeGuardError
from .kernels import PolyKernelView, materialize_z
from .matrix_store import SampleTree, SampledMatrix

PINV_RTOL = 1e-10
MAX_ENTRIES = 10**4
MAX_TENSOR_ROWS = 10**5


@dataclass
class ExactSolution:
    alpha: np.ndarray
    bias: float = 0.0
    gamma: float = math.inf
    diagnostics: dict = field(default_factory=dict)

    def decision(self, X, points):
        """``x^T X alpha + b`` for each column ``x`` of ``points``."""
        return np.asarray(points).T @ (np.asarray(X) @ self.alpha) + self.bias

    def predict(self, X, points):
        return np.where(self.decision(X, points) >= 0, 1, -1)


def _dense(X):
    return np.asarray(X.entries if isinstance(X, SampledMatrix) else X, dtype=float)


def solve_kernel_system(K, y, gamma=math.inf):
    """``(K + I/gamma) alpha = y``; minimum-norm pseudoinverse solution when gamma is inf."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.shape != (y.size, y.size):
        raise ValueError(f"kernel shape {K.shape} does not match {y.size} labels")
    if math.isinf(gamma):
        w, V = np.linalg.eigh(K)
        cutoff = PINV_RTOL * max(float(np.max(np.abs(w))), 0.0)
        keep = np.abs(w) > cutoff
        alpha = V[:, keep] @ ((V[:, keep].T @ y) / w[keep])
        rank = int(keep.sum())
    else:
        alpha = np.linalg.solve(K + np.eye(y.size) / gamma, y)
        rank = y.size
    resid = float(np.linalg.norm(K @ alpha + alpha / gamma - y)) if not math.isinf(gamma) else \
        float(np.linalg.norm(K @ alpha - y))
    return ExactSolution(alpha, 0.0, gamma, {"residual": resid, "rank": rank})


def exact_lssvm(X, y, gamma=math.inf):
    """Exact solution of ``(X^T X + I/gamma) alpha = y`` for a features x points ``X``."""
    A = _dense(X)
    y = np.asarray(y, dtype=float)
    if A.shape[1] != y.size:
        raise ValueError(f"X has {A.shape[1]} columns but {y.size} labels were given")
    if math.isinf(gamma):
        # SVD of X avoids squaring its condition number
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        keep = s > PINV_RTOL * s[0] if s.size else s > 0
        alpha = Vt[keep].T @ ((Vt[keep] @ y) / s[keep] ** 2)
        resid = float(np.linalg.norm(A.T @ (A @ alpha) - y))
        return ExactSolution(alpha, 0.0, gamma, {"residual": resid, "rank": int(keep.sum())})
    return solve_kernel_system(A.T @ A, y, gamma)


def exact_lssvm_bias(K, y, gamma=math.inf, max_cond=1e12):
    """Solve the bordered system ``[[0, 1^T], [1, K + I/gamma]] (b, alpha) = (0, y)``."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    m = y.size
    if K.shape != (m, m):
        raise ValueError(f"kernel shape {K.shape} does not match {m} labels")
    M = np.zeros((m + 1, m + 1))
    M[0, 1:] = 1.0
    M[1:, 0] = 1.0
    M[1:, 1:] = K + (0.0 if math.isinf(gamma) else 1.0 / gamma) * np.eye(m)
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > max_cond:
        raise np.linalg.LinAlgError(f"bordered LS-SVM system is singular (condition {cond:.3e})")
    sol = np.linalg.solve(M, np.concatenate([[0.0], y]))
    rhs = np.concatenate([[0.0], y])
    resid = float(np.linalg.norm(M @ sol - rhs))
    return ExactSolution(sol[1:], float(sol[0]), gamma, {"residual": resid, "condition": cond})


def condition_number(X, rtol=PINV_RTOL):
    """``sigma_max / sigma_min`` over the numerically nonzero singular values."""
    s = np.linalg.svd(_dense(X), compute_uv=False)
    s = s[s > rtol * s[0]]
    return float(s[0] / s[-1])


# -- brute-force oracles ----------------------------------------------------

def _guard(n_entries, limit=MAX_ENTRIES):
    if n_entries > limit:
        raise SizeGuardError(f"instance has {n_entries} entries, above the oracle limit {limit}")


def brute_force_trace(A, B):
    A, B = _dense(A), _dense(B)
    _guard(A.size)
    _guard(B.size)
    return float(np.trace(A @ B))


def brute_force_distribution(obj):
    """Exact length-square distribution of a vector, matrix or kernel view.

    Vectors give a 1-D table, matrices the joint ``(i, j)`` table, a
    :class:`PolyKernelView` the joint table of its tensor-power matrix.
    """
    if isinstance(obj, SampleTree):
        obj = obj.values
    if isinstance(obj, PolyKernelView):
        if obj.n_rows > MAX_TENSOR_ROWS:
            raise SizeGuardError(f"n**p = {obj.n_rows} exceeds {MAX_TENSOR_ROWS}")
        _guard(obj.base.n_rows * obj.base.m_cols)
        Z = materialize_z(obj, MAX_TENSOR_ROWS)
        w = Z**2
        return w / w.sum()
    A = _dense(obj)
    _guard(A.size)
    w = A**2
    return w / w.sum()


@dataclass
class PipelineOracle:
    alpha_prime: np.ndarray
    V_tilde: np.ndarray
    lambdas: np.ndarray
    X_prime: np.ndarray
    X_dd: np.ndarray
    sigma_sq: np.ndarray
    V_dd: np.ndarray


def brute_force_pipeline(X, y, col_sketch, row_sketch, rank_policy=None, gamma=math.inf):
    """Dense evaluation of the model quantities for fixed sketches.

    ``V~ = R^T V'' / sigma^2`` with ``R = X'^T X``, ``lambda = V~^T y`` and
    ``alpha' = sum_l lambda_l / shifted_l * V~_l``.
    """
    from .core import _retained_eigenpairs
    from .config import RankPolicy

    A = _dense(X)
    _guard(A.size)
    y = np.asarray(y, dtype=float)
    Xp = A[:, col_sketch.col_indices] * col_sketch.col_scales
    Xdd = row_sketch.entries
    raw, V = _retained_eigenpairs(Xdd.T @ Xdd, rank_policy or RankPolicy(theta=1e-2))
    shifted = raw + (0.0 if math.isinf(gamma) else 1.0 / gamma)
    R = Xp.T @ A
    Vt = (R.T @ V) / raw
    lam = Vt.T @ y
    alpha_prime = Vt @ (lam / shifted)
    return PipelineOracle(alpha_prime, Vt, lam, Xp, Xdd, raw, V)
