"""Median-of-means trace estimation and rejection sampling.

``estimate_trace`` estimates ``Tr[A B]`` from length-square samples of ``A``
and element queries of ``B``.  A single sample picks ``(i, j)`` with
probability ``A_ij**2 / ||A||_F**2`` and returns ``||A||_F**2 / A_ij * B_ji``,
which is unbiased with second moment at most ``||A||_F**2 ||B||_F**2``.
Means of ``ceil(9/xi**2)`` samples are combined by a median over
``ceil(6 log2(2/eta))`` groups.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError
from .matrix_store import _as_rng

# samples held in memory at once by estimate_trace
_CHUNK = 2_000_000
DEFAULT_MAX_PROPOSALS = 10**6


@dataclass(frozen=True)
class TraceParams:
    xi: float
    eta: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")

    @property
    def inner_reps(self):
        if math.isinf(self.xi):
            return 1
        return max(1, math.ceil(9.0 / self.xi**2))

    @property
    def outer_reps(self):
        return max(1, math.ceil(6.0 * math.log2(2.0 / self.eta)))

    @classmethod
    def for_absolute(cls, target, a_frob, b_bound, eta):
        """Params reaching absolute error ``target`` given the two norms."""
        scale = a_frob * b_bound
        xi = math.inf if scale == 0 else target / scale
        return cls(xi, eta)


@dataclass(frozen=True)
class ElementOracle:
    """Query access to ``B``: ``query(j, i) -> B[j, i]`` on index arrays."""

    query: object
    frob_bound: float
    cost: str = "O(1)"

    @classmethod
    def dense(cls, B):
        B = np.asarray(B, dtype=float)
        return cls(lambda j, i: B[j, i], float(np.linalg.norm(B)))


def lower_median(values, axis=-1):
    """Median that picks the lower middle element for even counts."""
    v = np.sort(values, axis=axis)
    k = (v.shape[axis] - 1) // 2
    return np.take(v, k, axis=axis)


def median_of_means(samples):
    """``samples`` has shape (..., outer, inner)."""
    return lower_median(samples.mean(axis=-1), axis=-1)


def single_sample_estimates(A, B, size, rng):
    """``size`` independent single-sample estimates of ``Tr[A B]``."""
    rng = _as_rng(rng)
    i, j, a = A.sample_entries(rng, size)
    return A.frob_sq / a * B.query(j, i)


def estimate_trace(A, B, params, rng):
    """Median-of-means estimate of ``Tr[A B]``.

    ``A`` is anything with ``frob_sq`` and ``sample_entries`` (a
    :class:`~qisvm.matrix_store.SampledMatrix`, a column view, a kernel
    view); ``B`` an :class:`ElementOracle`.  With probability at least
    ``1 - params.eta`` the error is below ``params.xi * ||A||_F * ||B||_F``.
    """
    rng = _as_rng(rng)
    if B.frob_bound == 0:
        return 0.0
    inner, outer = params.inner_reps, params.outer_reps
    per_chunk = max(1, _CHUNK // inner)
    means = []
    done = 0
    while done < outer:
        k = min(per_chunk, outer - done)
        est = single_sample_estimates(A, B, k * inner, rng)
        means.append(est.reshape(k, inner).mean(axis=1))
        done += k
    return float(lower_median(np.concatenate(means)))


def _check_rows_normalized(A, tol=1e-10):
    norms = A.row_norms
    if not np.all(np.abs(norms - 1.0) <= tol):
        raise ValueError("rejection sampling needs rows of unit 2-norm")


def rejection_sample(A, b, D, rng, size=None, max_proposals=DEFAULT_MAX_PROPOSALS,
                     return_proposals=False, block=256):
    """Length-square sample a row index of ``y = A b`` without forming ``y``.

    Propose ``i`` by the row norms of ``A`` and accept with probability
    ``(A_i . b)**2 / (D ||A_i||**2)``.  Proposals are drawn in blocks but
    consumed in order, so the result equals that of a one-at-a-time loop.
    ``max_proposals`` caps the proposals spent on any single output.
    """
    rng = _as_rng(rng)
    b = np.asarray(b, dtype=float)
    if b.shape != (A.m_cols,):
        raise ValueError(f"b must have length {A.m_cols}")
    if D < float(b @ b):
        raise ValueError("D must be at least ||b||^2")
    _check_rows_normalized(A)
    want = 1 if size is None else int(size)
    out = np.empty(want, dtype=np.intp)
    got = 0
    since = 0
    total = 0
    X = A.entries
    row_sq = A.row_norms**2
    while got < want:
        i = A.row_norm_tree._forest.descend(np.zeros(block, dtype=np.intp), rng.random(block))
        x = rng.random(block)
        yi = X[i] @ b
        accept = x < yi * yi / (D * row_sq[i])
        pos = 0
        for t in np.flatnonzero(accept):
            since += t - pos + 1
            total += t - pos + 1
            pos = t + 1
            if since > max_proposals:
                break
            out[got] = i[t]
            got += 1
            since = 0
            if got == want:
                break
        else:
            since += block - pos
            total += block - pos
        if since > max_proposals:
            raise NonConvergenceError(
                f"rejection sampling made {max_proposals} proposals without acceptance; "
                "is A b identically zero?")
    res = int(out[0]) if size is None else out
    if return_proposals:
        return res, total
    return res
