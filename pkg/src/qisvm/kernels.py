"""Sampling access to polynomial kernels through the tensor-power matrix Z.

Column ``j`` of ``Z`` is ``x_j`` tensored with itself ``p`` times, so
``Z^T Z`` is the kernel ``K_p[i, j] = (x_i . x_j)**p``.  ``Z`` has ``n**p``
rows and is never formed.  Its entries are addressed by a 0-based flat row
index ``l = sum_t i_t * n**(p-1-t)`` (row-major flattening of the outer
product), and

* a column is drawn by proposing ``j`` with probability proportional to
  ``||x_j||**2`` and accepting with probability
  ``(||x_j|| / max_k ||x_k||)**(2(p-1))``, which yields ``||x_j||**(2p)``;
* a row inside column ``j`` is ``p`` independent length-square draws from
  ``x_j``, whose product probability is exactly ``Z[l, j]**2 / ||Z_j||**2``.

:class:`PolyKernelView` implements the same sampling-access protocol as
:class:`~qisvm.matrix_store.SampledMatrix`, so the training pipeline runs on
it unchanged.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import (CapacityError, DegenerateDistributionError, NonConvergenceError,
                     SizeGuardError)
from .matrix_store import ColumnAccess, _as_rng
from .sketch import DEFAULT_MAX_PROPOSALS

_INDEX_MAX = np.iinfo(np.int64).max


def flat_index(digits, n):
    """0-based flat row of ``Z`` for per-factor row indices ``digits``."""
    digits = np.asarray(digits, dtype=np.int64)
    out = np.zeros(digits.shape[:-1], dtype=np.int64)
    for t in range(digits.shape[-1]):
        out = out * n + digits[..., t]
    return out


class PolyKernelView:
    def __init__(self, base, degree):
        if int(degree) != degree or degree < 1:
            raise ValueError("degree must be a positive integer")
        p = int(degree)
        n = base.n_rows
        if n**p - 1 > _INDEX_MAX:
            raise CapacityError(f"n**p = {n}**{p} overflows 64-bit flat indices")
        self.base = base
        self.degree = p
        self.n_rows = n**p
        self.m_cols = base.m_cols
        self.col_norm_max = float(base.col_norms.max())
        self.col_norms = base.col_norms**p
        self.frob_sq = float(np.sum(self.col_norms**2))
        self.frob = math.sqrt(self.frob_sq)

    @property
    def shape(self):
        return (self.n_rows, self.m_cols)

    def decode(self, l):
        """Per-factor row indices for flat index ``l`` (array, trailing axis p)."""
        l = np.asarray(l, dtype=np.int64)
        if np.any(l < 0) or np.any(l >= self.n_rows):
            raise IndexError(f"flat index out of range [0, {self.n_rows})")
        n, p = self.base.n_rows, self.degree
        digits = np.empty(l.shape + (p,), dtype=np.intp)
        rest = l.copy()
        for t in range(p - 1, -1, -1):
            rest, digits[..., t] = np.divmod(rest, n)
        return digits

    def query(self, l, j):
        """Entries ``Z[l, j]``."""
        digits = self.decode(l)
        j = np.asarray(j, dtype=np.intp)
        out = np.ones(np.broadcast_shapes(digits.shape[:-1], j.shape))
        for t in range(self.degree):
            out = out * self.base.query(digits[..., t], j)
        return out

    def kernel_element(self, i, j):
        xi = self.base.entries[:, i]
        xj = self.base.entries[:, j]
        return float(xj @ xi) ** self.degree

    def kernel_matrix(self):
        return (self.base.entries.T @ self.base.entries) ** self.degree

    def sample_column_indices(self, rng, size, max_proposals=DEFAULT_MAX_PROPOSALS):
        rng = _as_rng(rng)
        if not self.frob_sq > 0:
            raise DegenerateDistributionError("cannot sample from an all-zero matrix")
        size = int(size)
        out = np.empty(size, dtype=np.intp)
        got = 0
        since = 0
        expo = 2 * (self.degree - 1)
        ratio = self.base.col_norms / self.col_norm_max
        while got < size:
            block = max(64, 2 * (size - got))
            j = self.base.sample_column_indices(rng, block)
            a = rng.random(block)
            accept = a < ratio[j] ** expo
            pos = 0
            for t in np.flatnonzero(accept):
                since += t - pos + 1
                pos = t + 1
                if since > max_proposals:
                    break
                out[got] = j[t]
                got += 1
                since = 0
                if got == size:
                    break
            else:
                since += block - pos
            if since > max_proposals:
                raise NonConvergenceError("kernel column sampling exceeded its proposal cap")
        return out

    def sample_in_columns(self, cols, rng):
        rng = _as_rng(rng)
        cols = np.asarray(cols, dtype=np.intp)
        if np.any(self.base.col_norms[cols] <= 0):
            raise DegenerateDistributionError("cannot sample inside an all-zero column")
        digits = np.stack([self.base.sample_in_columns(cols, rng) for _ in range(self.degree)],
                          axis=-1)
        return flat_index(digits, self.base.n_rows)

    def sample_entries(self, rng, size):
        rng = _as_rng(rng)
        j = self.sample_column_indices(rng, size)
        l = self.sample_in_columns(j, rng)
        return l, j, self.query(l, j)

    def column(self, j):
        return ColumnAccess(self, j)

    def embed_query(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.base.n_rows,):
            raise ValueError(f"query vector must have length {self.base.n_rows}")

        def feature(l):
            digits = self.decode(l)
            return np.prod(x[digits], axis=-1)

        return feature, float(np.linalg.norm(x)) ** self.degree


def poly_kernel_element(view, i, j):
    """Kernel entry for a column pair ``(i, j)``, or ``Z[l, j]`` when ``i`` is a flat index.

    Pass ``i`` as a tuple ``("col", i)`` / ``("flat", l)`` to be explicit;
    a bare int is read as a column index.
    """
    if isinstance(i, tuple):
        kind, idx = i
        if kind == "flat":
            return float(view.query(np.int64(idx), j))
        if kind != "col":
            raise ValueError(f"unknown index kind {kind!r}")
        i = idx
    return view.kernel_element(i, j)


def sample_poly_column(view, rng):
    return int(view.sample_column_indices(rng, 1)[0])


def sample_poly_row(view, j, rng):
    return int(view.sample_in_columns(np.array([j]), rng)[0])


def materialize_z(view, limit=10**5):
    """Dense ``Z`` for small instances (tests and oracles)."""
    if view.n_rows > limit:
        raise SizeGuardError(f"Z has {view.n_rows} rows, above the limit {limit}")
    X = view.base.entries
    cols = []
    for j in range(view.m_cols):
        z = np.ones(1)
        for _ in range(view.degree):
            z = np.kron(z, X[:, j])
        cols.append(z)
    return np.stack(cols, axis=1)
