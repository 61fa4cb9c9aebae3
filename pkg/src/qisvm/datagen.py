"""Synthetic low-rank and low-rank-approximable labelled datasets.

1. ``X = A @ B`` with ``A`` (n x k) and ``B`` (k x m) uniform on [-0.5, 0.5].
2. Optionally add independent uniform noise on ``[-0.1 xbar, 0.1 xbar]``,
   ``xbar`` being the mean absolute entry of ``X``.
3. Rescale ``X`` to operator norm 1.
4. Label column ``x`` by the sign of ``w . x`` with ``w`` uniform on [0, 1]^n,
   redrawing ``w`` until both classes occur (a zero score counts as +1).
5. Pick ``m_train`` columns uniformly for training, redrawing until the
   training set holds both classes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix_store import LabeledDataset, SampledMatrix, _as_rng

MAX_ATTEMPTS = 1000


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenSpec:
    n: int
    m: int
    k: int = 1
    turbulence: bool = False
    m_train: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 2:
            raise ValueError("need n >= 1 and m >= 2")
        if not 1 <= self.k <= min(self.n, self.m):
            raise ValueError("k must lie in [1, min(n, m)]")
        if not 1 <= self.train_count < self.m:
            raise ValueError("m_train must lie in [1, m)")

    @property
    def train_count(self):
        # default keeps the 6000/11000 train fraction of the reference experiment
        return self.m_train if self.m_train is not None else max(1, round(self.m * 6 / 11))


def operator_norm(X, rtol=1e-10, max_iter=20_000, rng=None):
    """Largest singular value by power iteration on ``X^T X``."""
    rng = _as_rng(0 if rng is None else rng)
    v = rng.standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = X.T @ (X @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = float(np.sqrt(nw))
        if abs(new - sigma) <= rtol * new:
            sigma = new
            break
        sigma = new
    else:
        # slow spectral gap; settle it exactly
        return float(np.linalg.norm(X, 2))
    return float(np.linalg.norm(X @ v))


def generate(spec, rng=None):
    """Build a :class:`LabeledDataset` following the steps in the module docstring."""
    rng = _as_rng(spec.seed if rng is None else rng)
    A = rng.uniform(-0.5, 0.5, size=(spec.n, spec.k))
    B = rng.uniform(-0.5, 0.5, size=(spec.k, spec.m))
    X = A @ B
    if spec.turbulence:
        xbar = float(np.mean(np.abs(X)))
        X = X + rng.uniform(-0.1 * xbar, 0.1 * xbar, size=X.shape)
    X = X / operator_norm(X)

    for _ in range(MAX_ATTEMPTS):
        w = rng.uniform(0.0, 1.0, size=spec.n)
        y = np.where(w @ X >= 0, 1.0, -1.0)
        if np.any(y > 0) and np.any(y < 0):
            break
    else:
        raise GenerationError(f"no hyperplane split the points in {MAX_ATTEMPTS} attempts")

    for _ in range(MAX_ATTEMPTS):
        perm = rng.permutation(spec.m)
        train = np.sort(perm[:spec.train_count])
        test = np.sort(perm[spec.train_count:])
        if np.any(y[train] > 0) and np.any(y[train] < 0):
            break
    else:
        raise GenerationError(f"no training split held both classes in {MAX_ATTEMPTS} attempts")

    meta = {"n": spec.n, "m": spec.m, "k": spec.k, "turbulence": spec.turbulence}
    return LabeledDataset(SampledMatrix(X), y, train, test, meta)
