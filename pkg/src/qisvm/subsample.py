"""Two-stage subsampling X -> X' -> X'' and the choice of sketch sizes r, c.

``X'`` keeps ``r`` columns drawn by column norm, each rescaled to norm
``||X||_F / sqrt(r)``; ``X''`` keeps ``c`` rows of ``X'`` drawn by picking a
sketch column uniformly and then a row inside it, each rescaled to norm
``||X||_F / sqrt(c)``.  With these scalings ``E[X' X'^T] = X X^T`` and
``E[X''^T X''] = X'^T X'``.

``X'`` is never materialized against a large parent: a :class:`ColumnSketch`
only stores indices and scale factors and answers element queries through
the parent's storage.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, DegenerateDistributionError
from .matrix_store import _as_rng


@dataclass(frozen=True)
class ColumnSketch:
    col_indices: np.ndarray
    col_scales: np.ndarray
    frob: float

    @property
    def r(self):
        return len(self.col_indices)

    @property
    def column_norm(self):
        return self.frob / math.sqrt(self.r)

    @classmethod
    def from_indices(cls, X, indices):
        idx = np.asarray(indices, dtype=np.intp)
        if idx.ndim != 1 or idx.size < 1:
            raise ValueError("need at least one column index")
        norms = X.col_norms[idx]
        if np.any(norms <= 0):
            raise DegenerateDistributionError("sketch columns must be nonzero")
        scales = X.frob / (math.sqrt(idx.size) * norms)
        return cls(idx, scales, X.frob)

    def query(self, X, i, s):
        """Elements ``X'[i, s]`` for index arrays ``i``, ``s``."""
        return X.query(i, self.col_indices[s]) * self.col_scales[s]

    def row(self, X, i):
        return X.query(np.full(self.r, i), self.col_indices) * self.col_scales

    def materialize(self, X):
        return np.asarray(X.entries)[:, self.col_indices] * self.col_scales


@dataclass(frozen=True)
class RowSketch:
    row_indices: np.ndarray
    sources: np.ndarray
    entries: np.ndarray

    @property
    def c(self):
        return len(self.row_indices)

    @classmethod
    def from_indices(cls, X, sketch, rows, sources=None):
        rows = np.asarray(rows, dtype=np.intp)
        if sources is None:
            sources = np.full(rows.shape, -1, dtype=np.intp)
        c = rows.size
        r = sketch.r
        # c x r block of X' gathered through the parent's element queries
        block = sketch.query(X, np.repeat(rows, r), np.tile(np.arange(r), c)).reshape(c, r)
        norms = np.linalg.norm(block, axis=1)
        if np.any(norms <= 0):
            raise DegenerateDistributionError("sampled a zero row of X'")
        entries = block * (sketch.frob / (math.sqrt(c) * norms))[:, None]
        return cls(rows, np.asarray(sources, dtype=np.intp), entries)

    def gram(self):
        return self.entries.T @ self.entries


def sample_columns(X, r, rng):
    """Draw ``r`` column indices i.i.d. by squared column norm."""
    if r < 1:
        raise ValueError("r must be at least 1")
    rng = _as_rng(rng)
    idx = X.sample_column_indices(rng, int(r))
    return ColumnSketch.from_indices(X, idx)


def sample_rows(X, sketch, c, rng):
    """Draw ``c`` rows of ``X'``: uniform sketch column, then a row inside it."""
    if c < 1:
        raise ValueError("c must be at least 1")
    rng = _as_rng(rng)
    s = rng.integers(0, sketch.r, size=int(c))
    rows = X.sample_in_columns(sketch.col_indices[s], rng)
    return RowSketch.from_indices(X, sketch, rows, s)


# -- sketch sizes ----------------------------------------------------------

def _stage_counts(eps, eta):
    inner = math.ceil(36.0 / eps**2)
    outer = math.ceil(6.0 * math.log2(16.0 / eta))
    return inner, outer


@dataclass
class ErrorBudget:
    """Sketch sizes and per-stage precision for one run.

    ``eps1`` is the per-element precision of the ``R`` queries *per unit
    query-vector norm*; multiply by a query norm to get an absolute target.
    ``eps_prime``, ``beta`` and ``zeta`` are only set in theoretical mode.
    """

    mode: str
    eps: float
    eta: float
    r: int
    c: int
    eps1: float
    eta1: float
    kappa: float | None = None
    rank_k: int | None = None
    eps_prime: float | None = None
    beta: float | None = None
    zeta: float | None = None
    b_ctrl: int | None = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def lines(self):
        out = []
        for k, v in asdict(self).items():
            out.append(f"{k}={'' if v is None else v}")
        return out

    def check_inequalities(self, frob):
        """Exact rational check of the three budget inequalities.

        Returns a dict name -> bool.  Only meaningful in theoretical mode.
        """
        F2 = Fraction(frob) ** 2
        k = Fraction(self.rank_k)
        kap = Fraction(self.kappa)
        b = Fraction(self.beta)
        e = Fraction(self.eps_prime)
        z = Fraction(self.zeta)
        return {
            "orthogonality": kap**2 * b**2 + 2 * kap * b + kap**2 * e * F2 <= 1 / (4 * k),
            "spectral": (2 * e + b * F2) * F2 * kap**2 <= z,
            "inverse": Fraction(5, 3) * kap * k * z <= Fraction(self.eps) / 4,
        }


def stage_precision(eps, eta, r, practical):
    """Per-element precision (per unit query norm) and failure budget for R queries."""
    inner, outer = _stage_counts(eps, eta)
    eta1 = eta / (8 * r * inner * outer)
    if practical:
        eps1 = eps / (2 * math.sqrt(r))
    else:
        eps1 = eps / (2 * math.sqrt(r) * inner * outer)
    return eps1, eta1


def practical_params(eps, eta, b, n):
    """``r = b*ceil(4 log2(2n/eta)/eps^2)``, ``c = b*ceil(4 log2(2r/eta)/eps^2)``."""
    _check_common(eps, eta)
    if int(b) != b or b < 1:
        raise ValueError("b must be a positive integer")
    if n < 1:
        raise ValueError("n must be positive")
    b = int(b)
    r = b * math.ceil(4 * math.log2(2 * n / eta) / eps**2)
    c = b * math.ceil(4 * math.log2(2 * r / eta) / eps**2)
    return r, c


def practical_budget(eps, eta, b, n, kappa=None):
    r, c = practical_params(eps, eta, b, n)
    eps1, eta1 = stage_precision(eps, eta, r, practical=True)
    return ErrorBudget("practical", eps, eta, r, c, eps1, eta1, kappa=kappa, b_ctrl=int(b))


def _check_common(eps, eta):
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")


def theoretical_params(eps, eta, n, kappa, rank_k, frob):
    """Deterministic feasible point of the budget inequalities and the sizes it implies.

    zeta is fixed by equality in the inverse-error bound; beta and eps' take
    the smaller of the value that spends exactly half of zeta and the value
    that spends exactly half of the orthogonality budget ``1/(4k)``.
    """
    _check_common(eps, eta)
    if kappa < 1:
        raise BudgetError("kappa must be at least 1")
    if rank_k < 1 or int(rank_k) != rank_k:
        raise BudgetError("rank_k must be a positive integer")
    if not frob > 0:
        raise BudgetError("||X||_F must be positive")
    k = int(rank_k)
    F2 = frob**2
    zeta = 3 * eps / (20 * kappa * k)
    beta_root = (math.sqrt(1 + 1 / (8 * k)) - 1) / kappa
    beta = min(zeta / (2 * F2**2 * kappa**2), beta_root)
    eps_prime = min(zeta / (4 * F2 * kappa**2), 1 / (8 * k * kappa**2 * F2))
    if not (zeta > 0 and beta > 0 and eps_prime > 0):
        raise BudgetError("budget collapsed to zero: inverse-error bound (zeta) is not positive")

    budget = ErrorBudget("theoretical", eps, eta, 0, 0, 0.0, 0.0, kappa=kappa, rank_k=k,
                         eps_prime=eps_prime, beta=beta, zeta=zeta)
    # float rounding can overshoot by an ulp; step down until the exact check passes
    for _ in range(64):
        ok = budget.check_inequalities(frob)
        if all(ok.values()):
            break
        if not ok["inverse"]:
            budget.zeta = float(np.nextafter(budget.zeta, 0))
        budget.beta = float(np.nextafter(budget.beta, 0))
        budget.eps_prime = float(np.nextafter(budget.eps_prime, 0))
    else:
        failed = [name for name, v in ok.items() if not v]
        raise BudgetError(f"could not satisfy budget inequalities: {', '.join(failed)}")

    r = math.ceil(4 * math.log2(8 * n / eta) / budget.eps_prime**2)
    c = math.ceil(4 * kappa**2 * math.log2(8 * r / eta) / budget.beta**2)
    eps1, eta1 = stage_precision(eps, eta, r, practical=False)
    budget.r, budget.c, budget.eps1, budget.eta1 = r, c, eps1, eta1
    return budget


# sizes quoted for n=1e4, kappa=1, eta=0.1, eps=5 in the original experiments
REFERENCE_POINT = {"n": 10_000, "kappa": 1.0, "eta": 0.1, "eps": 5.0, "r": 1656, "c": 259973}
