"""Training and classification for the sampling-based LS-SVM.

The model solves ``(X^T X + I/gamma) alpha = y`` without ever forming the
m x m kernel.  Training draws a column sketch ``X'`` and a row sketch
``X''`` of it, diagonalizes the small r x r matrix ``A'' = X''^T X''`` and
estimates one coefficient per retained eigenvector.  The result is the
r-vector ``u``; the solution itself is only available through queries
``alpha_p = sum_s u_s R[s, p]`` with ``R = X'^T X``, each ``R`` entry being
another sampled trace estimate.  A query point ``x`` is labelled by the sign
of an estimate of ``x^T X alpha``.

Eigenvalues are kept twice: the raw eigenvalues of ``A''`` normalize the
approximate eigenvectors ``R^T V''_l / sigma_l^2`` of ``X^T X``, and the
gamma-shifted ones are what gets inverted.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import RankPolicy, RunConfig, _dec_float, _enc_float
from .errors import ModelDegenerateError, StageError
from .kernels import PolyKernelView
from .matrix_store import _as_rng
from .sketch import ElementOracle, TraceParams, estimate_trace, lower_median
from .subsample import (ColumnSketch, ErrorBudget, RowSketch, practical_budget,
                        sample_columns, sample_rows, theoretical_params)

MODEL_FORMAT = "qisvm-model"
MODEL_VERSION = 1


@dataclass
class SvmModel:
    sketch: ColumnSketch
    sigma_sq: np.ndarray
    sigma_sq_raw: np.ndarray
    V_dd: np.ndarray
    lambda_tilde: np.ndarray
    u: np.ndarray
    gamma: float
    frob: float
    budget: ErrorBudget
    y_norm: float
    query_norm: float
    query_seed: int
    kernel: str = "linear"
    degree: int = 1
    fingerprint: str = ""
    config: dict = field(default_factory=dict)
    access: object = field(default=None, repr=False, compare=False)
    _alpha_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def rank(self):
        return len(self.sigma_sq)

    @property
    def r(self):
        return self.sketch.r

    def recompute_u(self):
        return coefficient_vector(self.lambda_tilde, self.sigma_sq_raw, self.sigma_sq, self.V_dd)


def coefficient_vector(lambda_tilde, sigma_sq_raw, sigma_sq, V_dd):
    """``u = sum_l lambda_l / (raw_l * shifted_l) V''_l``; equals ``/sigma^4`` when gamma is inf."""
    return V_dd @ (lambda_tilde / (sigma_sq_raw * sigma_sq))


# -- spectral step --------------------------------------------------------

def _retained_eigenpairs(A_dd, policy, sym_tol=1e-10, psd_floor=-1e-10):
    A = np.asarray(A_dd, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A'' must be square")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T)) > sym_tol * scale:
        raise ValueError("A'' is not symmetric")
    w, V = np.linalg.eigh(A)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    if w.size and w[-1] < psd_floor * scale:
        raise ValueError(f"A'' is not positive semidefinite (min eigenvalue {w[-1]:.3e})")
    top = w[0] if w.size else 0.0
    if not top > 0:
        raise ModelDegenerateError("A'' has no positive eigenvalue")
    if policy.k is not None:
        keep = np.arange(min(policy.k, w.size))
        keep = keep[w[keep] > 1e-12 * top]
    else:
        keep = np.flatnonzero(w >= policy.theta * top)
    if keep.size == 0:
        raise ModelDegenerateError("no eigenvalue passed the rank policy")
    return w[keep], V[:, keep]


def spectral_decompose(A_dd, gamma=math.inf, rank_policy=None):
    """Descending retained eigenpairs of ``A''``, eigenvalues shifted by ``1/gamma``."""
    policy = rank_policy or RankPolicy(theta=1e-2)
    w, V = _retained_eigenpairs(A_dd, policy)
    return w + (0.0 if math.isinf(gamma) else 1.0 / gamma), V


# -- coefficient estimation -------------------------------------------------

def _sketch_times(X, sketch, v):
    """Query access to ``X' v`` (cost O(r) per element)."""
    cols = sketch.col_indices
    weights = sketch.col_scales * v

    def query(i):
        rows, inv = np.unique(np.asarray(i), return_inverse=True)
        return (X.query(rows[:, None], cols) @ weights)[inv].reshape(np.shape(i))

    return query


def estimate_lambdas(X, y, sketch, sigma_sq, V_dd, eps, eta, rank_k, rng):
    """Estimates of ``lambda_l = V''_l^T R y / sigma_l^2``, one trace estimate each.

    ``sigma_sq`` are the unshifted eigenvalues.  Each estimate targets
    absolute error ``3 eps sigma_l^2 ||y|| / (16 sqrt(k))`` before the final
    division, with failure probability ``eta / (4k)``.
    """
    rng = _as_rng(rng)
    y = np.asarray(y, dtype=float)
    y_norm = float(np.linalg.norm(y))
    k = int(rank_k)
    out = np.empty(len(sigma_sq))
    for l, s2 in enumerate(sigma_sq):
        xv = _sketch_times(X, sketch, V_dd[:, l])
        oracle = ElementOracle(lambda j, i, xv=xv: y[j] * xv(i), y_norm * X.frob, "O(r)")
        target = 3 * eps * s2 * y_norm / (16 * math.sqrt(k))
        params = TraceParams.for_absolute(target, X.frob, oracle.frob_bound, eta / (4 * k))
        out[l] = estimate_trace(X, oracle, params, rng) / s2
    return out


# -- training -------------------------------------------------------------

def training_access(data, config):
    X = data.train_matrix()
    if config.kernel == "poly":
        return PolyKernelView(X, config.degree)
    return X


def fingerprint(entries):
    a = np.ascontiguousarray(np.asarray(entries, dtype=np.float64))
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


def make_budget(config, X):
    if config.mode == "theoretical":
        return theoretical_params(config.eps, config.eta, X.n_rows, config.kappa,
                                  config.rank_k, X.frob)
    return practical_budget(config.eps, config.eta, config.b_ctrl, X.n_rows, kappa=config.kappa)


def fit_from_sketches(X, y, col_sketch, row_sketch, config, budget, rng):
    """Steps after subsampling: eigen-decomposition, lambda estimates, ``u``."""
    rng = _as_rng(rng)
    try:
        raw, V = _retained_eigenpairs(row_sketch.gram(), config.rank_policy)
    except Exception as exc:
        raise StageError("spectral", exc) from exc
    shifted = raw + (0.0 if math.isinf(config.gamma) else 1.0 / config.gamma)
    try:
        lam = estimate_lambdas(X, y, col_sketch, raw, V, config.eps, config.eta, len(raw), rng)
    except Exception as exc:
        raise StageError("lambdas", exc) from exc
    u = coefficient_vector(lam, raw, shifted, V)
    return SvmModel(
        sketch=col_sketch, sigma_sq=shifted, sigma_sq_raw=raw, V_dd=V, lambda_tilde=lam, u=u,
        gamma=config.gamma, frob=X.frob, budget=budget,
        y_norm=float(np.linalg.norm(y)), query_norm=X.frob / math.sqrt(X.m_cols),
        query_seed=int(rng.integers(0, 2**63 - 1)),
        kernel=config.kernel, degree=config.degree, config=config.to_dict(), access=X,
    )


def build_model(data, config, rng=None):
    """Train on ``data``'s training split.  Stage failures raise :class:`StageError`."""
    config.validate()
    rng = _as_rng(config.seed if rng is None else rng)
    try:
        X = training_access(data, config)
        budget = make_budget(config, X)
    except Exception as exc:
        raise StageError("params", exc) from exc
    y = data.y[data.train_idx]
    try:
        cs = sample_columns(X, budget.r, rng)
    except Exception as exc:
        raise StageError("sample_columns", exc) from exc
    try:
        rs = sample_rows(X, cs, budget.c, rng)
    except Exception as exc:
        raise StageError("sample_rows", exc) from exc
    model = fit_from_sketches(X, y, cs, rs, config, budget, rng)
    model.fingerprint = fingerprint(data.X.entries[:, data.train_idx])
    return model


# -- queries --------------------------------------------------------------

def _alpha_params(model, X, p):
    col_norm = float(X.col_norms[p])
    target = model.budget.eps1 * model.query_norm
    return TraceParams.for_absolute(target, col_norm, model.sketch.column_norm, model.budget.eta1)


def _estimate_alpha(model, X, p, rng):
    """``sum_s u_s R_hat[s, p]``; each ``R[s, p] = X'_s . x_p`` estimated by sampling ``x_p``.

    All r estimates reuse one draw sequence from ``x_p``: each keeps its own
    marginal distribution, and the union bound over ``s`` needs no independence.
    """
    col_norm = float(X.col_norms[p])
    if col_norm == 0 or not np.any(model.u):
        return 0.0
    params = _alpha_params(model, X, p)
    r = model.sketch.r
    inner, outer = params.inner_reps, params.outer_reps
    per = inner * outer
    col = X.column(p)
    i, _, a = col.sample_entries(rng, per)
    w = col.frob_sq / a
    # group sums over distinct rows: H[g, u] = sum of w over draws of row u in group g
    rows, inv = np.unique(i, return_inverse=True)
    group = np.repeat(np.arange(outer), inner)
    H = np.bincount(group * rows.size + inv, weights=w, minlength=outer * rows.size)
    block = model.sketch.query(X, rows[:, None], np.arange(r)[None, :])
    means = H.reshape(outer, rows.size) @ block / inner
    rhat = lower_median(means, axis=0)
    return float(model.u @ rhat)


def _access(model, X):
    X = model.access if X is None else X
    if X is None:
        raise ValueError("model has no attached training access; pass X")
    return X


def query_alpha_many(model, X, ps):
    """Memoized ``alpha~`` entries.  Entry ``p`` uses its own random stream
    seeded by ``(model.query_seed, p)``, so values do not depend on call order."""
    X = _access(model, X)
    ps = np.asarray(ps, dtype=np.intp)
    cache = model._alpha_cache
    for p in np.unique(ps).tolist():
        if p not in cache:
            cache[p] = _estimate_alpha(model, X, p, np.random.default_rng([model.query_seed, p]))
    return np.array([cache[p] for p in ps.tolist()])


def query_alpha(model, X, p, rng=None):
    """One entry of ``alpha~``.  With ``rng`` a fresh, uncached estimate is drawn."""
    X = _access(model, X)
    if not 0 <= p < X.m_cols:
        raise IndexError(f"point index {p} out of range")
    if rng is not None:
        return _estimate_alpha(model, X, p, _as_rng(rng))
    return float(query_alpha_many(model, X, [p])[0])


@dataclass(frozen=True)
class Classification:
    score: float
    label: int
    tie: bool = False


def classify(model, X, x, rng):
    """Sign of an estimate of ``x^T X alpha~``.  A zero score is labelled +1 and flagged."""
    X = _access(model, X)
    rng = _as_rng(rng)
    feature, x_norm = X.embed_query(x)
    if x_norm == 0:
        raise ValueError("query vector must be nonzero")
    u_norm = float(np.linalg.norm(model.u))
    oracle = ElementOracle(lambda j, i: query_alpha_many(model, X, j) * feature(i),
                           X.frob**2 * u_norm * x_norm)
    target = model.budget.eps / 4 * model.y_norm * x_norm
    params = TraceParams.for_absolute(target, X.frob, oracle.frob_bound, model.budget.eta / 4)
    score = estimate_trace(X, oracle, params, rng)
    if score > 0:
        return Classification(score, 1)
    if score < 0:
        return Classification(score, -1)
    return Classification(score, 1, tie=True)


def classify_many(model, X, points, rng):
    """Classify the columns of ``points`` (n x q)."""
    rng = _as_rng(rng)
    P = np.asarray(points, dtype=float)
    return [classify(model, X, P[:, t], rng) for t in range(P.shape[1])]


def accuracy(results, labels):
    pred = np.array([c.label for c in results], dtype=float)
    return float(np.mean(pred == np.asarray(labels)))


# -- persistence ------------------------------------------------------------
#
# JSON document {"format": "qisvm-model", "version": 1, ...}.  Floats are
# written by repr, which round-trips exactly; infinity is the string "inf".

def model_to_dict(model):
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "package_version": __version__,
        "kernel": model.kernel,
        "degree": model.degree,
        "gamma": _enc_float(model.gamma),
        "frob": model.frob,
        "y_norm": model.y_norm,
        "query_norm": model.query_norm,
        "query_seed": model.query_seed,
        "fingerprint": model.fingerprint,
        "sketch": {
            "col_indices": model.sketch.col_indices.tolist(),
            "col_scales": model.sketch.col_scales.tolist(),
            "frob": model.sketch.frob,
        },
        "sigma_sq": model.sigma_sq.tolist(),
        "sigma_sq_raw": model.sigma_sq_raw.tolist(),
        "V_dd": model.V_dd.tolist(),
        "lambda_tilde": model.lambda_tilde.tolist(),
        "u": model.u.tolist(),
        "budget": model.budget.to_dict(),
        "config": model.config,
    }


def model_from_dict(d):
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not a qisvm model document")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    sk = d["sketch"]
    return SvmModel(
        sketch=ColumnSketch(np.array(sk["col_indices"], dtype=np.intp),
                            np.array(sk["col_scales"], dtype=float), float(sk["frob"])),
        sigma_sq=np.array(d["sigma_sq"], dtype=float),
        sigma_sq_raw=np.array(d["sigma_sq_raw"], dtype=float),
        V_dd=np.array(d["V_dd"], dtype=float).reshape(len(sk["col_indices"]), -1),
        lambda_tilde=np.array(d["lambda_tilde"], dtype=float),
        u=np.array(d["u"], dtype=float),
        gamma=_dec_float(d["gamma"]),
        frob=float(d["frob"]),
        budget=ErrorBudget.from_dict(d["budget"]),
        y_norm=float(d["y_norm"]),
        query_norm=float(d["query_norm"]),
        query_seed=int(d["query_seed"]),
        kernel=d["kernel"],
        degree=int(d["degree"]),
        fingerprint=d["fingerprint"],
        config=d["config"],
    )


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def attach(model, data):
    """Rebuild the training access for a loaded model and check it matches."""
    fp = fingerprint(data.X.entries[:, data.train_idx])
    if model.fingerprint and fp != model.fingerprint:
        raise ValueError("dataset does not match the data the model was trained on")
    cfg = RunConfig(kernel=model.kernel, degree=model.degree)
    model.access = training_access(data, cfg)
    return model
