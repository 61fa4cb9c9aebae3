"""Seeded benchmark and parameter-sweep harness producing CSV tables.

Randomness: every trial gets its own stream ``SeedSequence(seed).spawn(...)``
indexed by trial number, so results do not depend on execution order.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .baseline import exact_lssvm
from .core import accuracy, build_model, classify_many
from .datagen import GenSpec, generate
from .errors import StageError
from .subsample import practical_params

BENCH_HEADER = ("scenario", "method", "split", "mean", "stddev", "trials", "status")
SWEEP_HEADER = ("param", "value", "r", "c", "mean", "stddev", "trials")
BASELINE_GAMMA = 100.0
SCENARIOS = {"low-rank": False, "turbulent": True}
SWEEP_DEFAULTS = {
    "eps": [float(v) for v in range(1, 11)],
    "eta": [round(0.1 * v, 1) for v in range(1, 10)],
    "b": [float(v) for v in range(1, 11)],
}


def trial_streams(seed, trials):
    """One ``SeedSequence`` per trial, split from the master seed."""
    return np.random.SeedSequence(seed).spawn(trials)


def _mean_std(values):
    a = np.asarray(values, dtype=float)
    # population stddev over trials
    return float(a.mean()), float(a.std())


def _fmt(v):
    return repr(float(v))


@dataclass
class BenchSettings:
    n: int = 1000
    m: int = 1100
    m_train: int = 600
    k: int = 1
    trials: int = 5
    baseline_gamma: float = BASELINE_GAMMA


def run_qisvm(data, config, ss):
    """Train and score one trial.  Returns ``(train_acc, test_acc)``."""
    fit_ss, tr_ss, te_ss = ss.spawn(3)
    model = build_model(data, config, np.random.default_rng(fit_ss))
    X = data.X.entries
    tr, te = data.train_idx, data.test_idx
    acc_tr = accuracy(classify_many(model, None, X[:, tr], np.random.default_rng(tr_ss)), data.y[tr])
    acc_te = accuracy(classify_many(model, None, X[:, te], np.random.default_rng(te_ss)), data.y[te])
    return acc_tr, acc_te


def run_baseline(data, gamma):
    X = data.X.entries
    tr, te = data.train_idx, data.test_idx
    sol = exact_lssvm(X[:, tr], data.y[tr], gamma)
    acc_tr = float(np.mean(sol.predict(X[:, tr], X[:, tr]) == data.y[tr]))
    acc_te = float(np.mean(sol.predict(X[:, tr], X[:, te]) == data.y[te]))
    return acc_tr, acc_te


def bench(config, settings, seed, log=None):
    """Run both scenarios; return summary rows in ``BENCH_HEADER`` order."""
    rows = []
    for s_idx, (name, turb) in enumerate(SCENARIOS.items()):
        streams = trial_streams([seed, s_idx], settings.trials)
        results = {"qiSVM": [], "exact-LS-SVM": []}
        status = "ok"
        try:
            for t, ss in enumerate(streams):
                gen_ss, run_ss = ss.spawn(2)
                spec = GenSpec(settings.n, settings.m, settings.k, turb, settings.m_train)
                data = generate(spec, np.random.default_rng(gen_ss))
                results["qiSVM"].append(run_qisvm(data, config, run_ss))
                results["exact-LS-SVM"].append(run_baseline(data, settings.baseline_gamma))
                if log:
                    log(f"{name} trial {t}: qiSVM {results['qiSVM'][-1]} "
                        f"exact {results['exact-LS-SVM'][-1]}")
        except StageError as exc:
            status = f"FAILED {exc}"
        for method, accs in results.items():
            for k, split in enumerate(("train", "test")):
                if status != "ok" or not accs:
                    rows.append((name, method, split, "nan", "nan", len(accs), status))
                    continue
                mean, std = _mean_std([a[k] for a in accs])
                rows.append((name, method, split, _fmt(mean), _fmt(std), len(accs), status))
    return rows


@dataclass
class SweepSettings:
    n: int = 100
    m: int = 110
    m_train: int = 60
    k: int = 1
    trials: int = 50


def sweep(config, param, values, settings, seed, log=None):
    """Mean test accuracy per parameter value on one fixed dataset."""
    if param not in SWEEP_DEFAULTS:
        raise ValueError(f"unknown sweep parameter {param!r}")
    values = list(values)
    if not values:
        raise ValueError("empty sweep range")
    data_ss, trials_ss = np.random.SeedSequence(seed).spawn(2)
    spec = GenSpec(settings.n, settings.m, settings.k, False, settings.m_train)
    data = generate(spec, np.random.default_rng(data_ss))
    n_features = data.n
    rows = []
    value_streams = trials_ss.spawn(len(values))
    for value, v_ss in zip(values, value_streams):
        field = {"eps": "eps", "eta": "eta", "b": "b_ctrl"}[param]
        cfg = replace(config, **{field: int(value) if param == "b" else float(value)})
        cfg.validate()
        r, c = practical_params(cfg.eps, cfg.eta, cfg.b_ctrl, n_features)
        streams = v_ss.spawn(settings.trials)
        accs = [run_qisvm(data, cfg, ss)[1] for ss in streams]
        mean, std = _mean_std(accs)
        rows.append((param, _fmt(value), r, c, _fmt(mean), _fmt(std), settings.trials))
        if log:
            log(f"{param}={value}: r={r} c={c} mean={mean:.4f} std={std:.4f}")
    return rows


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def format_bench_table(rows):
    """Console table, one line per scenario/method with train and test cells."""
    cells = {}
    for scen, method, split, mean, std, _, status in rows:
        if status != "ok":
            cell = "FAILED"
        else:
            cell = f"{100 * float(mean):.2f}±{100 * float(std):.2f}"
        cells.setdefault((scen, method), {})[split] = cell
    lines = [f"{'scenario':<10} {'method':<13} {'train':>13} {'test':>13}"]
    for (scen, method), c in cells.items():
        lines.append(f"{scen:<10} {method:<13} {c['train']:>13} {c['test']:>13}")
    return "\n".join(lines)
