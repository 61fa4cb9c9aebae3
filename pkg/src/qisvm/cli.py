"""``qisvm`` command line: gen, train, classify, bench, sweep, params."""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import RunConfig
from .core import accuracy, attach, build_model, classify_many, load_model, save_model
from .datagen import GenSpec, generate
from .errors import DatasetFormatError
from .matrix_store import load_dataset_dir, read_matrix, save_dataset_dir
from .subsample import practical_budget, theoretical_params

SEED_ENV = "QISVM_SEED"


class UsageError(Exception):
    pass


def resolve_seed(seed, err=None):
    """``--seed``, else ``$QISVM_SEED``, else a fresh seed that is printed."""
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    seed = int(np.random.SeedSequence().entropy % 2**63)
    print(f"seed: {seed}", file=err or sys.stderr)
    return seed


def _gamma(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return v


def _add_config_flags(p):
    p.add_argument("--eps", type=float, default=5.0)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--b", type=int, default=1, dest="b_ctrl")
    p.add_argument("--gamma", type=_gamma, default=math.inf, help="regularization; inf disables")
    p.add_argument("--mode", choices=("practical", "theoretical"), default="practical")
    p.add_argument("--kappa", type=float, default=10.0)
    p.add_argument("--rank", type=int, default=None, dest="rank_k")
    p.add_argument("--kernel", choices=("linear", "poly"), default="linear")
    p.add_argument("--degree", type=int, default=1)


def _add_data_flags(p, m_train_default=None):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--turbulence", action="store_true")
    p.add_argument("--m-train", type=int, default=m_train_default, dest="m_train")


def _config(args, seed):
    cfg = RunConfig(eps=args.eps, eta=args.eta, b_ctrl=args.b_ctrl, gamma=args.gamma,
                    mode=args.mode, kappa=args.kappa, rank_k=args.rank_k, kernel=args.kernel,
                    degree=args.degree, seed=seed)
    try:
        return cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _load_data(path):
    if not Path(path).is_dir():
        raise UsageError(f"dataset directory not found: {path}")
    return load_dataset_dir(path)


def cmd_gen(args):
    seed = resolve_seed(args.seed)
    try:
        spec = GenSpec(args.n, args.m, args.k, args.turbulence, args.m_train, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = generate(spec)
    save_dataset_dir(data, args.out)
    print(f"wrote {args.out}: n={data.n} m={data.m} train={data.train_idx.size}")
    return 0


def cmd_train(args):
    seed = resolve_seed(args.seed)
    cfg = _config(args, seed)
    data = _load_data(args.data)
    model = build_model(data, cfg)
    save_model(model, args.out)
    print(f"wrote {args.out}: r={model.r} c={model.budget.c} rank={model.rank}")
    return 0


def cmd_classify(args):
    seed = resolve_seed(args.seed)
    if not Path(args.model).is_file():
        raise UsageError(f"model file not found: {args.model}")
    model = load_model(args.model)
    data = _load_data(args.data)
    attach(model, data)
    if args.queries is not None:
        if not Path(args.queries).is_file():
            raise UsageError(f"query file not found: {args.queries}")
        points, labels = read_matrix(args.queries), None
    else:
        idx = data.split(args.split)
        points, labels = data.X.entries[:, idx], data.y[idx]
    results = classify_many(model, None, points, np.random.default_rng(seed))
    lines = [f"{c.label:+d} {c.score!r}" + (" tie" if c.tie else "") for c in results]
    if labels is not None:
        lines.append(f"accuracy {accuracy(results, labels)!r}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_bench(args):
    seed = resolve_seed(args.seed)
    cfg = _config(args, seed)
    settings = experiments.BenchSettings(args.n, args.m, args.m_train, args.k, args.trials)
    rows = experiments.bench(cfg, settings, seed)
    _write(args.out, experiments.to_csv(experiments.BENCH_HEADER, rows))
    print(experiments.format_bench_table(rows), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    print("exact-LS-SVM: dense solve with gamma=100, stand-in for the classical baseline",
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def cmd_sweep(args):
    seed = resolve_seed(args.seed)
    cfg = _config(args, seed)
    values = args.values if args.values is not None else experiments.SWEEP_DEFAULTS[args.param]
    if not values:
        raise UsageError("empty sweep range")
    settings = experiments.SweepSettings(args.n, args.m, args.m_train, args.k, args.trials)
    try:
        rows = experiments.sweep(cfg, args.param, values, settings, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, experiments.to_csv(experiments.SWEEP_HEADER, rows))
    return 0


def cmd_params(args):
    cfg = _config(args, None)
    if cfg.mode == "theoretical":
        if args.frob is None:
            raise UsageError("theoretical mode needs --frob")
        budget = theoretical_params(cfg.eps, cfg.eta, args.n, cfg.kappa, cfg.rank_k, args.frob)
    else:
        budget = practical_budget(cfg.eps, cfg.eta, cfg.b_ctrl, args.n, kappa=cfg.kappa)
    _write(args.out, "\n".join(budget.lines()) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="qisvm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset directory")
    _add_data_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--data", required=True)
    _add_config_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify points with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="training dataset directory")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--queries", help="matrix file whose columns are query points")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="qiSVM vs exact LS-SVM on both scenarios")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=1100)
    p.add_argument("--m-train", type=int, default=600, dest="m_train")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--trials", type=int, default=5)
    _add_config_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="mean accuracy across values of eps, eta or b")
    p.add_argument("param", choices=tuple(experiments.SWEEP_DEFAULTS))
    p.add_argument("--values", type=float, nargs="*")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=110)
    p.add_argument("--m-train", type=int, default=60, dest="m_train")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--trials", type=int, default=50)
    _add_config_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("params", help="print the error budget for given settings")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--frob", type=float, help="Frobenius norm (theoretical mode)")
    _add_config_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_params)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qisvm {args.command}: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, DatasetFormatError) as exc:
        print(f"qisvm {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"qisvm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
