"""Desk-scale accuracy table: qiSVM vs exact LS-SVM on low-rank and turbulent data.

    python3 scripts/table2.py --seed 2024 --out results/table2.csv
"""
import argparse
import sys
from pathlib import Path

from qisvm.config import RunConfig
from qisvm.experiments import BENCH_HEADER, BenchSettings, bench, format_bench_table, to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--m", type=int, default=1100)
    ap.add_argument("--m-train", type=int, default=600)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--eps", type=float, default=5.0)
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--b", type=int, default=1)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    cfg = RunConfig(eps=args.eps, eta=args.eta, b_ctrl=args.b)
    settings = BenchSettings(args.n, args.m, args.m_train, 1, args.trials)
    rows = bench(cfg, settings, args.seed, log=lambda s: print(s, file=sys.stderr))
    print(format_bench_table(rows))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(to_csv(BENCH_HEADER, rows))


if __name__ == "__main__":
    main()
