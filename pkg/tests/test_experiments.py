import numpy as np

from qisvm.config import RunConfig
from qisvm.experiments import (BENCH_HEADER, SWEEP_HEADER, BenchSettings, SweepSettings, bench,
                               format_bench_table, sweep, to_csv, trial_streams)


def test_trial_streams_are_independent_of_count():
    a = trial_streams(3, 4)
    b = trial_streams(3, 6)
    for x, y in zip(a, b):
        assert np.random.default_rng(x).random() == np.random.default_rng(y).random()


def test_bench_rows_shape():
    rows = bench(RunConfig(), BenchSettings(20, 30, 15, 1, 2), seed=1)
    assert len(rows) == 8
    assert {r[0] for r in rows} == {"low-rank", "turbulent"}
    assert all(r[-1] == "ok" for r in rows)
    text = to_csv(BENCH_HEADER, rows)
    assert text.splitlines()[0] == ",".join(BENCH_HEADER)
    assert "±" in format_bench_table(rows)


def test_bench_failed_scenario_marked():
    # theoretical sizes at this eps overflow nothing but the rank policy needs rank_k=5 > 1
    cfg = RunConfig(mode="theoretical", rank_k=1, eps=1e-300)
    rows = bench(cfg, BenchSettings(10, 12, 6, 1, 1), seed=0)
    assert all(r[-1].startswith("FAILED") for r in rows)
    assert "FAILED" in format_bench_table(rows)


def test_sweep_rows():
    rows = sweep(RunConfig(), "eps", [4.0, 6.0], SweepSettings(20, 24, 12, 1, 2), seed=0)
    assert [r[1] for r in rows] == ["4.0", "6.0"]
    assert to_csv(SWEEP_HEADER, rows).startswith("param,value,r,c,mean,stddev,trials\n")
