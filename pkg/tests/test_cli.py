import csv
import io

import pytest

from qisvm.cli import main


@pytest.fixture
def data_dir(tmp_path):
    out = tmp_path / "data"
    assert main(["gen", "--n", "30", "--m", "40", "--k", "1", "--seed", "7", "--out",
                 str(out)]) == 0
    return out


def test_gen_writes_files(data_dir):
    assert {p.name for p in data_dir.iterdir()} == {"X.txt", "y.txt", "split.txt"}


def test_train_is_bit_identical(data_dir, tmp_path):
    a, b = tmp_path / "a.qisvm", tmp_path / "b.qisvm"
    for path in (a, b):
        assert main(["train", "--data", str(data_dir), "--eps", "5", "--eta", "0.1", "--b", "1",
                     "--seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_classify_prints_labels_and_accuracy(data_dir, tmp_path, capsys):
    model = tmp_path / "m.qisvm"
    main(["train", "--data", str(data_dir), "--seed", "1", "--out", str(model)])
    capsys.readouterr()
    assert main(["classify", "--model", str(model), "--data", str(data_dir), "--split", "test",
                 "--seed", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].startswith("accuracy ")
    assert len(lines) == 40 - 22 + 1
    for ln in lines[:-1]:
        label, score = ln.split()[:2]
        assert label in ("+1", "-1")
        float(score)


def test_classify_query_file(data_dir, tmp_path, capsys):
    model = tmp_path / "m.qisvm"
    main(["train", "--data", str(data_dir), "--seed", "1", "--out", str(model)])
    q = tmp_path / "q.txt"
    rows = (data_dir / "X.txt").read_text().splitlines()
    # first two points as a 30 x 2 query matrix
    q.write_text("30 2\n" + "\n".join(" ".join(r.split()[:2]) for r in rows[1:]) + "\n")
    capsys.readouterr()
    assert main(["classify", "--model", str(model), "--data", str(data_dir), "--queries", str(q),
                 "--seed", "0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and not any(ln.startswith("accuracy") for ln in out)


def test_seed_from_environment(data_dir, tmp_path, monkeypatch):
    a, b = tmp_path / "a.qisvm", tmp_path / "b.qisvm"
    main(["train", "--data", str(data_dir), "--seed", "42", "--out", str(a)])
    monkeypatch.setenv("QISVM_SEED", "42")
    main(["train", "--data", str(data_dir), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_missing_seed_is_printed_and_reproducible(data_dir, tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("QISVM_SEED", raising=False)
    a, b = tmp_path / "a.qisvm", tmp_path / "b.qisvm"
    main(["train", "--data", str(data_dir), "--out", str(a)])
    seed = capsys.readouterr().err.split("seed: ")[1].split()[0]
    main(["train", "--data", str(data_dir), "--seed", seed, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv", [
    ["train", "--data", "does-not-exist", "--seed", "1", "--out", "m"],
    ["train", "--eps", "5"],
    ["gen", "--n", "10", "--m", "10", "--k", "20", "--seed", "1", "--out", "x"],
    ["frobnicate"],
    ["sweep", "eps", "--values", "--seed", "1"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.strip()


def test_bad_config_exit_2(data_dir, capsys):
    assert main(["train", "--data", str(data_dir), "--eps", "-1", "--seed", "1",
                 "--out", "m"]) == 2
    assert "eps" in capsys.readouterr().err


def test_runtime_failure_exit_1(data_dir, tmp_path, capsys):
    other = tmp_path / "other"
    main(["gen", "--n", "30", "--m", "40", "--seed", "8", "--out", str(other)])
    model = tmp_path / "m.qisvm"
    main(["train", "--data", str(data_dir), "--seed", "1", "--out", str(model)])
    capsys.readouterr()
    assert main(["classify", "--model", str(model), "--data", str(other), "--seed", "1"]) == 1
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "does not match" in err


def test_params_block(capsys):
    assert main(["params", "--n", "10000", "--eps", "5", "--eta", "0.1", "--b", "10"]) == 0
    out = capsys.readouterr().out
    assert "r=30\n" in out and "c=20\n" in out


def test_params_theoretical(capsys):
    assert main(["params", "--n", "100", "--mode", "theoretical", "--rank", "1", "--kappa", "1",
                 "--frob", "1", "--eps", "5"]) == 0
    assert "mode=theoretical" in capsys.readouterr().out
    assert main(["params", "--n", "100", "--mode", "theoretical", "--rank", "1"]) == 2


def test_sweep_b_emits_sizes(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "b", "--values", "1", "2", "3", "--trials", "1", "--n", "20", "--m",
                 "24", "--m-train", "12", "--seed", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    rs = [int(r["r"]) for r in rows]
    assert len(rows) == 3 and rs[0] < rs[1] < rs[2]


def test_bench_small_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["bench", "--n", "20", "--m", "30", "--m-train", "15", "--trials", "2",
                     "--seed", "5", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert "exact-LS-SVM" in capsys.readouterr().out
