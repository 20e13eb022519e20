"""End-to-end command-line tests via subprocess.

Primary outputs (layout files, metric tables) must be byte-identical when
a command is repeated with the same inputs and seed. Bench timing columns
are wall-clock measurements, so only the table structure is checked there.
"""

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "graphdraw.cli"]


def run_cli(*args, check=True):
    res = subprocess.run(CLI + [str(a) for a in args],
                         capture_output=True, text=True)
    if check and res.returncode != 0:
        raise AssertionError(f"cli failed: {res.stderr}")
    return res


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    run_cli("generate", "--out", d, "--count", 4, "--n-lo", 10,
            "--n-hi", 14, "--seed", 3)
    return d


@pytest.fixture(scope="module")
def p3_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("graphs") / "p3.txt"
    p.write_text("0 1\n1 2\n")
    return p


def test_generate_writes_parseable_files(dataset):
    files = sorted(dataset.iterdir())
    assert len(files) == 4
    from graphdraw import fileio
    for f in files:
        g = fileio.parse_edge_list(f.read_text())
        assert 10 <= g.n <= 14


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("generate", "--out", a, "--count", 3, "--n-lo", 8, "--n-hi", 10,
            "--seed", 7)
    run_cli("generate", "--out", b, "--count", 3, "--n-lo", 8, "--n-hi", 10,
            "--seed", 7)
    for fa, fb in zip(sorted(a.iterdir()), sorted(b.iterdir())):
        assert fa.read_bytes() == fb.read_bytes()


def test_draw_sgd_p3_report_below_threshold(p3_file, tmp_path):
    out = tmp_path / "p3.svg"
    res = run_cli("draw", p3_file, "--method", "sgd", "--sgd-eta-max", 4,
                  "--sgd-eta-min", 4, "--format", "svg", "--out", out,
                  "--seed", 1)
    assert out.exists()
    assert b"<svg" in out.read_bytes()
    line = [ln for ln in res.stdout.splitlines()
            if ln.startswith("scale_invariant_stress")][0]
    assert float(line.split()[-1]) < 1e-4


def test_draw_json_byte_identical_across_runs(p3_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["draw", p3_file, "--method", "sgd", "--format", "json",
            "--seed", 5]
    run_cli(*args, "--out", a)
    run_cli(*args, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert set(doc) == {"nodes", "edges", "meta"}
    assert doc["meta"]["seed"] == 5
    assert "scale_invariant" in doc["meta"]["stress"]


def test_draw_pivot_method(dataset, tmp_path):
    f = sorted(dataset.iterdir())[0]
    out = tmp_path / "pv.json"
    run_cli("draw", f, "--method", "pivot", "--out", out, "--seed", 2)
    doc = json.loads(out.read_text())
    assert len(doc["nodes"]) >= 10


def test_draw_renders_figure(p3_file, tmp_path):
    fig = tmp_path / "p3.png"
    run_cli("draw", p3_file, "--figure", fig, "--seed", 0,
            "--out", tmp_path / "p3.json")
    assert fig.exists() and fig.stat().st_size > 0


def test_draw_missing_file_fails(tmp_path):
    res = run_cli("draw", tmp_path / "nope.txt", check=False)
    assert res.returncode != 0
    assert "error:" in res.stderr


def test_draw_malformed_graph_fails_with_line(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\nx y\n")
    res = run_cli("draw", bad, check=False)
    assert res.returncode != 0
    assert "line 2" in res.stderr


def test_eval_table_columns_and_determinism(dataset, tmp_path):
    args = ["eval", "--data", dataset, "--seed", 4]
    r1 = run_cli(*args, "--out", tmp_path / "e1")
    r2 = run_cli(*args, "--out", tmp_path / "e2")
    header = r1.stdout.splitlines()[0].split()
    assert header == ["method", "mean_stress", "mean_normalized_stress"]
    assert (tmp_path / "e1" / "eval.csv").read_bytes() == \
        (tmp_path / "e2" / "eval.csv").read_bytes()
    assert (tmp_path / "e1" / "eval.png").stat().st_size > 0
    methods = [ln.split()[0] for ln in r1.stdout.splitlines()[1:] if ln]
    assert "pivot_mds" in methods and "stress_sgd" in methods


def test_train_writes_artifacts_and_checkpoint(dataset, tmp_path):
    out = tmp_path / "run"
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({
        "engine": {"hidden_dim": 16, "use_hierarchy": False,
                   "features": {"n_eigenvectors": 3, "n_beacons": 1,
                                "beacon_encoding": 4},
                   "rewiring": {"k": 4}},
        "train": {"epochs": 2, "batch_size": 4, "val_rounds": 2},
        "seed": 0,
    }))
    run_cli("train", "--config", cfgp, "--train-dir", dataset,
            "--eval-dir", dataset, "--out", out)
    assert (out / "model.json").exists()
    artifact = json.loads((out / "run.json").read_text())
    # artifact embeds the full resolved config
    assert artifact["config"]["engine"]["hidden_dim"] == 16
    assert artifact["config"]["train"]["epochs"] == 2
    assert artifact["seed"] == 0
    assert len(artifact["history"]["epoch"]) == 2
    hist = (out / "history.csv").read_text().splitlines()
    assert hist[0] == "epoch,train_loss,val_stress,lr"
    assert len(hist) == 3
    assert (out / "history.png").stat().st_size > 0

    # the checkpoint drives draw and eval
    res = run_cli("draw", sorted(dataset.iterdir())[0], "--method", "model",
                  "--checkpoint", out / "model.json", "--rounds", 2,
                  "--seed", 1, "--out", tmp_path / "m.json")
    assert "scale_invariant_stress" in res.stdout
    res = run_cli("eval", "--data", dataset, "--checkpoint", out / "model.json",
                  "--rounds", 2, "--seed", 1)
    assert res.stdout.splitlines()[1].split()[0] == "model"


def test_train_rejects_bad_config(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({"train": {"lr": -5}}))
    res = run_cli("train", "--config", cfgp, "--out", tmp_path / "o",
                  check=False)
    assert res.returncode != 0
    assert "lr" in res.stderr


def test_train_requires_data_dirs(tmp_path):
    res = run_cli("train", "--out", tmp_path / "o", check=False)
    assert res.returncode != 0


def test_bench_table_structure(tmp_path):
    res = run_cli("bench", "--sizes", "30,60", "--repeats", 1, "--rounds", 1,
                  "--seed", 0, "--out", tmp_path / "b")
    lines = [ln for ln in res.stdout.splitlines() if ln and not ln.startswith("wrote")]
    assert lines[0].split() == ["n", "median_seconds", "runs"]
    assert [ln.split()[0] for ln in lines[1:]] == ["30", "60"]
    csv_lines = (tmp_path / "b" / "bench.csv").read_text().splitlines()
    assert csv_lines[0] == "n,median_seconds,runs"
    assert len(csv_lines) == 3
    assert (tmp_path / "b" / "bench.png").stat().st_size > 0


def test_bench_rejects_bad_sizes():
    res = run_cli("bench", "--sizes", "abc", check=False)
    assert res.returncode != 0


def test_unknown_command_fails():
    res = run_cli("polish", check=False)
    assert res.returncode != 0
