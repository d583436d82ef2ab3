import json

import pytest
from click.testing import CliRunner

from relubasin.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_generate_is_deterministic(runner, tmp_path):
    for name in ("a", "b"):
        r = _invoke(runner, "generate", "--kind", "clustered", "--seed", 7, "--out", tmp_path / name)
        assert r.exit_code == 0
    for f in ("dataset.csv", "dataset.json", "report.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_generate_lowrank_writes_teacher(runner, tmp_path):
    r = _invoke(runner, "generate", "--kind", "lowrank", "--out", tmp_path)
    assert r.exit_code == 0
    assert json.loads((tmp_path / "params.json").read_text())["type"] == "two_layer"


def test_solve_basin_singleton(runner, tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("d: 1\neps: 0.1\n")
    assert _invoke(runner, "generate", "--kind", "singleton", "--params", cfg, "--out", tmp_path).exit_code == 0
    (tmp_path / "p.json").write_text(json.dumps({"n": 1, "d": 1, "W": [-1.0], "v": [1.0]}))
    r = _invoke(runner, "solve-basin", "--dataset", tmp_path / "dataset.csv", "--params", tmp_path / "p.json",
                "--out", tmp_path / "o")
    assert r.exit_code == 0
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert abs(doc["value"] - 0.1) <= 1e-8 and doc["converged"]
    assert set(doc["residuals"]) == {"feasibility", "gradient", "gap"}


def test_malformed_dataset_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,1,squared\n1.0,2.0\nx,1.0\n")
    (tmp_path / "p.json").write_text(json.dumps({"n": 1, "d": 1, "W": [1.0], "v": [1.0]}))
    r = _invoke(runner, "solve-basin", "--dataset", bad, "--params", tmp_path / "p.json")
    assert r.exit_code == 2
    assert f"{bad}:3" in r.output


def test_path_condition2_exit_3(runner, tmp_path):
    (tmp_path / "d.csv").write_text("1,1,1,squared\n1.0,1.0\n")
    # start predicts 0.2 (loss 0.32) which is below L(0) = 0.5
    (tmp_path / "a.json").write_text(json.dumps({"n": 1, "d": 1, "W": [0.2], "v": [1.0]}))
    (tmp_path / "b.json").write_text(json.dumps({"n": 1, "d": 1, "W": [1.0], "v": [1.0]}))
    r = _invoke(runner, "path", "--start", tmp_path / "a.json", "--end", tmp_path / "b.json",
                "--dataset", tmp_path / "d.csv")
    assert r.exit_code == 3
    assert "Theorem 1 condition 2 violated" in r.output


def test_path_ok(runner, tmp_path):
    (tmp_path / "d.csv").write_text("1,1,1,squared\n1.0,1.0\n")
    (tmp_path / "a.json").write_text(json.dumps({"n": 1, "d": 1, "W": [3.0], "v": [1.0]}))
    (tmp_path / "b.json").write_text(json.dumps({"n": 1, "d": 1, "W": [1.0], "v": [1.0]}))
    r = _invoke(runner, "path", "--start", tmp_path / "a.json", "--end", tmp_path / "b.json",
                "--dataset", tmp_path / "d.csv", "--N", 100, "--out", tmp_path / "o")
    assert r.exit_code == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["monotone"] is True
    assert (tmp_path / "o" / "trials.csv").read_text().startswith("segment,lam,c_tilde,objective")


def test_mc_reports_byte_identical(runner, tmp_path):
    for name, workers in (("a", 1), ("b", 1), ("c", 2)):
        r = _invoke(runner, "mc", "--bound", "thm7", "--trials", 200, "--seed", 3, "--workers", workers,
                    "--out", tmp_path / name)
        assert r.exit_code == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes() == (tmp_path / "c" / "report.json").read_bytes()
    assert (tmp_path / "a" / "trials.csv").read_bytes() == (tmp_path / "c" / "trials.csv").read_bytes()
    assert json.loads(a)["verdict"] == "CONSISTENT"


def test_mc_bad_param_exit_2(runner):
    r = runner.invoke(main, ["mc", "--bound", "thm3", "--trials", "100", "--params", "/nonexistent.yaml"])
    assert r.exit_code == 2


def test_run_config(runner, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"command: mc\nseed: 1\nout: {tmp_path / 'o'}\nmc:\n  bound: cap\n  trials: 1000\n"
                   "  params:\n    d: 3\n    delta: 0.5\n")
    r = _invoke(runner, "run", "--config", cfg)
    assert r.exit_code == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["bound_id"] == "cap"


@pytest.mark.parametrize("body,field", [
    ("command: mc\nbogus: 1\n", "bogus"),
    ("command: train\n", "command"),
    ("command: mc\nseed: -1\nmc:\n  bound: cap\n", "seed"),
    ("command: mc\nmc:\n  trials: 100\n", "mc.bound"),
    ("command: mc\nmc:\n  bound: cap\n  params:\n    width: 3\n", "width"),
    ("command: [mc\n", ":1:"),
])
def test_run_config_errors_name_field(runner, tmp_path, body, field):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(body)
    r = runner.invoke(main, ["run", "--config", str(cfg)])
    assert r.exit_code == 2
    assert field in r.output


@pytest.mark.slow
def test_verify_all_quick(runner, tmp_path):
    r = _invoke(runner, "verify-all", "--quick", "--out", tmp_path)
    assert r.exit_code == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["all_consistent"] and len(doc["runs"]) == 9
    assert doc["census"]["exact_probability"] == 17 / 65536
