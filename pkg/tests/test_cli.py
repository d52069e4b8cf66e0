import json

import numpy as np
import pytest

from sgtc.cli import main
from sgtc.io import read_graph, read_mask, read_tensor, write_tensor


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand():
    assert main(["frobnicate"]) == 2


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["experiment", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path), "--seed", "1"]) == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "missing.json" in err[0]


def test_malformed_config_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path), "--seed", "1"]) == 2


@pytest.mark.parametrize("cmd", [["experiment", "--out", "x"], ["verify"]])
def test_seed_required(cmd):
    assert main(cmd) == 2


def test_graph_pipeline(tmp_path, capsys):
    g = tmp_path / "g.txt"
    m = tmp_path / "m.txt"
    assert main(["gen-graph", "--n", "12", "--d", "4", "--swaps", "10", "--seed", "3", "--out", str(g)]) == 0
    assert (tmp_path / "g.txt.manifest.json").exists()
    assert read_graph(g).d == 4
    capsys.readouterr()
    assert main(["graph-lambda", str(g)]) == 0
    lam = float(capsys.readouterr().out)
    assert 0 <= lam <= 4
    assert main(["lift", str(g), "--t", "3", "--out", str(m)]) == 0
    assert read_mask(m).size == 12 * 16
    assert main(["estimate-gap", str(m), "--seed", "0"]) == 0


def test_gen_graph_is_pure(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for p in (a, b):
        main(["gen-graph", "--n", "20", "--d", "5", "--swaps", "30", "--seed", "9", "--out", str(p)])
    assert a.read_text() == b.read_text()


def test_grid_and_shuffle(tmp_path):
    grid, shuf = tmp_path / "grid.txt", tmp_path / "shuf.txt"
    assert main(["grid-mask", "--dims", "5", "5", "5", "--fraction", "0.2", "--out", str(grid)]) == 0
    assert main(["shuffle-mask", str(grid), "--fraction", "0.5", "--seed", "2", "--out", str(shuf)]) == 0
    assert read_mask(grid).size == read_mask(shuf).size == 25


def test_atomic_norm_command(tmp_path, capsys):
    t = tmp_path / "t.txt"
    write_tensor(t, np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert main(["atomic-norm", str(t), "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(2.0)
    assert len(out["coefficients"]) == 4


def test_atomic_norm_malformed_file(tmp_path):
    t = tmp_path / "t.txt"
    t.write_text("2 2 2\n1 2\n")
    assert main(["atomic-norm", str(t)]) == 3


def test_bound_json(capsys):
    assert main(["bound", "--kind", "thm3", "--n", "4", "--t", "3", "--lambda2-h", "1",
                 "--n-observed", "32", "--atomic-norm", "1", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(8.0)
    assert main(["bound", "--kind", "thm4", "--t", "3", "--lam", "1", "--d", "0", "--atomic-norm", "1"]) == 2


def test_complete_command(tmp_path, capsys):
    grid, t, est = tmp_path / "grid.txt", tmp_path / "t.txt", tmp_path / "est.txt"
    # 5 is odd, so a 50% grid touches every slice of every mode
    main(["grid-mask", "--dims", "5", "5", "5", "--fraction", "0.5", "--out", str(grid)])
    write_tensor(t, np.full((5, 5, 5), 2.0))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fit_rank": 1, "max_sweeps": 30}))
    capsys.readouterr()
    assert main(["complete", "--algo", "ridge", "--mask", str(grid), "--tensor", str(t),
                 "--config", str(cfg), "--max-sweeps", "40", "--out", str(est)]) == 0
    out = dict(line.split(" ", 1) for line in capsys.readouterr().out.strip().splitlines())
    assert float(out["rel_error"]) < 0.05
    assert read_tensor(est).shape == (5, 5, 5)
    manifest = json.loads((tmp_path / "est.txt.manifest.json").read_text())
    assert manifest["config"]["max_sweeps"] == 40 and manifest["config"]["fit_rank"] == 1


def test_complete_with_embedded_tensor(tmp_path):
    grid = tmp_path / "grid.txt"
    main(["grid-mask", "--dims", "3", "3", "--fraction", "1.0", "--out", str(grid)])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fit_rank": 1, "tensor": {"dims": [3, 3], "values": [1] * 9}}))
    assert main(["complete", "--algo", "ridge-proj", "--mask", str(grid), "--config", str(cfg)]) == 0


def test_complete_nonconvergence_exit(tmp_path):
    grid, t = tmp_path / "grid.txt", tmp_path / "t.txt"
    main(["grid-mask", "--dims", "5", "5", "5", "--fraction", "0.3", "--out", str(grid)])
    write_tensor(t, np.random.default_rng(0).standard_normal((5, 5, 5)))
    assert main(["complete", "--algo", "maxq", "--mask", str(grid), "--tensor", str(t),
                 "--max-sweeps", "1", "--require-convergence"]) == 4


def test_experiment_command_and_precedence(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"n": 10, "r": 1, "r_fit": 2, "d": 4, "swaps": [0, 10, 20],
                               "trials": 5, "algorithm": "ridge", "max_sweeps": 3}))
    out = tmp_path / "out"
    assert main(["experiment", "--config", str(cfg), "--out", str(out), "--seed", "4",
                 "--trials", "1", "--no-timing"]) == 0
    for name in ("records.csv", "regression.json", "scatter.svg", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["trials"] == 1 and manifest["seed"] == 4
    assert len((out / "records.csv").read_text().splitlines()) == 4


def test_verify_quick(capsys):
    assert main(["verify", "--quick", "--seed", "0"]) == 0
    assert "FAIL" not in capsys.readouterr().out
