import json
import subprocess
import sys

import numpy as np
import pytest

from neural_granger import io as nio
from neural_granger.cli import main

FAST = ["--hidden", "4", "--lag", "2", "--max-iters", "40"]


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--p", "5", "--t", "100", "--seed", "2", "--out-dir", str(out)]) == 0
    return out


def test_simulate_writes_panel_and_truth(sim_dir):
    panel = nio.load_panel_csv(sim_dir / "panel.csv")
    truth = nio.load_truth(sim_dir / "truth.json")
    assert panel.p == 5 and panel.lengths == [100]
    assert truth.adjacency.sum() == 5 * 4


def test_simulate_var(tmp_path):
    assert main(["simulate", "--kind", "var", "--p", "4", "--t", "50", "--replicates", "2",
                 "--out-dir", str(tmp_path)]) == 0
    assert nio.load_panel_csv(tmp_path / "panel.csv").lengths == [50, 50]


def test_sweep_then_eval(sim_dir, tmp_path, capsys):
    sweep = tmp_path / "sweep.json"
    assert main(["sweep", "--panel", str(sim_dir / "panel.csv"), "--truth",
                 str(sim_dir / "truth.json"), "--n-lambdas", "4", "--out", str(sweep)] + FAST) == 0
    assert len(nio.load_sweep(sweep).graphs) == 4
    capsys.readouterr()
    assert main(["eval", "--sweep", str(sweep), "--out", str(tmp_path / "curves.csv")]) == 0
    scores = json.loads(capsys.readouterr().out)
    assert 0.0 <= scores["auroc"] <= 1.0 and 0.0 <= scores["aupr"] <= 1.0
    assert nio.load_curves(tmp_path / "curves.csv").auroc == scores["auroc"]


def test_fit_above_lambda_max_is_empty(sim_dir, tmp_path):
    assert main(["fit", "--panel", str(sim_dir / "panel.csv"), "--lam-ratio", "1.5",
                 "--out-dir", str(tmp_path)] + FAST) == 0
    graph = nio.import_graph(tmp_path / "graph.json")
    assert not graph.adjacency.any()
    models = nio.load_models(tmp_path / "models.json")
    assert len(models) == 5 and all(np.all(m.first == 0.0) for m in models)
    meta = json.loads((tmp_path / "models.json").read_text())["meta"]
    assert meta["lam"] > 0 and len(meta["scaling"]["mean"]) == 5


def test_fit_with_config_file(sim_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model_family_unused = 1\n")
    assert main(["fit", "--panel", str(sim_dir / "panel.csv"), "--config", str(cfg),
                 "--lam", "1"]) == 1
    cfg.write_text("family = clstm\npenalty = GROUP\nhidden = 3\nmax_iters = 5\nlam = 0.1\n")
    assert main(["fit", "--panel", str(sim_dir / "panel.csv"), "--config", str(cfg),
                 "--out-dir", str(tmp_path)]) == 0
    assert nio.load_models(tmp_path / "models.json")[0].m == 3


def test_errors_exit_one_with_single_line(sim_dir, tmp_path, capsys):
    assert main(["fit", "--panel", str(tmp_path / "missing.csv"), "--lam", "1"]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("neural-granger fit: error:") and "\n" not in err
    assert main(["fit", "--panel", str(sim_dir / "panel.csv")] + FAST) == 1
    assert "--lam" in capsys.readouterr().err
    assert main(["sweep", "--panel", str(sim_dir / "panel.csv"), "--model", "clstm",
                 "--penalty", "hier"]) == 1
    assert "GROUP" in capsys.readouterr().err


def test_usage_error_returns_two(capsys):
    assert main(["fit"]) == 2


def test_export_formats(tmp_path, capsys):
    graph_path = tmp_path / "g.json"
    stats = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 4.0], [3.0, 0.0, 1.0]])
    from neural_granger.granger import GrangerGraph
    nio.export_graph(GrangerGraph(stats, ["a", "b", "c"]), graph_path)
    out = tmp_path / "g.csv"
    assert main(["export", "--graph", str(graph_path), "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "target,source,weight,lag"
    std = tmp_path / "s.json"
    assert main(["export", "--graph", str(graph_path), "--groups", "X:0,1;Y:2",
                 "--out", str(std)]) == 0
    sg = nio.import_graph(std)
    assert sg.labels == ["X", "Y"] and sg.edge_weights.shape == (2, 2)
    assert main(["export", "--graph", str(std), "--standardize", "--out", str(tmp_path / "x")]) == 1


def test_thread_env(sim_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("NEURAL_GRANGER_THREADS", "1")
    assert main(["fit", "--panel", str(sim_dir / "panel.csv"), "--lam", "5",
                 "--out-dir", str(tmp_path)] + FAST) == 0
    monkeypatch.setenv("NEURAL_GRANGER_THREADS", "many")
    assert main(["fit", "--panel", str(sim_dir / "panel.csv"), "--lam", "5"] + FAST) == 1


def test_console_script_runs():
    done = subprocess.run([sys.executable, "-m", "neural_granger.cli", "--help"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and "simulate" in done.stdout
