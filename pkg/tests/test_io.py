import json
import os

import numpy as np
import pytest

from neural_granger import io as nio
from neural_granger.evaluation import CurveSummary, SweepResult, roc_pr_curves
from neural_granger.granger import GrangerGraph, standardize_graph
from neural_granger.panel import TimeSeriesPanel
from neural_granger.cmlp import CmlpNet
from neural_granger.clstm import ClstmNet


def test_panel_csv_round_trip(tmp_path, rng):
    panel = TimeSeriesPanel([rng.normal(size=(7, 3)), rng.normal(size=(4, 3))], ["a", "b", "c"])
    path = tmp_path / "p.csv"
    nio.save_panel_csv(panel, path)
    back = nio.load_panel_csv(path)
    assert back.names == ["a", "b", "c"] and back.lengths == [7, 4]
    for x, y in zip(panel.replicates, back.replicates):
        assert np.array_equal(x, y)


def test_replicate_column_splits_rows(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("replicate,x,y\n1,0,1\n1,1,2\n1,2,3\n2,5,6\n2,6,7\n")
    panel = nio.load_panel_csv(path)
    assert panel.lengths == [3, 2] and panel.names == ["x", "y"]
    assert np.array_equal(panel.replicates[1], [[5.0, 6.0], [6.0, 7.0]])


def test_single_replicate_without_column(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x,y\n0,1\n1,2\n2,3\n")
    assert nio.load_panel_csv(path).lengths == [3]


@pytest.mark.parametrize("text,match", [
    ("x,y\n", "empty panel"),
    ("", "empty file"),
    ("x,y\n1,2\n3\n", "line 3"),
    ("x,y\n1,abc\n2,3\n", "non-numeric"),
    ("x,y\n1,nan\n2,3\n", "non-finite"),
])
def test_panel_csv_errors(tmp_path, text, match):
    path = tmp_path / "p.csv"
    path.write_text(text)
    with pytest.raises(nio.FormatError, match=match):
        nio.load_panel_csv(path)


def write_dream3(path, blocks, p, step=10.0, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["\t".join(["Time"] + [f"G{j + 1}" for j in range(p)])]
    for length in blocks:
        for t in range(length):
            lines.append("\t".join([repr(t * step)] + [repr(float(v)) for v in rng.random(p)]))
    path.write_text("\n".join(lines) + "\n")


def test_dream3_shape(tmp_path):
    path = tmp_path / "d.tsv"
    write_dream3(path, [21] * 46, 100)
    assert len(path.read_text().splitlines()) == 967
    panel = nio.load_dream3_tsv(path)
    assert len(panel) == 46 and panel.p == 100 and set(panel.lengths) == {21}
    assert panel.names[:2] == ["G1", "G2"]


def test_dream3_single_block(tmp_path):
    path = tmp_path / "d.tsv"
    write_dream3(path, [30], 4)
    assert nio.load_dream3_tsv(path).lengths == [30]


def test_dream3_errors(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text("Time\tA\n2\t1\n1\t2\n0\t3\n")
    with pytest.raises(nio.FormatError, match="fewer than 2"):
        nio.load_dream3_tsv(path)
    path.write_text("Gene\tA\n0\t1\n1\t2\n")
    with pytest.raises(nio.FormatError, match="Time"):
        nio.load_dream3_tsv(path)


def test_dream3_warns_on_uneven_replicates(tmp_path, caplog):
    path = tmp_path / "d.tsv"
    write_dream3(path, [5, 4], 2)
    panel = nio.load_dream3_tsv(path)
    assert panel.lengths == [5, 4]
    assert "lengths differ" in caplog.text


def test_graph_round_trip(tmp_path):
    stats = np.array([[0.0, 1.5, 0.0], [0.25, 0.0, 0.0], [0.0, 0.0, 3.0]])
    graph = GrangerGraph(stats, ["a", "b", "c"], np.array([[0, 2, 0], [1, 0, 0], [0, 0, 5]]))
    path = tmp_path / "g.json"
    nio.export_graph(graph, path)
    assert nio.import_graph(path) == graph


@pytest.mark.parametrize("stats", [np.zeros((3, 3)), np.diag([0.0, 0.0, 1e-300])])
def test_graph_round_trip_edge_cases(tmp_path, stats):
    path = tmp_path / "g.json"
    graph = GrangerGraph(stats)
    nio.export_graph(graph, path)
    back = nio.import_graph(path)
    assert back == graph and back.adjacency.sum() == graph.adjacency.sum()


def test_standardized_graph_round_trip(tmp_path):
    graph = GrangerGraph(np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 4.0], [1.0, 1.0, 1.0]]))
    sg = standardize_graph(graph, {"A": [0, 1], "B": [2]})
    path = tmp_path / "s.json"
    nio.export_graph(sg, path)
    back = nio.import_graph(path)
    assert back.labels == ["A", "B"] and np.array_equal(back.edge_weights, sg.edge_weights)


def test_writes_are_byte_identical(tmp_path):
    graph = GrangerGraph(np.array([[0.1, 0.2], [1 / 3, 0.0]]))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    nio.export_graph(graph, a)
    nio.export_graph(graph, b)
    assert a.read_bytes() == b.read_bytes()


def test_failed_write_leaves_no_file(tmp_path):
    path = tmp_path / "g.json"
    with pytest.raises(ValueError):
        nio.export_graph(GrangerGraph(np.array([[np.inf, 0.0], [0.0, 0.0]])), path)
    assert not path.exists()
    path.write_text("old")
    with pytest.raises(TypeError):
        nio.atomic_write(path, None)
    assert path.read_text() == "old"
    assert os.listdir(tmp_path) == ["g.json"]


def test_import_rejects_foreign_documents(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"format": "other"}))
    with pytest.raises(nio.FormatError, match="not a graph"):
        nio.import_graph(path)
    path.write_text("{broken")
    with pytest.raises(nio.FormatError, match="invalid JSON"):
        nio.import_graph(path)


def test_graph_csv(tmp_path):
    graph = GrangerGraph(np.array([[0.0, 2.0], [0.0, 0.0]]), ["x", "y"], np.array([[0, 3], [0, 0]]))
    path = tmp_path / "g.csv"
    nio.export_graph_csv(graph, path)
    assert path.read_text() == "target,source,weight,lag\nx,y,2.0,3\n"


def test_sweep_and_curves_round_trip(tmp_path):
    truth = GrangerGraph.from_adjacency(np.eye(2, k=1))
    graphs = [GrangerGraph.empty(2), GrangerGraph(np.array([[0.0, 0.5], [0.1, 0.0]]))]
    sweep = SweepResult(np.array([2.0, 1.0]), graphs, truth, False, [[1, 2], [3, 4]])
    path = tmp_path / "s.json"
    nio.save_sweep(sweep, path)
    back = nio.load_sweep(path)
    assert np.array_equal(back.lambdas, sweep.lambdas) and back.truth == truth
    assert all(a == b for a, b in zip(back.graphs, graphs)) and back.iterations == [[1, 2], [3, 4]]
    curves = roc_pr_curves([True, False, True], [0.3, 0.2, 0.1])
    cpath = tmp_path / "c.csv"
    nio.save_curves(curves, cpath)
    cb = nio.load_curves(cpath)
    assert isinstance(cb, CurveSummary) and cb.auroc == curves.auroc and cb.aupr == curves.aupr
    assert np.array_equal(cb.roc_points, curves.roc_points)
    assert np.array_equal(cb.pr_points, curves.pr_points)


def test_models_round_trip(tmp_path, rng):
    nets = [CmlpNet.init(3, K=2, H=2, L=2, seed=1), ClstmNet.init(3, m=2, seed=2)]
    path = tmp_path / "m.json"
    nio.save_models(nets, path, {"lam": 0.5})
    back = nio.load_models(path)
    for a, b in zip(nets, back):
        assert type(a) is type(b)
        for k, v in a.params().items():
            assert np.array_equal(v, b.params()[k])
