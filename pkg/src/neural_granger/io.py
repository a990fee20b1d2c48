"""File formats: panel CSV, DREAM3-style TSV, JSON graph / sweep / model
documents and delimited curve summaries.

Every writer is deterministic (sorted keys, shortest round-trip float
formatting, no timestamps) and writes through a temporary file that is
renamed into place, so a failed write never leaves a partial file.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from .clstm import ClstmNet
from .cmlp import CmlpNet
from .evaluation import CurveSummary, SweepResult
from .granger import GrangerGraph, StandardizedGraph
from .panel import TimeSeriesPanel

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
REPLICATE_COLUMN = "replicate"


class FormatError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


# -- panels -----------------------------------------------------------------

def save_panel_csv(panel: TimeSeriesPanel, path, replicate_column: bool | None = None) -> None:
    """Write a panel; a ``replicate`` column is added when there are several."""
    if replicate_column is None:
        replicate_column = len(panel) > 1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(([REPLICATE_COLUMN] if replicate_column else []) + panel.names)
    for r, x in enumerate(panel.replicates):
        for row in x:
            writer.writerow(([str(r)] if replicate_column else []) + [_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def _parse_float(cell: str, line: int, col: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise FormatError(f"non-numeric value {cell!r} at line {line}, column {col!r}") from None
    if not np.isfinite(value):
        raise FormatError(f"non-finite value at line {line}, column {col!r}")
    return value


def load_panel_csv(path) -> TimeSeriesPanel:
    """Read a comma-separated panel with a header row of series names.

    An optional ``replicate`` column splits rows into replicates wherever its
    value changes; row order is preserved.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise FormatError(f"{path}: empty panel")
    rep_idx = header.index(REPLICATE_COLUMN) if REPLICATE_COLUMN in header else None
    names = [h for k, h in enumerate(header) if k != rep_idx]
    reps, current, last_key = [], [], None
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {n} has {len(row)} fields, expected {len(header)}")
        key = row[rep_idx].strip() if rep_idx is not None else None
        if current and key != last_key:
            reps.append(current)
            current = []
        last_key = key
        current.append([_parse_float(c, n, header[k]) for k, c in enumerate(row) if k != rep_idx])
    reps.append(current)
    try:
        return TimeSeriesPanel([np.array(r) for r in reps], names)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_dream3_tsv(path) -> TimeSeriesPanel:
    """Read a DREAM3-style time-course file.

    Tab separated, first column ``Time``; a new replicate starts wherever the
    time value decreases. Unequal spacing or unequal replicate lengths only
    produce warnings.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh, delimiter="\t") if row and any(c.strip() for c in row)]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip().strip('"') for h in rows[0]]
    if header[0].lower() != "time":
        raise FormatError(f"{path}: first column must be 'Time', found {header[0]!r}")
    times, values = [], []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {n} has {len(row)} fields, expected {len(header)}")
        times.append(_parse_float(row[0], n, header[0]))
        values.append([_parse_float(c, n, header[k + 1]) for k, c in enumerate(row[1:])])
    if not values:
        raise FormatError(f"{path}: empty panel")
    times, values = np.array(times), np.array(values)
    starts = np.r_[0, np.nonzero(np.diff(times) < 0)[0] + 1]
    bounds = np.r_[starts, len(times)]
    reps = [values[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    short = [k for k, r in enumerate(reps) if r.shape[0] < 2]
    if short:
        raise FormatError(f"{path}: replicates {short[:5]} have fewer than 2 time points")
    for k, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        steps = np.diff(times[a:b])
        if not np.allclose(steps, steps[0]):
            log.warning("%s: replicate %d has unequal time spacing", path, k)
    if len({r.shape[0] for r in reps}) > 1:
        log.warning("%s: replicate lengths differ: %s", path, sorted({r.shape[0] for r in reps}))
    return TimeSeriesPanel(reps, header[1:])


# -- graphs -----------------------------------------------------------------

def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _matrix(a) -> list:
    return [[float(v) for v in row] for row in np.asarray(a)]


def graph_to_dict(graph: GrangerGraph) -> dict:
    return {
        "p": graph.p,
        "names": list(graph.names),
        "edge_stats": _matrix(graph.edge_stats),
        "adjacency": [[int(v) for v in row] for row in graph.adjacency],
        "selected_lag": None if graph.selected_lag is None
        else [[int(v) for v in row] for row in graph.selected_lag],
    }


def graph_from_dict(doc: dict) -> GrangerGraph:
    stats = np.array(doc["edge_stats"], dtype=np.float64).reshape(doc["p"], doc["p"])
    if not np.array_equal(np.array(doc["adjacency"], dtype=bool), stats > 0):
        raise FormatError("adjacency does not match edge statistics")
    lag = doc.get("selected_lag")
    return GrangerGraph(stats, doc["names"], None if lag is None else np.array(lag, dtype=int))


def _check_header(doc: dict, kind: str, path) -> None:
    if doc.get("format") != f"neural-granger/{kind}":
        raise FormatError(f"{path}: not a {kind} document")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported {kind} version {doc.get('version')!r}")


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def export_graph(graph: GrangerGraph | StandardizedGraph, path) -> None:
    if isinstance(graph, StandardizedGraph):
        doc = {"format": "neural-granger/standardized-graph", "version": FORMAT_VERSION,
               "labels": list(graph.labels), "edge_weights": _matrix(graph.edge_weights),
               "grouping": {k: list(v) for k, v in graph.grouping.items()}}
    else:
        doc = {"format": "neural-granger/graph", "version": FORMAT_VERSION, **graph_to_dict(graph)}
    atomic_write(path, _dump(doc))


def import_graph(path) -> GrangerGraph | StandardizedGraph:
    doc = _read_json(path)
    if doc.get("format") == "neural-granger/standardized-graph":
        _check_header(doc, "standardized-graph", path)
        return StandardizedGraph(np.array(doc["edge_weights"], dtype=np.float64),
                                 doc["labels"], {k: list(v) for k, v in doc["grouping"].items()})
    _check_header(doc, "graph", path)
    return graph_from_dict(doc)


def export_graph_csv(graph: GrangerGraph | StandardizedGraph, path) -> None:
    """Edge list ``target,source,weight[,lag]`` of nonzero edges."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(graph, StandardizedGraph):
        writer.writerow(["target", "source", "weight"])
        for i, a in enumerate(graph.labels):
            for j, b in enumerate(graph.labels):
                if graph.edge_weights[i, j] != 0:
                    writer.writerow([a, b, _fmt(graph.edge_weights[i, j])])
    else:
        writer.writerow(["target", "source", "weight", "lag"])
        for i, j in zip(*np.nonzero(graph.adjacency)):
            lag = "" if graph.selected_lag is None else str(graph.selected_lag[i, j])
            writer.writerow([graph.names[i], graph.names[j], _fmt(graph.edge_stats[i, j]), lag])
    atomic_write(path, buf.getvalue())


# -- sweeps and curves --------------------------------------------------------

def save_sweep(sweep: SweepResult, path) -> None:
    doc = {
        "format": "neural-granger/sweep",
        "version": FORMAT_VERSION,
        "lambdas": [float(v) for v in sweep.lambdas],
        "include_diagonal": bool(sweep.include_diagonal),
        "graphs": [graph_to_dict(g) for g in sweep.graphs],
        "iterations": [[int(v) for v in row] for row in sweep.iterations],
        "truth": None if sweep.truth is None else graph_to_dict(sweep.truth),
    }
    atomic_write(path, _dump(doc))


def load_sweep(path) -> SweepResult:
    doc = _read_json(path)
    _check_header(doc, "sweep", path)
    truth = None if doc["truth"] is None else graph_from_dict(doc["truth"])
    return SweepResult(np.array(doc["lambdas"]), [graph_from_dict(g) for g in doc["graphs"]],
                       truth, doc["include_diagonal"], doc.get("iterations", []))


def save_curves(curves: CurveSummary, path) -> None:
    """Delimited text: an area table followed by the curve points."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write(f"# neural-granger/curves v{FORMAT_VERSION}\n")
    writer.writerow(["curve", "x", "y"])
    writer.writerow(["auroc", "", _fmt(curves.auroc)])
    writer.writerow(["aupr", "", _fmt(curves.aupr)])
    for x, y in curves.roc_points:
        writer.writerow(["roc", _fmt(x), _fmt(y)])
    for x, y in curves.pr_points:
        writer.writerow(["pr", _fmt(x), _fmt(y)])
    atomic_write(path, buf.getvalue())


def load_curves(path) -> CurveSummary:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))[1:]
    areas = {r[0]: float(r[2]) for r in rows if r[0] in ("auroc", "aupr")}
    roc = np.array([[float(r[1]), float(r[2])] for r in rows if r[0] == "roc"])
    pr = np.array([[float(r[1]), float(r[2])] for r in rows if r[0] == "pr"])
    return CurveSummary(roc, pr, areas["auroc"], areas["aupr"])


def save_truth(graph: GrangerGraph, path) -> None:
    export_graph(graph, path)


def load_truth(path) -> GrangerGraph:
    graph = import_graph(path)
    if not isinstance(graph, GrangerGraph):
        raise FormatError(f"{path}: expected a graph document")
    return graph


# -- models -------------------------------------------------------------------

def models_to_dict(models) -> dict:
    nets = []
    for net in models:
        entry = {k: np.asarray(v).tolist() for k, v in net.params().items()}
        if isinstance(net, CmlpNet):
            entry.update(family="cmlp", activation=net.activation,
                         shape=[net.K, net.H, net.p, net.L])
        else:
            entry.update(family="clstm", shape=[net.m, net.p])
        nets.append(entry)
    return {"format": "neural-granger/models", "version": FORMAT_VERSION, "models": nets}


def save_models(models, path, extra: dict | None = None) -> None:
    doc = models_to_dict(models)
    if extra:
        doc["meta"] = extra
    atomic_write(path, _dump(doc))


def load_models(path) -> list:
    doc = _read_json(path)
    _check_header(doc, "models", path)
    nets = []
    for entry in doc["models"]:
        if entry["family"] == "cmlp":
            K, H, p, L = entry["shape"]
            nets.append(CmlpNet(np.array(entry["first"]).reshape(K, H, p),
                                np.array(entry["hidden"]).reshape(L - 1, H, H),
                                np.array(entry["biases"]).reshape(L, H),
                                np.array(entry["output"]), entry["activation"]))
        else:
            m, p = entry["shape"]
            nets.append(ClstmNet(np.array(entry["W"]).reshape(4 * m, p),
                                 np.array(entry["U"]).reshape(4 * m, m),
                                 np.array(entry["bias"]), np.array(entry["output"])))
    return nets
