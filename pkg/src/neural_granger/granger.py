"""Granger-causality graphs read off trained componentwise networks.

Row ``i`` of every matrix is the output series (the network for series
``i``); column ``j`` is the candidate cause.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


@dataclass
class GrangerGraph:
    """Edge statistics, adjacency and (cMLP only) selected lags.

    ``selected_lag`` is ``None`` for cLSTM graphs, which carry no lag
    information.
    """

    edge_stats: np.ndarray
    names: list[str] = field(default_factory=list)
    selected_lag: np.ndarray | None = None

    def __post_init__(self):
        self.edge_stats = np.asarray(self.edge_stats, dtype=np.float64)
        p = self.edge_stats.shape[0]
        if self.edge_stats.shape != (p, p):
            raise ValueError("edge statistics must be a square matrix")
        if np.any(self.edge_stats < 0) or not np.all(np.isfinite(self.edge_stats)):
            raise ValueError("edge statistics must be finite and nonnegative")
        if not self.names:
            self.names = [f"x{j}" for j in range(p)]
        self.names = [str(n) for n in self.names]
        if len(self.names) != p:
            raise ValueError(f"{len(self.names)} names for {p} series")
        if self.selected_lag is not None:
            self.selected_lag = np.asarray(self.selected_lag, dtype=int)
            if self.selected_lag.shape != (p, p):
                raise ValueError("selected_lag must match edge statistics")
            if np.any((self.selected_lag == 0) != (self.edge_stats == 0)):
                raise ValueError("selected_lag must be 0 exactly where there is no edge")

    @property
    def p(self) -> int:
        return self.edge_stats.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return self.edge_stats > 0

    @classmethod
    def from_adjacency(cls, adjacency, names: Sequence[str] | None = None) -> "GrangerGraph":
        return cls(np.asarray(adjacency, dtype=bool).astype(np.float64), list(names or []))

    @classmethod
    def empty(cls, p: int, names: Sequence[str] | None = None) -> "GrangerGraph":
        return cls(np.zeros((p, p)), list(names or []))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrangerGraph):
            return NotImplemented
        same_lag = (self.selected_lag is None and other.selected_lag is None) or (
            self.selected_lag is not None and other.selected_lag is not None
            and np.array_equal(self.selected_lag, other.selected_lag))
        return (self.names == other.names and same_lag
                and np.array_equal(self.edge_stats, other.edge_stats))

    def permuted(self, order: Sequence[int]) -> "GrangerGraph":
        order = list(order)
        lag = None if self.selected_lag is None else self.selected_lag[np.ix_(order, order)]
        return GrangerGraph(self.edge_stats[np.ix_(order, order)],
                            [self.names[j] for j in order], lag)


@dataclass
class StandardizedGraph:
    """Row-standardized edge weights, optionally merged over node groups."""

    edge_weights: np.ndarray
    labels: list[str]
    grouping: dict[str, list[int]]


def extract_graph(models, names: Sequence[str] | None = None) -> GrangerGraph:
    """Build a graph from ``p`` fitted networks, model ``i`` predicting series ``i``."""
    from .clstm import ClstmNet
    from .cmlp import CmlpNet

    models = list(models)
    if not models:
        raise ValueError("no models given")
    if all(isinstance(m, CmlpNet) for m in models):
        recurrent = False
    elif all(isinstance(m, ClstmNet) for m in models):
        recurrent = True
    else:
        raise TypeError("models must all be cMLP or all cLSTM")
    p = len(models)
    if any(m.p != p for m in models):
        raise ValueError(f"every model must take the {p} series as input")
    blocks = np.stack([m.input_blocks() for m in models])  # (p, p, K, d)
    stats = np.sqrt(np.sum(blocks * blocks, axis=(-2, -1)))
    if recurrent:
        return GrangerGraph(stats, list(names or []))
    nonzero = np.any(blocks != 0.0, axis=-1)  # (p, p, K)
    K = nonzero.shape[-1]
    lags = np.where(nonzero.any(axis=-1), K - np.argmax(nonzero[..., ::-1], axis=-1), 0)
    return GrangerGraph(stats, list(names or []), lags)


def standardize_graph(graph: GrangerGraph,
                      grouping: Mapping[str, Sequence[int]] | None = None) -> StandardizedGraph:
    """Divide each row by its maximum, then average edges within node groups.

    Parameters
    ----------
    grouping : mapping of label -> series indices, optional
        Must partition ``range(p)``. Without it every series is its own node.
    """
    p = graph.p
    if grouping is None:
        grouping = {name: [j] for j, name in enumerate(graph.names)}
    grouping = {str(k): [int(j) for j in v] for k, v in grouping.items()}
    members = sorted(j for v in grouping.values() for j in v)
    if members != list(range(p)) or any(len(v) == 0 for v in grouping.values()):
        raise ValueError("grouping must partition the series indices")
    stats = graph.edge_stats
    row_max = stats.max(axis=1, keepdims=True)
    scaled = np.divide(stats, row_max, out=np.zeros_like(stats), where=row_max > 0)
    labels = list(grouping)
    merged = np.array([[scaled[np.ix_(grouping[a], grouping[b])].mean() for b in labels]
                       for a in labels])
    return StandardizedGraph(merged, labels, grouping)
