"""Multivariate time-series panels made of independent replicates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class TimeSeriesPanel:
    """One or more replicate series sharing the same ``p`` variables.

    Attributes
    ----------
    replicates : list of ndarray
        Each replicate is a ``(length, p)`` float array.
    names : list of str
        Series labels; defaults to ``x0 .. x{p-1}``.
    """

    replicates: list[np.ndarray]
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.replicates:
            raise ValueError("empty panel")
        reps = [np.array(r, dtype=np.float64) for r in self.replicates]
        reps = [r.reshape(-1, 1) if r.ndim == 1 else r for r in reps]
        p = reps[0].shape[1]
        for idx, r in enumerate(reps):
            if r.ndim != 2 or r.shape[1] != p:
                raise ValueError(f"replicate {idx} has shape {r.shape}, expected (length, {p})")
            if r.shape[0] < 2:
                raise ValueError(f"replicate {idx} has length {r.shape[0]} < 2")
            if not np.all(np.isfinite(r)):
                raise ValueError(f"replicate {idx} contains non-finite values")
        self.replicates = reps
        if not self.names:
            self.names = [f"x{j}" for j in range(p)]
        if len(self.names) != p:
            raise ValueError(f"{len(self.names)} names for {p} series")
        self.names = [str(n) for n in self.names]

    @property
    def p(self) -> int:
        return self.replicates[0].shape[1]

    @property
    def lengths(self) -> list[int]:
        return [r.shape[0] for r in self.replicates]

    def __len__(self) -> int:
        return len(self.replicates)

    @classmethod
    def from_array(cls, x: np.ndarray, names: Sequence[str] | None = None) -> "TimeSeriesPanel":
        return cls([np.asarray(x)], list(names or []))

    def concat(self, other: "TimeSeriesPanel") -> "TimeSeriesPanel":
        if other.p != self.p:
            raise ValueError("panels have different series counts")
        return TimeSeriesPanel(self.replicates + other.replicates, list(self.names))

    def standardized(self) -> tuple["TimeSeriesPanel", np.ndarray, np.ndarray]:
        """Zero-mean, unit-variance copy using statistics pooled over replicates.

        Returns the new panel plus the ``mean`` and ``scale`` vectors so
        results can be mapped back to original units. Constant series get
        scale 1.
        """
        stacked = np.vstack(self.replicates)
        mean = stacked.mean(axis=0)
        scale = stacked.std(axis=0)
        scale[scale == 0] = 1.0
        reps = [(r - mean) / scale for r in self.replicates]
        return TimeSeriesPanel(reps, list(self.names)), mean, scale

    def permuted(self, order: Sequence[int]) -> "TimeSeriesPanel":
        order = list(order)
        return TimeSeriesPanel([r[:, order] for r in self.replicates],
                               [self.names[j] for j in order])


def as_panel(data) -> TimeSeriesPanel:
    """Accept a panel, a single 2-D array, or a list of 2-D arrays."""
    if isinstance(data, TimeSeriesPanel):
        return data
    if isinstance(data, np.ndarray):
        return TimeSeriesPanel([data])
    return TimeSeriesPanel(list(data))
