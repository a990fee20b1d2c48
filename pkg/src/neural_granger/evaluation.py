"""Penalty sweeps over all output series and ROC / PR scoring of the result."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .clstm import ClstmNet
from .cmlp import CmlpNet
from .granger import GrangerGraph, extract_graph
from .optimizer import FitConfig, fit_many, lambda_max, make_problem, null_start
from .panel import TimeSeriesPanel
from .penalties import PenaltySpec

log = logging.getLogger(__name__)


@dataclass
class ModelConfig:
    """Architecture shared by the ``p`` componentwise networks."""

    family: str = "cmlp"
    hidden: int = 10
    lag: int = 5
    activation: str = "tanh"
    layers: int = 1
    forget_bias: float = 0.0
    segment_length: int | None = None

    def __post_init__(self):
        self.family = self.family.lower()
        if self.family not in ("cmlp", "clstm"):
            raise ValueError(f"unknown model family {self.family!r}")
        if self.hidden < 1 or self.lag < 1 or self.layers < 1:
            raise ValueError("hidden, lag and layers must be positive")
        if self.segment_length is not None and self.segment_length < 2:
            raise ValueError("segment_length must be at least 2")

    def init_models(self, p: int, seed: int = 0) -> list:
        """One freshly initialized network per output series."""
        if self.family == "cmlp":
            return [CmlpNet.init(p, self.lag, self.hidden, self.layers, self.activation, seed, i)
                    for i in range(p)]
        return [ClstmNet.init(p, self.hidden, seed, i, self.forget_bias) for i in range(p)]


@dataclass
class SweepResult:
    lambdas: np.ndarray
    graphs: list[GrangerGraph]
    truth: GrangerGraph | None = None
    include_diagonal: bool = False
    iterations: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)
        if len(self.lambdas) != len(self.graphs):
            raise ValueError("one graph per penalty strength expected")
        if np.any(np.diff(self.lambdas) >= 0):
            raise ValueError("penalty strengths must be strictly decreasing")
        if len({g.p for g in self.graphs}) > 1:
            raise ValueError("graphs in a sweep must share p")


@dataclass
class CurveSummary:
    roc_points: np.ndarray  # (n, 2) rows of (FPR, TPR)
    pr_points: np.ndarray   # (n, 2) rows of (recall, precision)
    auroc: float
    aupr: float


def default_lambda_grid(lam_max: float, n: int = 20, min_ratio: float = 0.01) -> np.ndarray:
    """``n`` log-spaced values from ``lam_max`` down to ``min_ratio * lam_max``."""
    if not lam_max > 0:
        raise ValueError("lam_max must be positive")
    return lam_max * np.logspace(0.0, np.log10(min_ratio), n)


def null_models(panel: TimeSeriesPanel, model: ModelConfig, seed: int = 0) -> list:
    """Seeded networks with every input weight at zero: the start of every fit."""
    return null_start(model.init_models(panel.p, seed))


def fit_all(panel: TimeSeriesPanel, model: ModelConfig, spec: PenaltySpec,
            config: FitConfig | None = None, models=None):
    """Fit all ``p`` networks at a single penalty strength.

    Without explicit ``models`` the fit starts from :func:`null_models`.
    """
    config = config or FitConfig()
    models = models if models is not None else null_models(panel, model, config.seed)
    fits = fit_many(models, panel, np.arange(panel.p), spec, config, model.segment_length)
    return fits, extract_graph([f.params for f in fits], panel.names)


def compute_lambda_max(panel: TimeSeriesPanel, model: ModelConfig, spec: PenaltySpec,
                       config: FitConfig | None = None) -> float:
    """``lambda_max`` for fits started from :func:`null_models`."""
    config = config or FitConfig()
    return lambda_max(null_models(panel, model, config.seed), panel, np.arange(panel.p), spec,
                      config, model.segment_length)


def lambda_sweep(panel: TimeSeriesPanel, model: ModelConfig, spec: PenaltySpec,
                 lambdas=None, config: FitConfig | None = None,
                 truth: GrangerGraph | None = None, include_diagonal: bool = False,
                 n_lambdas: int = 20, min_ratio: float = 0.01) -> SweepResult:
    """Fit every output series along a decreasing penalty path.

    The path starts from :func:`null_models` and each penalty strength is
    warm-started from the solution at the previous one. Without an explicit
    grid, :func:`default_lambda_grid` is used; its first point is
    ``lambda_max``, whose fits come for free from computing it.
    """
    config = config or FitConfig()
    p = panel.p
    targets = np.arange(p)
    models = null_models(panel, model, config.seed)
    problem, _, _ = make_problem(models, panel, model.segment_length)
    first_fits = None
    if lambdas is None:
        lam_max, first_fits = lambda_max(models, panel, targets, spec, config,
                                         problem=problem, return_fits=True)
        lambdas = default_lambda_grid(lam_max, n_lambdas, min_ratio)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.size == 0 or np.any(lambdas <= 0) or np.any(np.diff(lambdas) >= 0):
        raise ValueError("penalty grid must be nonempty, positive and strictly decreasing")
    graphs, iterations = [], []
    for n, lam in enumerate(lambdas):
        if n == 0 and first_fits is not None:
            fits = first_fits
        else:
            try:
                fits = fit_many(models, panel, targets, spec.with_lam(lam), config,
                                problem=problem)
            except (FloatingPointError, RuntimeError) as exc:
                raise RuntimeError(f"fit failed at lambda={lam:.6g}: {exc}") from exc
        models = [f.params for f in fits]
        graphs.append(extract_graph(models, panel.names))
        iterations.append([f.iterations for f in fits])
        log.info("lambda=%.4g edges=%d mean iters=%.0f", lam,
                 int(graphs[-1].adjacency.sum()), np.mean(iterations[-1]))
    return SweepResult(lambdas, graphs, truth, include_diagonal, iterations)


def _candidate_mask(p: int, include_diagonal: bool) -> np.ndarray:
    mask = np.ones((p, p), dtype=bool)
    if not include_diagonal:
        np.fill_diagonal(mask, False)
    return mask


def edge_scores(sweep: SweepResult) -> np.ndarray:
    """Rank score for every edge (p x p).

    Edges are ordered by the largest penalty at which they survive, ties
    broken by their statistic at the smallest penalty. The score is the
    dense rank of that ordering; edges that never appear score 0.
    """
    stack = np.stack([g.edge_stats for g in sweep.graphs])  # (L, p, p)
    alive = stack > 0
    survival = np.where(alive, sweep.lambdas[:, None, None], 0.0).max(axis=0)
    final = stack[-1]
    keys = np.stack([survival.ravel(), final.ravel()], axis=1)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    return inverse.reshape(survival.shape).astype(np.float64)


def roc_pr_curves(labels, scores) -> CurveSummary:
    """ROC and PR curves by sweeping a threshold over the distinct scores.

    AUROC and AUPR are trapezoidal areas. The PR curve starts at recall 0
    with the precision of the first operating point.
    """
    labels = np.asarray(labels, dtype=bool).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative candidate edge")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last_of_tie = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.cumsum(y)[last_of_tie].astype(np.float64)
    fp = np.cumsum(~y)[last_of_tie].astype(np.float64)
    tpr, fpr = tp / n_pos, fp / n_neg
    precision = tp / (tp + fp)
    roc = np.column_stack([np.r_[0.0, fpr], np.r_[0.0, tpr]])
    pr = np.column_stack([np.r_[0.0, tpr], np.r_[precision[0], precision]])
    auroc = float(np.sum(np.diff(roc[:, 0]) * (roc[1:, 1] + roc[:-1, 1]) / 2.0))
    aupr = float(np.sum(np.diff(pr[:, 0]) * (pr[1:, 1] + pr[:-1, 1]) / 2.0))
    return CurveSummary(roc, pr, auroc, aupr)


def score_sweep(sweep: SweepResult, truth: GrangerGraph | None = None,
                include_diagonal: bool | None = None) -> CurveSummary:
    truth = truth if truth is not None else sweep.truth
    if truth is None:
        raise ValueError("no ground-truth graph available for scoring")
    if truth.p != sweep.graphs[0].p:
        raise ValueError("ground truth and sweep disagree on p")
    diag = sweep.include_diagonal if include_diagonal is None else include_diagonal
    mask = _candidate_mask(truth.p, diag)
    return roc_pr_curves(truth.adjacency[mask], edge_scores(sweep)[mask])
