"""Ground-truth generators: sparse VAR(K) and Lorenz-96."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .granger import GrangerGraph
from .nn_core import make_rng
from .panel import TimeSeriesPanel


@dataclass
class VarSpec:
    """VAR(K) process ``x_t = sum_k A[k] x_{t-k} + e_t``.

    ``coefficients`` has shape (K, p, p); ``coefficients[k]`` acts on lag
    ``k + 1``.
    """

    coefficients: np.ndarray
    noise_std: float = 1.0
    T: int = 1000
    seed: int = 0
    burn_in: int = 200
    replicates: int = 1

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.ndim != 3 or self.coefficients.shape[1] != self.coefficients.shape[2]:
            raise ValueError("coefficients must have shape (K, p, p)")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.T < 2 or self.replicates < 1:
            raise ValueError("need T >= 2 and at least one replicate")
        radius = spectral_radius(self.coefficients)
        if radius >= 1.0:
            raise ValueError(f"VAR is not stationary (companion spectral radius {radius:.4f})")

    @property
    def p(self) -> int:
        return self.coefficients.shape[1]

    @property
    def lag_order(self) -> int:
        return self.coefficients.shape[0]

    def truth(self, names=None) -> GrangerGraph:
        return GrangerGraph.from_adjacency(np.any(self.coefficients != 0, axis=0), names)


@dataclass
class LorenzSpec:
    p: int = 20
    F: float = 10.0
    delta_t: float = 0.05
    T: int = 1000
    burn_in: int = 100
    noise_std: float = 0.0
    seed: int = 0
    perturbation: float = 0.01
    substeps: int = 10
    replicates: int = 1

    def __post_init__(self):
        if self.p < 4:
            raise ValueError("Lorenz-96 needs p >= 4")
        if not self.delta_t > 0 or self.substeps < 1:
            raise ValueError("delta_t must be positive and substeps >= 1")
        if self.T < 2 or self.burn_in < 0 or self.noise_std < 0:
            raise ValueError("invalid Lorenz-96 length, burn-in or noise level")

    def truth(self, names=None) -> GrangerGraph:
        adj = np.zeros((self.p, self.p), dtype=bool)
        for i in range(self.p):
            adj[i, [(i - 2) % self.p, (i - 1) % self.p, i, (i + 1) % self.p]] = True
        return GrangerGraph.from_adjacency(adj, names)


def spectral_radius(coefficients: np.ndarray) -> float:
    """Largest eigenvalue modulus of the VAR companion matrix."""
    K, p, _ = coefficients.shape
    companion = np.zeros((K * p, K * p))
    companion[:p] = np.concatenate(list(coefficients), axis=1)
    companion[p:, :-p] = np.eye((K - 1) * p)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def make_sparse_var(p: int, lag_order: int, edges_per_row: int, coef_value: float,
                    seed: int = 0, max_retries: int = 100, **spec_kwargs) -> VarSpec:
    """Self-edges plus ``edges_per_row`` random off-diagonal parents per series.

    Every active edge carries ``coef_value`` at all lags ``1..lag_order``.
    Draws that are not stationary are redrawn (up to ``max_retries``).
    """
    if not 0 <= edges_per_row <= p - 1:
        raise ValueError("edges_per_row must lie in [0, p - 1]")
    if lag_order < 1:
        raise ValueError("lag_order must be at least 1")
    rng = make_rng(seed, 0xA)
    for _ in range(max_retries):
        adj = np.eye(p, dtype=bool)
        for i in range(p):
            others = np.delete(np.arange(p), i)
            adj[i, rng.choice(others, size=edges_per_row, replace=False)] = True
        coefs = np.repeat((coef_value * adj)[None], lag_order, axis=0)
        if spectral_radius(coefs) < 1.0:
            return VarSpec(coefs, seed=seed, **spec_kwargs)
    raise ValueError(f"no stationary VAR found after {max_retries} draws")


def simulate_var(spec: VarSpec, initial: np.ndarray | None = None,
                 names=None) -> tuple[TimeSeriesPanel, GrangerGraph]:
    """Simulate ``spec.replicates`` independent runs of length ``spec.T``.

    History before the first step is zero unless ``initial`` (shape
    (K, p), most recent last) is given. The first ``burn_in`` steps are
    dropped.
    """
    K, p = spec.lag_order, spec.p
    rng = make_rng(spec.seed, 0xB)
    total = spec.burn_in + spec.T
    stacked = np.concatenate(list(spec.coefficients[::-1]), axis=1)  # oldest lag first
    reps = []
    for _ in range(spec.replicates):
        x = np.zeros((K + total, p))
        if initial is not None:
            x[:K] = np.asarray(initial, dtype=np.float64).reshape(K, p)
        noise = rng.normal(scale=spec.noise_std, size=(total, p)) if spec.noise_std > 0 \
            else np.zeros((total, p))
        for t in range(K, K + total):
            x[t] = stacked @ x[t - K:t].reshape(-1) + noise[t - K]
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1e12:
            raise FloatingPointError("VAR simulation diverged")
        reps.append(x[K + spec.burn_in:])
    panel = TimeSeriesPanel(reps, list(names or []))
    return panel, spec.truth(panel.names)


def lorenz96_rhs(x: np.ndarray, F: float) -> np.ndarray:
    """``dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F`` with cyclic indices."""
    return (np.roll(x, -1, axis=-1) - np.roll(x, 2, axis=-1)) * np.roll(x, 1, axis=-1) - x + F


def rk4_step(x: np.ndarray, F: float, h: float) -> np.ndarray:
    k1 = lorenz96_rhs(x, F)
    k2 = lorenz96_rhs(x + 0.5 * h * k1, F)
    k3 = lorenz96_rhs(x + 0.5 * h * k2, F)
    k4 = lorenz96_rhs(x + h * k3, F)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_lorenz96(spec: LorenzSpec, names=None) -> tuple[TimeSeriesPanel, GrangerGraph]:
    """Integrate Lorenz-96 with fixed-step RK4 and sample every ``delta_t``."""
    rng = make_rng(spec.seed, 0xC)
    h = spec.delta_t / spec.substeps
    reps = []
    for _ in range(spec.replicates):
        x = spec.F * np.ones(spec.p)
        if spec.perturbation:
            x = x + rng.uniform(-spec.perturbation, spec.perturbation, size=spec.p)
        out = np.empty((spec.burn_in + spec.T, spec.p))
        for n in range(out.shape[0]):
            if n:
                for _ in range(spec.substeps):
                    x = rk4_step(x, spec.F, h)
                if not np.all(np.abs(x) < 1e6):
                    raise FloatingPointError(f"Lorenz-96 integration diverged at sample {n}")
            out[n] = x
        out = out[spec.burn_in:]
        if spec.noise_std > 0:
            out = out + rng.normal(scale=spec.noise_std, size=out.shape)
        reps.append(out)
    panel = TimeSeriesPanel(reps, list(names or []))
    return panel, spec.truth(panel.names)
