"""Componentwise MLP: one network per output series fed by ``K`` lags.

Parameter layout for a single network with ``p`` inputs, ``K`` lags, ``H``
hidden units and ``L`` hidden layers:

``first``   (K, H, p)     ``first[k]`` multiplies ``x_{t-k-1}``
``hidden``  (L-1, H, H)   fully connected layers after the first
``biases``  (L, H)
``output``  (H,)          linear read-out, no bias

The batched kernels below take the same arrays with an extra leading axis
over networks so that all ``p`` output series are trained in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn_core import activation as apply_activation
from .nn_core import activation_grad, init_params, make_rng
from .panel import TimeSeriesPanel, as_panel

PARAM_KEYS = ("first", "hidden", "biases", "output")


@dataclass
class CmlpNet:
    first: np.ndarray
    hidden: np.ndarray
    biases: np.ndarray
    output: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        self.first = np.asarray(self.first, dtype=np.float64)
        if self.first.ndim != 3:
            raise ValueError("first-layer weights must have shape (K, H, p)")
        K, H, p = self.first.shape
        self.biases = np.asarray(self.biases, dtype=np.float64).reshape(-1, H)
        L = self.biases.shape[0]
        self.hidden = np.asarray(self.hidden, dtype=np.float64).reshape(L - 1, H, H)
        self.output = np.asarray(self.output, dtype=np.float64).reshape(H)
        if K < 1 or L < 1:
            raise ValueError("need K >= 1 and L >= 1")

    @property
    def K(self) -> int:
        return self.first.shape[0]

    @property
    def H(self) -> int:
        return self.first.shape[1]

    @property
    def p(self) -> int:
        return self.first.shape[2]

    @property
    def L(self) -> int:
        return self.biases.shape[0]

    @classmethod
    def init(cls, p: int, K: int, H: int = 10, L: int = 1, activation: str = "tanh",
             seed: int = 0, stream: int = 0) -> "CmlpNet":
        """Random Glorot-uniform weights, zero biases."""
        rng = make_rng(seed, stream)
        first = init_params((H, K * p), seed=rng).reshape(H, K, p).transpose(1, 0, 2)
        hidden = np.stack([init_params((H, H), seed=rng) for _ in range(L - 1)]) \
            if L > 1 else np.zeros((0, H, H))
        output = init_params((1, H), seed=rng)[0]
        return cls(first.copy(), hidden, np.zeros((L, H)), output, activation)

    @classmethod
    def zeros(cls, p: int, K: int, H: int, L: int = 1, activation: str = "tanh") -> "CmlpNet":
        return cls(np.zeros((K, H, p)), np.zeros((L - 1, H, H)), np.zeros((L, H)),
                   np.zeros(H), activation)

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_KEYS}

    def copy(self) -> "CmlpNet":
        return CmlpNet(*(getattr(self, k).copy() for k in PARAM_KEYS), self.activation)

    def with_params(self, params: dict[str, np.ndarray]) -> "CmlpNet":
        return CmlpNet(*(np.array(params[k]) for k in PARAM_KEYS), self.activation)

    def input_blocks(self) -> np.ndarray:
        """First-layer weights regrouped per input series: shape (p, K, H)."""
        return self.first.transpose(2, 0, 1)


def stack(nets: list[CmlpNet]) -> dict[str, np.ndarray]:
    return {k: np.stack([getattr(n, k) for n in nets]) for k in PARAM_KEYS}


def unstack(params: dict[str, np.ndarray], activation: str) -> list[CmlpNet]:
    B = params["first"].shape[0]
    return [CmlpNet(*(params[k][b].copy() for k in PARAM_KEYS), activation) for b in range(B)]


class LaggedDesign:
    """Lag windows of a panel, never crossing replicate boundaries.

    ``inputs`` has shape (N, K*p) ordered lag-major (all series at lag 1,
    then lag 2, ...); ``targets`` has shape (N, p). Each replicate of length
    ``T_r`` contributes ``T_r - K`` rows.
    """

    def __init__(self, panel: TimeSeriesPanel, K: int):
        panel = as_panel(panel)
        rows, ys, counts = [], [], []
        for r, x in enumerate(panel.replicates):
            T = x.shape[0]
            if T < K + 1:
                raise ValueError(f"replicate {r} has length {T}; cMLP with K={K} needs at least {K + 1}")
            n = T - K
            lagged = np.concatenate([x[K - k - 1:T - k - 1] for k in range(K)], axis=1)
            rows.append(lagged)
            ys.append(x[K:])
            counts.append(n)
        self.inputs = np.ascontiguousarray(np.vstack(rows))
        self.targets = np.vstack(ys)
        self.counts = counts
        self.K = K
        self.p = panel.p


def _forward(params, design: LaggedDesign, act: str):
    """Return activations of every hidden layer, each (B, N, H)."""
    first = params["first"]
    B, K, H, p = first.shape
    w = first.transpose(0, 2, 1, 3).reshape(B, H, K * p)
    z = np.matmul(design.inputs, w.transpose(0, 2, 1)) + params["biases"][:, None, 0, :]
    acts = [apply_activation(act, z)]
    for layer in range(params["hidden"].shape[1]):
        z = np.matmul(acts[-1], params["hidden"][:, layer].transpose(0, 2, 1)) \
            + params["biases"][:, None, layer + 1, :]
        acts.append(apply_activation(act, z))
    return acts


def batch_loss(params, design: LaggedDesign, targets, act: str,
               with_grad: bool = False):
    """Sum of squared one-step errors for B networks at once.

    ``targets[b]`` is the output series of network ``b``. Returns the loss
    vector (B,) and, if requested, a gradient dict with the layout of
    ``params``.
    """
    targets = np.asarray(targets)
    acts = _forward(params, design, act)
    pred = np.einsum("bnh,bh->bn", acts[-1], params["output"])
    resid = design.targets[:, targets].T - pred
    loss = np.einsum("bn,bn->b", resid, resid)
    if not with_grad:
        return loss
    B, K, H, p = params["first"].shape
    dpred = -2.0 * resid
    grads = {"output": np.einsum("bn,bnh->bh", dpred, acts[-1])}
    delta = dpred[:, :, None] * params["output"][:, None, :] * activation_grad(act, acts[-1])
    gb = np.empty_like(params["biases"])
    gh = np.empty_like(params["hidden"])
    for layer in range(params["hidden"].shape[1] - 1, -1, -1):
        gb[:, layer + 1] = delta.sum(axis=1)
        gh[:, layer] = np.matmul(delta.transpose(0, 2, 1), acts[layer])
        delta = np.matmul(delta, params["hidden"][:, layer]) * activation_grad(act, acts[layer])
    gb[:, 0] = delta.sum(axis=1)
    gw = np.matmul(delta.transpose(0, 2, 1), design.inputs)
    grads["first"] = gw.reshape(B, H, K, p).transpose(0, 2, 1, 3)
    grads["biases"] = gb
    grads["hidden"] = gh
    return loss, grads


def cmlp_forward(net: CmlpNet, lags: np.ndarray) -> float:
    """Prediction from one lag window.

    Parameters
    ----------
    lags : array_like, shape (K, p)
        ``lags[k]`` is ``x_{t-k-1}``.
    """
    lags = np.asarray(lags, dtype=np.float64)
    if lags.shape != (net.K, net.p):
        raise ValueError(f"lag window has shape {lags.shape}, expected {(net.K, net.p)}")
    h = apply_activation(net.activation, np.einsum("khp,kp->h", net.first, lags) + net.biases[0])
    for layer in range(net.L - 1):
        h = apply_activation(net.activation, net.hidden[layer] @ h + net.biases[layer + 1])
    return float(net.output @ h)


def cmlp_predict(net: CmlpNet, panel) -> list[np.ndarray]:
    """One-step-ahead predictions for every usable time point of every replicate."""
    design = LaggedDesign(as_panel(panel), net.K)
    params = {k: v[None] for k, v in net.params().items()}
    pred = np.einsum("nh,h->n", _forward(params, design, net.activation)[-1][0], net.output)
    return np.split(pred, np.cumsum(design.counts)[:-1])


def cmlp_loss(net: CmlpNet, panel, target: int) -> float:
    design = LaggedDesign(as_panel(panel), net.K)
    params = {k: v[None] for k, v in net.params().items()}
    return float(batch_loss(params, design, [target], net.activation)[0])


def cmlp_grad(net: CmlpNet, panel, target: int) -> dict[str, np.ndarray]:
    """Exact gradient of :func:`cmlp_loss` for every parameter array."""
    design = LaggedDesign(as_panel(panel), net.K)
    params = {k: v[None] for k, v in net.params().items()}
    _, grads = batch_loss(params, design, [target], net.activation, with_grad=True)
    return {k: v[0] for k, v in grads.items()}


class CmlpProblem:
    """Smooth part of the cMLP objective bound to a panel, for the optimizer."""

    input_key = "first"

    def __init__(self, panel, K: int, activation: str = "tanh"):
        self.design = LaggedDesign(as_panel(panel), K)
        self.activation = activation

    def loss(self, params, targets):
        return batch_loss(params, self.design, targets, self.activation)

    def loss_grad(self, params, targets):
        return batch_loss(params, self.design, targets, self.activation, with_grad=True)

    @staticmethod
    def to_blocks(first: np.ndarray) -> np.ndarray:
        """(B, K, H, p) -> (B, p, K, H)."""
        return first.transpose(0, 3, 1, 2)

    @staticmethod
    def from_blocks(blocks: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(blocks.transpose(0, 2, 3, 1))
