"""Componentwise LSTM: one single-layer LSTM per output series.

Gate rows of the stacked input matrix ``W`` (4m, p), recurrent matrix ``U``
(4m, m) and bias (4m,) are ordered in blocks

    [0:m]    forget gate
    [m:2m]   input gate
    [2m:3m]  output gate
    [3m:4m]  cell candidate

Gates use the logistic sigmoid, the candidate and the cell read-out use tanh.
Column ``j`` of ``W`` is the only path by which series ``j`` enters the
network, so zeroing it removes that series from the model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn_core import init_params, make_rng, sigmoid
from .panel import TimeSeriesPanel, as_panel

PARAM_KEYS = ("W", "U", "bias", "output")


@dataclass
class ClstmNet:
    W: np.ndarray
    U: np.ndarray
    bias: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        self.output = np.asarray(self.output, dtype=np.float64).reshape(-1)
        m = self.output.shape[0]
        if self.W.ndim != 2 or self.W.shape[0] != 4 * m:
            raise ValueError(f"W must have shape (4m, p) with m={m}, got {self.W.shape}")
        if self.U.shape != (4 * m, m) or self.bias.shape != (4 * m,):
            raise ValueError("U must be (4m, m) and bias (4m,)")

    @property
    def m(self) -> int:
        return self.output.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, p: int, m: int = 10, seed: int = 0, stream: int = 0,
             forget_bias: float = 0.0) -> "ClstmNet":
        rng = make_rng(seed, stream)
        W = init_params((4 * m, p), seed=rng)
        U = init_params((4 * m, m), seed=rng)
        output = init_params((1, m), seed=rng)[0]
        bias = np.zeros(4 * m)
        bias[:m] = forget_bias
        return cls(W, U, bias, output)

    @classmethod
    def zeros(cls, p: int, m: int) -> "ClstmNet":
        return cls(np.zeros((4 * m, p)), np.zeros((4 * m, m)), np.zeros(4 * m), np.zeros(m))

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_KEYS}

    def copy(self) -> "ClstmNet":
        return ClstmNet(*(getattr(self, k).copy() for k in PARAM_KEYS))

    def with_params(self, params: dict[str, np.ndarray]) -> "ClstmNet":
        return ClstmNet(*(np.array(params[k]) for k in PARAM_KEYS))

    def input_blocks(self) -> np.ndarray:
        """Columns of ``W`` as single-lag groups: shape (p, 1, 4m)."""
        return self.W.T[:, None, :]


def stack(nets: list[ClstmNet]) -> dict[str, np.ndarray]:
    return {k: np.stack([getattr(n, k) for n in nets]) for k in PARAM_KEYS}


def unstack(params: dict[str, np.ndarray]) -> list[ClstmNet]:
    B = params["W"].shape[0]
    return [ClstmNet(*(params[k][b].copy() for k in PARAM_KEYS)) for b in range(B)]


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray


def lstm_step(net: ClstmNet, x: np.ndarray, state: LstmState) -> LstmState:
    """Advance the cell by one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.p,) or state.h.shape != (net.m,) or state.c.shape != (net.m,):
        raise ValueError("input or state shape does not match the network")
    m = net.m
    z = net.W @ x + net.U @ state.h + net.bias
    f, i, o = sigmoid(z[:m]), sigmoid(z[m:2 * m]), sigmoid(z[2 * m:3 * m])
    c = f * state.c + i * np.tanh(z[3 * m:])
    return LstmState(o * np.tanh(c), c)


def segment_series(series: np.ndarray, segment_length: int) -> TimeSeriesPanel:
    """Cut one long series into consecutive non-overlapping segments.

    A trailing remainder is kept as a shorter segment when it still has at
    least two points (one input and one target).
    """
    if segment_length < 2:
        raise ValueError("segment length must be at least 2")
    series = np.asarray(series, dtype=np.float64)
    segs = [series[s:s + segment_length] for s in range(0, series.shape[0], segment_length)]
    return TimeSeriesPanel([s for s in segs if s.shape[0] >= 2])


def segment_panel(panel: TimeSeriesPanel, segment_length: int) -> TimeSeriesPanel:
    reps = []
    for x in panel.replicates:
        reps.extend(segment_series(x, segment_length).replicates)
    return TimeSeriesPanel(reps, list(panel.names))


class SequenceBatch:
    """Replicates padded to a common length for vectorized unrolling.

    ``inputs`` (S, T-1, p) holds ``x_1..x_{T-1}``, ``targets`` (S, T-1, p)
    holds ``x_2..x_T`` and ``mask`` marks the real (non-padded) steps.
    Padding sits at the end of each sequence, so it never influences real
    steps.
    """

    def __init__(self, panel: TimeSeriesPanel):
        panel = as_panel(panel)
        S = len(panel)
        steps = max(panel.lengths) - 1
        self.inputs = np.zeros((S, steps, panel.p))
        self.targets = np.zeros((S, steps, panel.p))
        self.mask = np.zeros((S, steps))
        for s, x in enumerate(panel.replicates):
            n = x.shape[0] - 1
            self.inputs[s, :n] = x[:-1]
            self.targets[s, :n] = x[1:]
            self.mask[s, :n] = 1.0
        self.p = panel.p
        self.counts = [x.shape[0] - 1 for x in panel.replicates]


def _unroll(params, batch: SequenceBatch):
    """Run B networks over S sequences. Returns predictions (B, S, T) and a cache."""
    W, U, bias = params["W"], params["U"], params["bias"]
    B, G, _ = W.shape
    m = G // 4
    S, steps, _ = batch.inputs.shape
    flat = batch.inputs.transpose(1, 0, 2).reshape(steps * S, -1)  # (T*S, p), time-major
    xw = np.matmul(flat, W.transpose(0, 2, 1)).reshape(B, steps, S, G).transpose(1, 0, 2, 3)
    xw = xw + bias[None, :, None, :]
    Ut = U.transpose(0, 2, 1)
    h = np.zeros((B, S, m))
    c = np.zeros((B, S, m))
    hs = np.empty((steps, B, S, m))
    cs = np.empty((steps, B, S, m))
    gates = np.empty((steps, B, S, G))
    for t in range(steps):
        z = xw[t] + np.matmul(h, Ut)
        a = np.empty_like(z)
        a[..., :3 * m] = sigmoid(z[..., :3 * m])
        a[..., 3 * m:] = np.tanh(z[..., 3 * m:])
        c = a[..., :m] * c + a[..., m:2 * m] * a[..., 3 * m:]
        h = a[..., 2 * m:3 * m] * np.tanh(c)
        hs[t], cs[t], gates[t] = h, c, a
    pred = np.matmul(hs, params["output"][None, :, :, None])[..., 0].transpose(1, 2, 0)
    return pred, (hs, cs, gates)


def batch_loss(params, batch: SequenceBatch, targets, with_grad: bool = False):
    """Masked sum of squared one-step errors for B networks, with full BPTT."""
    targets = np.asarray(targets)
    pred, (hs, cs, gates) = _unroll(params, batch)
    y = batch.targets[:, :, targets].transpose(2, 0, 1)
    resid = (y - pred) * batch.mask[None]
    loss = np.einsum("bst,bst->b", resid, resid)
    if not with_grad:
        return loss
    W, U = params["W"], params["U"]
    B, G, p = W.shape
    m = G // 4
    S, steps, _ = batch.inputs.shape
    dpred = -2.0 * resid  # (B, S, T)
    hs_b = hs.transpose(1, 0, 2, 3)  # (B, T, S, m)
    g_out = np.matmul(dpred.transpose(0, 2, 1).reshape(B, 1, -1), hs_b.reshape(B, -1, m))[:, 0]
    dz_all = np.empty((steps, B, S, G))
    dh_next = np.zeros((B, S, m))
    dc_next = np.zeros((B, S, m))
    w_out = params["output"][:, None, :]
    for t in range(steps - 1, -1, -1):
        a = gates[t]
        f, i, o, g = a[..., :m], a[..., m:2 * m], a[..., 2 * m:3 * m], a[..., 3 * m:]
        tc = np.tanh(cs[t])
        dh = dpred[:, :, t, None] * w_out + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        c_prev = cs[t - 1] if t > 0 else 0.0
        dz = dz_all[t]
        dz[..., :m] = dc * c_prev * f * (1.0 - f)
        dz[..., m:2 * m] = dc * g * i * (1.0 - i)
        dz[..., 2 * m:3 * m] = dh * tc * o * (1.0 - o)
        dz[..., 3 * m:] = dc * i * (1.0 - g * g)
        dc_next = dc * f
        dh_next = np.matmul(dz, U)
    dz_b = dz_all.transpose(1, 0, 2, 3)  # (B, T, S, G)
    flat = batch.inputs.transpose(1, 0, 2).reshape(steps * S, p)
    g_W = np.matmul(dz_b.reshape(B, -1, G).transpose(0, 2, 1), flat)
    if steps > 1:
        g_U = np.matmul(dz_b[:, 1:].reshape(B, -1, G).transpose(0, 2, 1),
                        hs_b[:, :-1].reshape(B, -1, m))
    else:
        g_U = np.zeros_like(U)
    g_b = dz_all.sum(axis=(0, 2))
    return loss, {"W": g_W, "U": g_U, "bias": g_b, "output": g_out}


def _single(net: ClstmNet):
    return {k: v[None] for k, v in net.params().items()}


def clstm_forward(net: ClstmNet, series: np.ndarray) -> np.ndarray:
    """Predictions of ``x_{i,2..T}`` for one replicate (state starts at zero).

    The network is componentwise, so the output does not depend on which
    series is the target; the target only matters for the loss.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2 or series.shape[0] < 2:
        raise ValueError("clstm_forward needs a (T, p) series with T >= 2")
    if series.shape[1] != net.p:
        raise ValueError(f"series has {series.shape[1]} columns, network expects {net.p}")
    pred, _ = _unroll(_single(net), SequenceBatch(TimeSeriesPanel([series])))
    return pred[0, 0]


def clstm_loss(net: ClstmNet, panel, target: int) -> float:
    return float(batch_loss(_single(net), SequenceBatch(as_panel(panel)), [target])[0])


def clstm_grad(net: ClstmNet, panel, target: int) -> dict[str, np.ndarray]:
    _, grads = batch_loss(_single(net), SequenceBatch(as_panel(panel)), [target], with_grad=True)
    return {k: v[0] for k, v in grads.items()}


class ClstmProblem:
    """Smooth part of the cLSTM objective bound to a panel.

    With ``segment_length`` set, every replicate is first cut into segments
    that are treated as independent realizations (truncated BPTT).
    """

    input_key = "W"

    def __init__(self, panel, segment_length: int | None = None):
        panel = as_panel(panel)
        if segment_length:
            panel = segment_panel(panel, segment_length)
        self.batch = SequenceBatch(panel)

    def loss(self, params, targets):
        return batch_loss(params, self.batch, targets)

    def loss_grad(self, params, targets):
        return batch_loss(params, self.batch, targets, with_grad=True)

    @staticmethod
    def to_blocks(W: np.ndarray) -> np.ndarray:
        """(B, 4m, p) -> (B, p, 1, 4m)."""
        return W.transpose(0, 2, 1)[:, :, None, :]

    @staticmethod
    def from_blocks(blocks: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(blocks[:, :, 0, :].transpose(0, 2, 1))
