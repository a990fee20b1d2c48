r"""Structured sparsity penalties on input-weight groups and their prox maps.

Input weights are handled as *blocks*: an array of shape ``(..., p, K, d)``
where ``blocks[..., j, k, :]`` holds the weights connecting lag ``k + 1`` of
series ``j`` to the first hidden layer. A cLSTM column ``W[:, j]`` is a
single block (``K = 1``, ``d = 4m``).

Penalties (per series ``j``, summed over ``j`` and scaled by ``lam``):

GROUP
    :math:`\|(v_1, \ldots, v_K)\|_2`
HIER
    :math:`\sum_{k=1}^{K} \|(v_k, \ldots, v_K)\|_2`
MIXED
    :math:`\alpha \|(v_1, \ldots, v_K)\|_2 + (1 - \alpha) \sum_k \|v_k\|_2`

All three groupings form a tree (nested suffixes, or per-lag leaves under one
root), so each prox is exactly the composition of group soft-thresholds
applied from the smallest groups to the largest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("GROUP", "MIXED", "HIER")


@dataclass(frozen=True)
class PenaltySpec:
    family: str = "HIER"
    lam: float = 0.0
    alpha: float | None = None

    def __post_init__(self):
        family = self.family.upper()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}")
        if not self.lam >= 0:
            raise ValueError("penalty strength must be nonnegative")
        if family == "MIXED":
            if self.alpha is None:
                object.__setattr__(self, "alpha", 0.5)
            if not 0.0 <= self.alpha <= 1.0:
                raise ValueError("MIXED alpha must lie in [0, 1]")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for the MIXED family")

    def with_lam(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.family, float(lam), self.alpha)


@dataclass
class InputGroupView:
    """Per-series input weight blocks of one network.

    ``blocks`` has shape (p, K, d). ``recurrent`` marks a cLSTM view,
    which only admits the GROUP penalty.
    """

    blocks: np.ndarray
    recurrent: bool = False

    def __post_init__(self):
        self.blocks = np.asarray(self.blocks, dtype=np.float64)
        if self.blocks.ndim != 3:
            raise ValueError("blocks must have shape (p, K, d)")
        if self.recurrent and self.blocks.shape[1] != 1:
            raise ValueError("a cLSTM view has exactly one block per series")

    @classmethod
    def of(cls, net) -> "InputGroupView":
        from .clstm import ClstmNet

        return cls(net.input_blocks(), recurrent=isinstance(net, ClstmNet))


def _norm(x: np.ndarray, axes) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=axes, keepdims=True))


def soft_threshold(v: np.ndarray, tau, axes) -> np.ndarray:
    """Group soft-threshold over ``axes``; groups with norm <= tau become +0.0."""
    norm = _norm(v, axes)
    keep = norm > tau
    safe = np.where(keep, norm, 1.0)
    return np.where(keep, (1.0 - tau / safe) * v, 0.0)


def _tau(tau, blocks: np.ndarray):
    """Broadcast a scalar or per-network threshold against (..., p, K, d)."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("threshold must be nonnegative")
    return tau.reshape(tau.shape + (1,) * (blocks.ndim - tau.ndim)) if tau.ndim else tau


def prox_group_blocks(blocks: np.ndarray, tau) -> np.ndarray:
    return soft_threshold(blocks, _tau(tau, blocks), axes=(-2, -1))


def prox_hier_blocks(blocks: np.ndarray, tau) -> np.ndarray:
    tau = _tau(tau, blocks)
    out = np.array(blocks, dtype=np.float64)
    K = out.shape[-2]
    for k in range(K - 1, -1, -1):
        out[..., k:, :] = soft_threshold(out[..., k:, :], tau, axes=(-2, -1))
    return out


def prox_mixed_blocks(blocks: np.ndarray, tau, alpha: float) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    tau = _tau(tau, blocks)
    inner = soft_threshold(blocks, (1.0 - alpha) * tau, axes=(-1,))
    return soft_threshold(inner, alpha * tau, axes=(-2, -1))


def prox_blocks(spec: PenaltySpec, blocks: np.ndarray, tau) -> np.ndarray:
    if spec.family == "GROUP":
        return prox_group_blocks(blocks, tau)
    if spec.family == "HIER":
        return prox_hier_blocks(blocks, tau)
    return prox_mixed_blocks(blocks, tau, spec.alpha)


def penalty_blocks(spec: PenaltySpec, blocks: np.ndarray) -> np.ndarray:
    """Penalty value over the trailing (p, K, d) axes; leading axes are kept."""
    sq = np.sum(blocks * blocks, axis=-1)  # (..., p, K)
    if spec.family == "GROUP":
        per_series = np.sqrt(sq.sum(axis=-1))
    elif spec.family == "HIER":
        suffix = np.cumsum(sq[..., ::-1], axis=-1)
        per_series = np.sqrt(suffix).sum(axis=-1)
    else:
        a = spec.alpha
        per_series = a * np.sqrt(sq.sum(axis=-1)) + (1.0 - a) * np.sqrt(sq).sum(axis=-1)
    return spec.lam * per_series.sum(axis=-1)


def group_norms_blocks(blocks: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(blocks * blocks, axis=(-2, -1)))


def _check_family(spec: PenaltySpec, view: InputGroupView) -> None:
    if view.recurrent and spec.family != "GROUP":
        raise ValueError(f"{spec.family} penalty is not defined for cLSTM input groups")


def penalty_value(spec: PenaltySpec, view: InputGroupView) -> float:
    _check_family(spec, view)
    return float(penalty_blocks(spec, view.blocks))


def prox_group(view: InputGroupView, tau: float) -> InputGroupView:
    return InputGroupView(prox_group_blocks(view.blocks, tau), view.recurrent)


def prox_hier(view: InputGroupView, tau: float) -> InputGroupView:
    """Nested-suffix prox: lag K alone first, the full stack last."""
    if view.recurrent:
        raise ValueError("HIER prox is not defined for cLSTM input groups")
    return InputGroupView(prox_hier_blocks(view.blocks, tau))


def prox_mixed(view: InputGroupView, tau: float, alpha: float) -> InputGroupView:
    if view.recurrent:
        raise ValueError("MIXED prox is not defined for cLSTM input groups")
    return InputGroupView(prox_mixed_blocks(view.blocks, tau, alpha))


def prox(spec: PenaltySpec, view: InputGroupView, tau: float) -> InputGroupView:
    _check_family(spec, view)
    return InputGroupView(prox_blocks(spec, view.blocks, tau), view.recurrent)


def group_norms(view: InputGroupView) -> np.ndarray:
    """Euclidean norm of every series' full block stack, shape (p,)."""
    return group_norms_blocks(view.blocks)
