"""Proximal gradient descent with backtracking for componentwise networks.

Only the input-weight groups enter the prox; every other parameter takes a
plain gradient step. Each network keeps its own step size, so fitting the
``p`` output series together (:func:`fit_many`) gives the same iterates as
fitting them one at a time, while sharing the array work.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import clstm, cmlp
from .clstm import ClstmNet, ClstmProblem
from .cmlp import CmlpNet, CmlpProblem
from .penalties import PenaltySpec, penalty_blocks, prox_blocks


# Relative headroom on lambda_max against roundoff in the prox comparison.
LAMBDA_MAX_MARGIN = 1e-9


class LineSearchError(RuntimeError):
    pass


@dataclass
class FitConfig:
    max_iters: int = 5000
    initial_step: float = 1.0
    backtrack: float = 0.5
    growth: float = 2.0
    tol: float = 1e-6
    window: int = 10
    max_backtracks: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 0 or self.window < 1:
            raise ValueError("max_iters must be >= 0 and window >= 1")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.growth < 1.0 or self.tol < 0:
            raise ValueError("growth must be >= 1 and tol >= 0")


@dataclass
class FitResult:
    params: CmlpNet | ClstmNet
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def objective(self) -> float:
        _, smooth, pen = self.trace[-1]
        return smooth + pen


def stack_models(models):
    """Stack same-family networks; returns ``(params, rebuild)``."""
    models = list(models)
    if not models:
        raise ValueError("no models given")
    first = models[0]
    if isinstance(first, CmlpNet):
        if not all(isinstance(m, CmlpNet) for m in models):
            raise TypeError("mixed model families")
        shapes = {(m.K, m.H, m.p, m.L, m.activation) for m in models}
        if len(shapes) != 1:
            raise ValueError("cMLP models differ in shape or activation")
        return cmlp.stack(models), lambda prm: cmlp.unstack(prm, first.activation)
    if isinstance(first, ClstmNet):
        if not all(isinstance(m, ClstmNet) for m in models):
            raise TypeError("mixed model families")
        if len({(m.m, m.p) for m in models}) != 1:
            raise ValueError("cLSTM models differ in shape")
        return clstm.stack(models), clstm.unstack
    raise TypeError(f"unsupported model type {type(first).__name__}")


def make_problem(models, panel, segment_length: int | None = None):
    """Bind a list of same-family networks to a panel.

    Returns ``(problem, params, rebuild)`` where ``params`` stacks the
    networks and ``rebuild(params)`` turns stacked arrays back into nets.
    """
    models = list(models)
    params, rebuild = stack_models(models)
    if isinstance(models[0], CmlpNet):
        problem = CmlpProblem(panel, models[0].K, models[0].activation)
    else:
        problem = ClstmProblem(panel, segment_length)
    return problem, params, rebuild


def _check_spec(problem, spec: PenaltySpec) -> None:
    if isinstance(problem, ClstmProblem) and spec.family != "GROUP":
        raise ValueError(f"{spec.family} penalty is not defined for cLSTM models")


def _take(params, idx):
    return {k: v[idx] for k, v in params.items()}


def _sq_norm(params) -> np.ndarray:
    return sum(np.einsum("bi,bi->b", v.reshape(v.shape[0], -1), v.reshape(v.shape[0], -1))
               for v in params.values())


def fit_many(models, panel, targets, spec: PenaltySpec, config: FitConfig | None = None,
             segment_length: int | None = None, problem=None,
             freeze_inputs: bool = False, observe=None) -> list[FitResult]:
    """Fit one network per entry of ``targets`` by proximal gradient descent.

    Parameters
    ----------
    models : list of CmlpNet or list of ClstmNet
        Starting points (not modified).
    panel : TimeSeriesPanel
    targets : sequence of int
        Output series index of each model.
    spec : PenaltySpec
    config : FitConfig
    segment_length : int, optional
        cLSTM only: cut replicates into independent segments first.
    problem : optional
        Pre-bound problem from :func:`make_problem`, to avoid rebuilding
        the data layout during a sweep.
    freeze_inputs : bool
        Hold the input weights at zero and fit only the other parameters.
    observe : callable, optional
        Called as ``observe(active, input_grad)`` with the indices of the
        still-running networks and their input-weight gradient, once per
        iterate (including the start).
    """
    config = config or FitConfig()
    if problem is None:
        problem, params, rebuild = make_problem(models, panel, segment_length)
    else:
        params, rebuild = stack_models(models)
    _check_spec(problem, spec)
    if freeze_inputs:
        params[problem.input_key] = np.zeros_like(params[problem.input_key])
    targets = np.asarray(targets, dtype=int)
    if targets.shape != (len(params[problem.input_key]),):
        raise ValueError("need exactly one target index per model")
    key, lam = problem.input_key, spec.lam
    B = targets.size

    def penalty(prm):
        return penalty_blocks(spec, problem.to_blocks(prm[key]))

    f, grad = problem.loss_grad(params, targets)
    _ensure_finite(f, grad, 0, targets)
    if observe is not None:
        observe(np.arange(B), grad[key])
    pen = penalty(params)
    traces = [[(0, float(f[b]), float(pen[b]))] for b in range(B)]
    step = np.full(B, float(config.initial_step))
    converged = np.zeros(B, dtype=bool)
    iterations = np.zeros(B, dtype=int)
    active = np.arange(B)

    for it in range(1, config.max_iters + 1):
        if active.size == 0:
            break
        cur, cur_grad = _take(params, active), _take(grad, active)
        cur_f = f[active]
        s = step[active] * (config.growth if it > 1 else 1.0)
        new = {k: np.empty_like(v) for k, v in cur.items()}
        pending = np.arange(active.size)
        for _ in range(config.max_backtracks + 1):
            sp = s[pending]
            x, g = _take(cur, pending), _take(cur_grad, pending)
            shape = (-1,) + (1,) * 3
            cand = {k: x[k] - sp.reshape((-1,) + (1,) * (x[k].ndim - 1)) * g[k] for k in x}
            if freeze_inputs:
                cand[key] = np.zeros_like(cand[key])
            else:
                cand[key] = problem.from_blocks(
                    prox_blocks(spec, problem.to_blocks(cand[key]), (sp * lam).reshape(shape)))
            fc = problem.loss(cand, targets[active[pending]])
            diff = {k: cand[k] - x[k] for k in x}
            lin = sum(np.einsum("bi,bi->b", g[k].reshape(len(sp), -1), diff[k].reshape(len(sp), -1))
                      for k in x)
            quad = _sq_norm(diff)
            fx = cur_f[pending]
            ok = np.isfinite(fc) & (fc <= fx + lin + quad / (2.0 * sp) + 1e-12 * np.abs(fx))
            for k in new:
                new[k][pending[ok]] = cand[k][ok]
            pending = pending[~ok]
            if pending.size == 0:
                break
            s[pending] *= config.backtrack
        else:
            bad = targets[active[pending]].tolist()
            raise LineSearchError(
                f"iteration {it}: line search exhausted {config.max_backtracks} halvings "
                f"for series {bad}")

        new_f, new_grad = problem.loss_grad(new, targets[active])
        _ensure_finite(new_f, new_grad, it, targets[active])
        if observe is not None:
            observe(active, new_grad[key])
        new_pen = penalty(new)
        moved = np.sqrt(_sq_norm({k: new[k] - cur[k] for k in cur}))
        size = np.sqrt(_sq_norm(new))
        for k in params:
            params[k][active] = new[k]
            grad[k][active] = new_grad[k]
        f[active] = new_f
        step[active] = s
        iterations[active] = it
        done = np.zeros(active.size, dtype=bool)
        for a, b in enumerate(active):
            traces[b].append((it, float(new_f[a]), float(new_pen[a])))
            if it >= config.window:
                _, f0, p0 = traces[b][-1 - config.window]
                old, now = f0 + p0, new_f[a] + new_pen[a]
                if old - now <= config.tol * abs(old) and moved[a] <= config.tol * size[a]:
                    done[a] = True
        converged[active[done]] = True
        active = active[~done]

    nets = rebuild(params)
    return [FitResult(nets[b], traces[b], bool(converged[b]), int(iterations[b])) for b in range(B)]


def _ensure_finite(f, grads, it, targets) -> None:
    bad = ~np.isfinite(f)
    for g in grads.values():
        bad |= ~np.all(np.isfinite(g.reshape(g.shape[0], -1)), axis=1)
    if np.any(bad):
        raise FloatingPointError(
            f"non-finite loss or gradient at iteration {it} for series {np.asarray(targets)[bad].tolist()}")


def prox_grad_fit(model, panel, target: int, spec: PenaltySpec,
                  config: FitConfig | None = None, segment_length: int | None = None) -> FitResult:
    """Fit a single componentwise network for output series ``target``."""
    return fit_many([model], panel, [target], spec, config, segment_length)[0]


def objective(model, panel, target: int, spec: PenaltySpec,
              segment_length: int | None = None) -> tuple[float, float]:
    """Smooth squared-error loss and penalty value of one network."""
    problem, params, _ = make_problem([model], panel, segment_length)
    _check_spec(problem, spec)
    smooth = problem.loss(params, np.array([target]))[0]
    pen = penalty_blocks(spec, problem.to_blocks(params[problem.input_key]))[0]
    return float(smooth), float(pen)


def null_start(models) -> list:
    """Copies of ``models`` with every input weight set to zero."""
    out = []
    for m in models:
        prm = m.params()
        key = "first" if isinstance(m, CmlpNet) else "W"
        prm[key] = np.zeros_like(prm[key])
        out.append(m.with_params(prm))
    return out


def _zero_threshold(spec: PenaltySpec, blocks: np.ndarray, floor: np.ndarray) -> np.ndarray:
    """Per-network smallest ``lam`` with ``prox(blocks, lam) == 0``, never below ``floor``.

    GROUP zeroes a group exactly at its Euclidean norm. HIER / MIXED zero it
    at a threshold no larger than that norm; bisect on the prox itself.
    """
    hi = np.sqrt(np.sum(blocks * blocks, axis=(-2, -1))).max(axis=-1)
    if spec.family == "GROUP":
        return np.maximum(hi, floor)
    out = np.array(floor, dtype=np.float64)
    for b in range(blocks.shape[0]):
        if hi[b] <= floor[b] or not np.any(prox_blocks(spec, blocks[b], floor[b]) != 0.0):
            continue
        lo, up = float(floor[b]), float(hi[b])
        for _ in range(200):
            mid = 0.5 * (lo + up)
            if np.any(prox_blocks(spec, blocks[b], mid) != 0.0):
                lo = mid
            else:
                up = mid
            if up - lo <= 1e-14 * up:
                break
        out[b] = up
    return out


def lambda_max(models, panel, targets, spec: PenaltySpec, config: FitConfig | None = None,
               segment_length: int | None = None, problem=None, return_fits: bool = False):
    """Smallest penalty strength at which a fit from :func:`null_start`
    keeps every input group exactly zero.

    A group stays at zero on a step from a null iterate iff
    ``prox(-s * grad, s * lam)`` vanishes, which does not depend on ``s``.
    The other parameters keep moving while the inputs are held at zero, and
    the input gradient moves with them, so the threshold is the maximum over
    the whole input-free trajectory (same line search and stopping rule as
    the real fit) rather than over the first step only. The value carries a
    relative margin of ``LAMBDA_MAX_MARGIN``.

    With ``return_fits`` the input-free fits are returned as well; they are
    exactly the fits at any ``lam >= lambda_max``.
    """
    models = null_start(models)
    if problem is None:
        problem, _, _ = make_problem(models, panel, segment_length)
    _check_spec(problem, spec)
    level = np.zeros(len(models))

    def observe(active, grad):
        level[active] = _zero_threshold(spec, problem.to_blocks(grad), level[active])

    fits = fit_many(models, panel, targets, spec.with_lam(0.0), config, problem=problem,
                    freeze_inputs=True, observe=observe)
    lam = float(level.max()) * (1.0 + LAMBDA_MAX_MARGIN)
    return (lam, fits) if return_fits else lam
