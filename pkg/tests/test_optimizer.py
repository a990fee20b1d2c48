import numpy as np
import pytest

from neural_granger.clstm import ClstmNet, clstm_forward
from neural_granger.cmlp import CmlpNet, cmlp_predict
from neural_granger.optimizer import (FitConfig, LineSearchError, fit_many, lambda_max,
                                      make_problem, null_start, objective, prox_grad_fit,
                                      stack_models)
from neural_granger.panel import TimeSeriesPanel
from neural_granger.penalties import InputGroupView, PenaltySpec, penalty_value

SHORT = FitConfig(max_iters=150)


def totals(fit):
    return np.array([s + p for _, s, p in fit.trace])


@pytest.mark.parametrize("family,penalty", [("cmlp", "GROUP"), ("cmlp", "HIER"),
                                            ("cmlp", "MIXED"), ("clstm", "GROUP")])
def test_objective_trace_nonincreasing(small_lorenz, family, penalty):
    panel, _ = small_lorenz
    net = CmlpNet.init(panel.p, 3, 6, seed=1) if family == "cmlp" else ClstmNet.init(panel.p, 4, seed=1)
    fit = prox_grad_fit(net, panel, 2, PenaltySpec(penalty, 2.0), SHORT)
    obj = totals(fit)
    assert np.all(np.diff(obj) <= 1e-10 * np.abs(obj[:-1]))
    assert obj[-1] < obj[0]


@pytest.mark.parametrize("penalty", ["GROUP", "HIER", "MIXED"])
def test_exact_zeros_above_lambda_max_cmlp(small_lorenz, penalty):
    panel, _ = small_lorenz
    nets = null_start([CmlpNet.init(panel.p, 3, 6, seed=0, stream=i) for i in range(panel.p)])
    spec = PenaltySpec(penalty)
    lam = lambda_max(nets, panel, np.arange(panel.p), spec, SHORT)
    for mult in (1.0, 3.0):
        for i in (0, 4):
            fit = prox_grad_fit(nets[i], panel, i, spec.with_lam(mult * lam), SHORT)
            assert np.all(fit.params.first == 0.0)
            preds = np.concatenate(cmlp_predict(fit.params, panel))
            assert np.all(preds == preds[0])


def test_exact_zeros_above_lambda_max_clstm(small_lorenz, rng):
    panel, _ = small_lorenz
    nets = null_start([ClstmNet.init(panel.p, 3, seed=0, stream=i) for i in range(2)])
    spec = PenaltySpec("GROUP")
    lam = lambda_max(nets, panel, [0, 1], spec, SHORT)
    fits = fit_many(nets, panel, [0, 1], spec.with_lam(lam), SHORT)
    x = panel.replicates[0]
    for fit in fits:
        assert np.all(fit.params.W == 0.0)
        noise = rng.standard_normal(x.shape)
        assert np.array_equal(clstm_forward(fit.params, x), clstm_forward(fit.params, noise))


def test_below_lambda_max_something_survives(small_lorenz):
    panel, _ = small_lorenz
    nets = null_start([CmlpNet.init(panel.p, 3, 6, seed=0, stream=i) for i in range(panel.p)])
    spec = PenaltySpec("GROUP")
    lam = lambda_max(nets, panel, np.arange(panel.p), spec, SHORT)
    fits = fit_many(nets, panel, np.arange(panel.p), spec.with_lam(0.5 * lam), SHORT)
    assert any(np.any(f.params.first != 0.0) for f in fits)


def test_convex_toy_reaches_least_squares():
    rng = np.random.default_rng(0)
    x = np.zeros(200)
    for t in range(1, 200):
        x[t] = 0.3 + 0.6 * x[t - 1] - 0.2 * (x[t - 2] if t > 1 else 0.0) + rng.standard_normal()
    panel = TimeSeriesPanel([x[:, None]])
    K = 2
    design = np.column_stack([x[K - 1:-1], x[K - 2:-2], np.ones(len(x) - K)])
    coef, *_ = np.linalg.lstsq(design, x[K:], rcond=None)
    best = float(np.sum((x[K:] - design @ coef) ** 2))
    net = CmlpNet.init(1, K, 1, activation="linear", seed=3)
    fit = prox_grad_fit(net, panel, 0, PenaltySpec("GROUP", 0.0),
                        FitConfig(max_iters=20000, tol=1e-13))
    assert fit.objective - best <= 1e-6
    assert fit.objective >= best - 1e-9


def test_objective_hand_computed():
    x = np.array([[0.5, -1.0], [1.0, 0.0], [-0.5, 2.0], [0.0, 1.0], [2.0, -0.5]])
    net = CmlpNet(np.array([[[0.4, -0.3]]]), np.zeros((0, 1, 1)), np.array([[0.1]]),
                  np.array([1.5]))
    spec = PenaltySpec("GROUP", 0.7)
    smooth, pen = objective(net, TimeSeriesPanel([x]), 1, spec)
    expect = sum((x[t, 1] - 1.5 * np.tanh(0.4 * x[t - 1, 0] - 0.3 * x[t - 1, 1] + 0.1)) ** 2
                 for t in range(1, 5))
    assert smooth == pytest.approx(expect, abs=1e-10)
    assert pen == pytest.approx(0.7 * (0.4 + 0.3), abs=1e-12)
    assert pen == pytest.approx(penalty_value(spec, InputGroupView.of(net)), abs=1e-15)


def test_objective_trivial_cases(small_lorenz):
    zero_panel = TimeSeriesPanel([np.zeros((8, 2))])
    assert objective(CmlpNet.zeros(2, 2, 3), zero_panel, 0, PenaltySpec("HIER", 5.0)) == (0.0, 0.0)
    panel, _ = small_lorenz
    assert objective(CmlpNet.init(panel.p, 2, 3), panel, 0, PenaltySpec("HIER", 0.0))[1] == 0.0
    with pytest.raises(ValueError):
        objective(ClstmNet.init(2, 2), zero_panel, 0, PenaltySpec("HIER", 1.0))


def test_batched_fit_matches_single_fits(small_lorenz):
    panel, _ = small_lorenz
    nets = [CmlpNet.init(panel.p, 2, 4, seed=5, stream=i) for i in range(3)]
    spec, cfg = PenaltySpec("HIER", 3.0), FitConfig(max_iters=40)
    batched = fit_many(nets, panel, [0, 1, 2], spec, cfg)
    for i, net in enumerate(nets):
        single = prox_grad_fit(net, panel, i, spec, cfg)
        assert single.iterations == batched[i].iterations
        assert np.allclose(single.params.first, batched[i].params.first, rtol=1e-9, atol=1e-12)


def test_inputs_not_modified(small_lorenz):
    panel, _ = small_lorenz
    net = CmlpNet.init(panel.p, 2, 3, seed=0)
    before = net.copy()
    prox_grad_fit(net, panel, 0, PenaltySpec("GROUP", 1.0), FitConfig(max_iters=5))
    assert np.array_equal(net.first, before.first) and np.array_equal(net.output, before.output)


def test_convergence_flag(small_lorenz):
    panel, _ = small_lorenz
    net = null_start([CmlpNet.init(panel.p, 2, 3, seed=0)])[0]
    fit = prox_grad_fit(net, panel, 0, PenaltySpec("GROUP", 1e6), FitConfig(max_iters=500))
    assert fit.converged and fit.iterations < 500
    zero_iter = prox_grad_fit(net, panel, 0, PenaltySpec("GROUP", 1.0), FitConfig(max_iters=0))
    assert zero_iter.iterations == 0 and len(zero_iter.trace) == 1


def test_line_search_exhaustion(small_lorenz):
    panel, _ = small_lorenz
    net = CmlpNet.init(panel.p, 2, 3, seed=0)
    cfg = FitConfig(max_iters=5, initial_step=1e8, max_backtracks=2)
    with pytest.raises(LineSearchError, match="iteration 1"):
        prox_grad_fit(net, panel, 0, PenaltySpec("GROUP", 1.0), cfg)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_reports_iteration():
    panel = TimeSeriesPanel([np.full((10, 2), 1e200)])
    with pytest.raises(FloatingPointError, match="iteration 0"):
        prox_grad_fit(CmlpNet.init(2, 2, 3, activation="linear"), panel, 0, PenaltySpec("GROUP", 1.0))


def test_clstm_rejects_structured_penalties(small_lorenz):
    panel, _ = small_lorenz
    with pytest.raises(ValueError):
        prox_grad_fit(ClstmNet.init(panel.p, 2), panel, 0, PenaltySpec("HIER", 1.0), SHORT)


def test_fit_config_validation():
    for bad in [dict(max_iters=-1), dict(initial_step=0.0), dict(backtrack=1.0),
                dict(growth=0.5), dict(tol=-1.0), dict(window=0)]:
        with pytest.raises(ValueError):
            FitConfig(**bad)


def test_stack_models_checks():
    with pytest.raises(ValueError):
        stack_models([])
    with pytest.raises(TypeError):
        stack_models([CmlpNet.init(2, 1, 2), ClstmNet.init(2, 2)])
    with pytest.raises(ValueError):
        stack_models([CmlpNet.init(2, 1, 2), CmlpNet.init(2, 2, 2)])
    with pytest.raises(TypeError):
        stack_models(["net"])
    problem, params, rebuild = make_problem([ClstmNet.init(2, 2)], TimeSeriesPanel([np.zeros((5, 2))]))
    assert params["W"].shape == (1, 8, 2) and isinstance(rebuild(params)[0], ClstmNet)


def test_target_count_must_match(small_lorenz):
    panel, _ = small_lorenz
    with pytest.raises(ValueError):
        fit_many([CmlpNet.init(panel.p, 1, 2)], panel, [0, 1], PenaltySpec("GROUP", 1.0), SHORT)


def test_lambda_max_is_tight(small_lorenz):
    """Just below the threshold some group leaves zero at some iterate."""
    panel, _ = small_lorenz
    nets = null_start([CmlpNet.init(panel.p, 3, 4, seed=2, stream=i) for i in range(panel.p)])
    spec = PenaltySpec("HIER")
    lam, fits = lambda_max(nets, panel, np.arange(panel.p), spec, SHORT, return_fits=True)
    assert all(np.all(f.params.first == 0.0) for f in fits)
    below = fit_many(nets, panel, np.arange(panel.p), spec.with_lam(0.999 * lam), SHORT)
    assert any(pen > 0 for f in below for _, _, pen in f.trace)
