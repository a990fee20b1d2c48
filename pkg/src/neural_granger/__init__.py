"""Neural Granger causality: componentwise MLP / LSTM networks with
structured group-sparsity penalties on their input weights."""

from .clstm import ClstmNet, clstm_forward, clstm_grad, clstm_loss, segment_panel, segment_series
from .cmlp import CmlpNet, cmlp_forward, cmlp_grad, cmlp_loss, cmlp_predict
from .config import RunConfig, load_config
from .evaluation import (CurveSummary, ModelConfig, SweepResult, compute_lambda_max,
                         default_lambda_grid, edge_scores, fit_all, lambda_sweep, null_models,
                         roc_pr_curves, score_sweep)
from .granger import GrangerGraph, StandardizedGraph, extract_graph, standardize_graph
from .io import (FormatError, export_graph, import_graph, load_dream3_tsv, load_panel_csv,
                 save_panel_csv)
from .nn_core import finite_diff_grad, init_params
from .optimizer import (FitConfig, FitResult, LineSearchError, fit_many, lambda_max, null_start,
                        objective, prox_grad_fit)
from .panel import TimeSeriesPanel
from .penalties import (InputGroupView, PenaltySpec, group_norms, penalty_value, prox, prox_group,
                        prox_hier, prox_mixed)
from .simulate import (LorenzSpec, VarSpec, make_sparse_var, simulate_lorenz96, simulate_var,
                       spectral_radius)

__version__ = "0.1.0"

__all__ = [
    "ClstmNet", "CmlpNet", "CurveSummary", "FitConfig", "FitResult", "FormatError",
    "GrangerGraph", "InputGroupView", "LineSearchError", "LorenzSpec", "ModelConfig",
    "PenaltySpec", "RunConfig", "StandardizedGraph", "SweepResult", "TimeSeriesPanel",
    "VarSpec", "clstm_forward", "clstm_grad", "clstm_loss", "cmlp_forward", "cmlp_grad",
    "cmlp_loss", "cmlp_predict", "compute_lambda_max", "default_lambda_grid", "edge_scores",
    "export_graph", "extract_graph", "finite_diff_grad", "fit_all", "fit_many", "group_norms",
    "import_graph", "init_params", "lambda_max", "lambda_sweep", "load_config",
    "load_dream3_tsv", "load_panel_csv", "make_sparse_var", "null_models", "null_start",
    "objective", "penalty_value", "prox", "prox_grad_fit", "prox_group", "prox_hier",
    "prox_mixed", "roc_pr_curves", "save_panel_csv", "score_sweep", "segment_panel",
    "segment_series", "simulate_lorenz96", "simulate_var", "spectral_radius",
    "standardize_graph",
]
