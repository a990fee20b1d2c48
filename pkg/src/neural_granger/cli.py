"""Command-line entry point: ``neural-granger {simulate,fit,sweep,eval,export}``."""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from pathlib import Path

from . import io as nio
from .config import RunConfig, load_config
from .evaluation import compute_lambda_max, fit_all, lambda_sweep, score_sweep
from .granger import GrangerGraph, standardize_graph
from .simulate import LorenzSpec, make_sparse_var, simulate_lorenz96, simulate_var

THREADS_ENV = "NEURAL_GRANGER_THREADS"

log = logging.getLogger("neural_granger")


class CliError(Exception):
    pass


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    try:
        return threadpool_limits(limits=int(value))
    except ValueError:
        raise CliError(f"{THREADS_ENV} must be an integer, got {value!r}") from None


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run configuration (overrides --config)")
    g.add_argument("--config", help="flat key = value configuration file")
    g.add_argument("--model", dest="family", choices=["cmlp", "clstm"])
    g.add_argument("--hidden", type=int, help="hidden units per network")
    g.add_argument("--lag", type=int, help="cMLP maximum lag K")
    g.add_argument("--activation", choices=["tanh", "sigmoid", "linear"])
    g.add_argument("--layers", type=int, help="cMLP hidden layers")
    g.add_argument("--forget-bias", type=float)
    g.add_argument("--segment-length", type=int, help="cLSTM truncation segment length")
    g.add_argument("--penalty", choices=["GROUP", "MIXED", "HIER"], type=str.upper)
    g.add_argument("--alpha", type=float, help="MIXED mixing weight")
    g.add_argument("--lam", type=float, help="penalty strength (fit)")
    g.add_argument("--lam-ratio", type=float, help="penalty as a multiple of lambda_max (fit)")
    g.add_argument("--lambdas", type=lambda s: [float(v) for v in s.split(",")],
                   help="comma-separated decreasing penalty grid (sweep)")
    g.add_argument("--n-lambdas", type=int)
    g.add_argument("--min-ratio", type=float)
    g.add_argument("--max-iters", type=int)
    g.add_argument("--initial-step", type=float)
    g.add_argument("--backtrack", type=float)
    g.add_argument("--growth", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--include-diagonal", action="store_const", const=True, default=None)
    g.add_argument("--no-standardize", dest="standardize", action="store_const", const=False,
                   default=None)


_RUN_KEYS = [f for f in RunConfig.__dataclass_fields__]


def _run_config(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _RUN_KEYS}
    try:
        return load_config(args.config, **overrides)
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid configuration: {exc}") from None


def _load_panel(args):
    path = args.panel
    if args.dream3 or str(path).endswith((".tsv", ".txt")):
        return nio.load_dream3_tsv(path)
    return nio.load_panel_csv(path)


def _prepare(panel, cfg: RunConfig):
    if cfg.standardize:
        panel, mean, scale = panel.standardized()
        return panel, {"mean": mean.tolist(), "scale": scale.tolist()}
    return panel, None


def cmd_simulate(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "lorenz96":
        spec = LorenzSpec(p=args.p, F=args.f, delta_t=args.delta_t, T=args.t,
                          burn_in=args.burn_in if args.burn_in is not None else 100,
                          noise_std=args.noise if args.noise is not None else 0.0,
                          seed=args.seed, replicates=args.replicates)
        panel, truth = simulate_lorenz96(spec)
    else:
        spec = make_sparse_var(args.p, args.lag_order, args.edges_per_row, args.coef,
                               seed=args.seed, T=args.t,
                               noise_std=args.noise if args.noise is not None else 1.0,
                               burn_in=args.burn_in if args.burn_in is not None else 200,
                               replicates=args.replicates)
        panel, truth = simulate_var(spec)
    nio.save_panel_csv(panel, out / "panel.csv")
    nio.save_truth(truth, out / "truth.json")
    print(f"wrote {out / 'panel.csv'} and {out / 'truth.json'}")


def cmd_fit(args) -> None:
    cfg = _run_config(args)
    panel, scaling = _prepare(_load_panel(args), cfg)
    spec = cfg.penalty_spec()
    if cfg.lam_ratio is not None:
        lam = cfg.lam_ratio * compute_lambda_max(panel, cfg.model(), spec, cfg.fit_config())
    elif cfg.lam is not None:
        lam = cfg.lam
    else:
        raise CliError("fit needs --lam or --lam-ratio")
    fits, graph = fit_all(panel, cfg.model(), spec.with_lam(lam), cfg.fit_config())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"lam": lam, "names": panel.names, "scaling": scaling,
            "iterations": [f.iterations for f in fits],
            "converged": [f.converged for f in fits]}
    nio.save_models([f.params for f in fits], out / "models.json", meta)
    nio.export_graph(graph, out / "graph.json")
    print(f"lambda={lam:.6g} edges={int(graph.adjacency.sum())} -> {out / 'graph.json'}")


def cmd_sweep(args) -> None:
    cfg = _run_config(args)
    panel, _ = _prepare(_load_panel(args), cfg)
    truth = nio.load_truth(args.truth) if args.truth else None
    sweep = lambda_sweep(panel, cfg.model(), cfg.penalty_spec(), cfg.lambdas, cfg.fit_config(),
                         truth, cfg.include_diagonal, cfg.n_lambdas, cfg.min_ratio)
    nio.save_sweep(sweep, args.out)
    print(f"{len(sweep.lambdas)} penalty values -> {args.out}")


def cmd_eval(args) -> None:
    sweep = nio.load_sweep(args.sweep)
    truth = nio.load_truth(args.truth) if args.truth else None
    diag = True if args.include_diagonal else None
    curves = score_sweep(sweep, truth, diag)
    nio.save_curves(curves, args.out)
    print(json.dumps({"auroc": curves.auroc, "aupr": curves.aupr}))


def _parse_groups(text: str | None):
    if not text:
        return None
    if os.path.exists(text):
        with open(text) as fh:
            return {k: list(v) for k, v in json.load(fh).items()}
    groups = {}
    for part in text.split(";"):
        label, _, idx = part.partition(":")
        groups[label.strip()] = [int(v) for v in idx.split(",") if v.strip()]
    return groups


def cmd_export(args) -> None:
    if args.sweep:
        sweep = nio.load_sweep(args.sweep)
        graph = sweep.graphs[args.index]
    else:
        graph = nio.import_graph(args.graph)
    if args.standardize or args.groups:
        if not isinstance(graph, GrangerGraph):
            raise CliError("graph is already standardized")
        graph = standardize_graph(graph, _parse_groups(args.groups))
    if args.format == "csv":
        nio.export_graph_csv(graph, args.out)
    else:
        nio.export_graph(graph, args.out)
    print(f"wrote {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neural-granger",
                                     description="Neural Granger causality with structured sparsity")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a panel and its ground-truth graph")
    p.add_argument("--kind", choices=["lorenz96", "var"], default="lorenz96")
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--f", type=float, default=10.0, help="Lorenz-96 forcing")
    p.add_argument("--t", type=int, default=1000, help="samples per replicate")
    p.add_argument("--delta-t", type=float, default=0.05)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--lag-order", type=int, default=3)
    p.add_argument("--edges-per-row", type=int, default=2)
    p.add_argument("--coef", type=float, default=0.096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in [("fit", cmd_fit, "fit all series at one penalty"),
                                 ("sweep", cmd_sweep, "fit along a penalty path")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--panel", required=True)
        p.add_argument("--dream3", action="store_true", help="panel is a DREAM3 TSV file")
        _add_run_flags(p)
        if name == "fit":
            p.add_argument("--out-dir", default=".")
        else:
            p.add_argument("--truth", help="ground-truth graph stored with the sweep")
            p.add_argument("--out", default="sweep.json")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="ROC / PR curves of a sweep")
    p.add_argument("--sweep", required=True)
    p.add_argument("--truth")
    p.add_argument("--include-diagonal", action="store_true")
    p.add_argument("--out", default="curves.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="convert or standardize a stored graph")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph")
    src.add_argument("--sweep")
    p.add_argument("--index", type=int, default=-1, help="sweep graph index")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--groups", help="'label:0,1;label2:2,3' or a JSON file")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            args.func(args)
    except (CliError, ValueError, TypeError, OSError, RuntimeError, KeyError,
            FloatingPointError, IndexError) as exc:
        print(f"neural-granger {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
