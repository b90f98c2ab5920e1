"""Command-line entry point: ``qremainder <subcommand> ...``.

Every subcommand prints (or writes with ``--output``) a CSV/JSON data series.

Exit codes: 0 ok, 1 other package error, 2 usage, 3 domain, 4 budget,
5 tolerance, 6 unsupported model, 7 precision, 8 rejection budget.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .coupling import (
    build_ladder,
    cond_tail_upper_envelope,
    default_depth,
    prob_N_gt,
    sample_coupled_many,
)
from .density_models import DEFAULT_BUDGET
from .errors import EXIT_CODES, BudgetError, DomainError, QRemainderError, UnsupportedModelError
from .gof_stats import DESK_REPLICATIONS, FULL_REPLICATIONS, FULL_SAMPLE_SIZE, GofExperiment, rejection_rate
from .remainder import RemainderLaw
from .reports import DataSeries, RunConfig, _meta, parse_range, reproduce_all, table1, table2
from .specs import parse_model
from .streams import default_threads, make_rng
from .tv_metrics import (
    coupling_tv_bound,
    tv_bound_gradient,
    tv_bound_refined_low_alpha,
    tv_bound_second_order,
    tv_exact,
    wasserstein_bounds,
)

SUBCOMMANDS = ("pdf", "cdf", "tv-curve", "coupling", "sample", "gof", "tables", "reproduce-all")


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise DomainError(f"{cfg.subcommand} needs --{name}")


def _model_q(cfg):
    _require(cfg, "model")
    model = parse_model(cfg.model)
    q = cfg.q
    if q is None:
        q = getattr(model, "q", None) if cfg.model.startswith("benford") else 2
    if q < 2:
        raise DomainError("base q must be at least 2")
    return model, q


def _run_density(cfg, cumulative):
    model, q = _model_q(cfg)
    n = int(cfg.n or 0)
    grid = cfg.grid or 101
    if grid < 2:
        raise DomainError("grid must have at least two points")
    law = RemainderLaw(model, q, n)
    if cumulative:
        x = np.linspace(0.0, 1.0, grid)
        y, label = law.cdf(x), "F_n"
    else:
        x = (np.arange(grid) + 0.5) / grid
        y, label = law.pdf(x), "f_n"
    return DataSeries(cfg.subcommand, ["x", label], list(zip(x, np.atleast_1d(y))),
                      _meta(model=model.spec, q=q, n=n, seed=cfg.seed))


def _maybe(fn):
    try:
        return float(fn())
    except (UnsupportedModelError, DomainError, BudgetError):
        return None


def _run_tv_curve(cfg):
    model, q = _model_q(cfg)
    ns = parse_range(cfg.n if cfg.n is not None else "0..10")
    ladder = None
    depth = cfg.depth if cfg.depth is not None else max(ns)
    try:
        if q**depth <= DEFAULT_BUDGET:
            ladder = build_ladder(model, q, depth)
    except UnsupportedModelError:
        ladder = None
    rows = []
    for n in ns:
        exact, _ = tv_exact(model, q, n, tol=cfg.tol or 1e-10)
        in_ladder = ladder is not None and n <= ladder.depth
        rows.append((
            n,
            exact,
            _maybe(lambda: tv_bound_gradient(model, q, n)),
            _maybe(lambda: tv_bound_gradient(model, q, n, per_cell=True)),
            _maybe(lambda: tv_bound_second_order(model, q, n).leading),
            coupling_tv_bound(ladder, n) if in_ladder else None,
            _maybe(lambda: tv_bound_refined_low_alpha(model, q, n)),
            wasserstein_bounds(ladder, n)[1] if in_ladder else None,
        ))
    cols = ["n", "exact", "bound_gradient_global", "bound_gradient_percell", "bound_second_order",
            "bound_coupling", "bound_refined", "w1_quarter"]
    return DataSeries("tv-curve", cols, rows,
                      _meta(model=model.spec, q=q, n=f"{min(ns)}..{max(ns)}", tol=cfg.tol or 1e-10,
                            second_order="leading term, midpoint rule"))


def _run_coupling(cfg):
    model, q = _model_q(cfg)
    depth = cfg.depth if cfg.depth is not None else default_depth(q)
    ladder = build_ladder(model, q, depth)
    meta = dict(model=model.spec, q=q, depth=depth, seed=cfg.seed)
    if cfg.count is not None:
        draws = sample_coupled_many(ladder, cfg.count, make_rng(cfg.seed))
        return DataSeries("coupling-sample", ["x", "N"], list(zip(draws.x, draws.n)),
                          _meta(**meta, overflow_marker=-1))
    if cfg.envelope is not None:
        env = cond_tail_upper_envelope(ladder, cfg.envelope)
        return DataSeries("coupling-envelope", ["x", "envelope"],
                          list(zip(env.knots_x, env.knots_y)), _meta(**meta, n=cfg.envelope))
    rows = [(n, prob_N_gt(ladder, n)) for n in range(depth + 1)]
    return DataSeries("coupling-tail", ["n", "prob_N_gt"], rows, _meta(**meta))


def _run_sample(cfg):
    model, _ = _model_q(cfg)
    count = cfg.count or cfg.samples or 1000
    x = np.ravel(model.sample(count, make_rng(cfg.seed)))
    return DataSeries("sample", ["x"], [(v,) for v in x],
                      _meta(model=model.spec, seed=cfg.seed, method="inverse cdf"))


def _reps(cfg):
    if cfg.reps is not None:
        return cfg.reps
    return FULL_REPLICATIONS if cfg.full else DESK_REPLICATIONS


def _run_gof(cfg):
    model, q = _model_q(cfg)
    exp = GofExperiment(model, q, int(cfg.n or 1), cfg.k or 1, cfg.samples or FULL_SAMPLE_SIZE,
                        _reps(cfg), cfg.alpha or 0.05, cfg.seed)
    res = rejection_rate(exp, cfg.threads)
    cols = ["n", "k", "rejection_rate", "standard_error", "rejections", "replications",
            "stat_mean", "stat_sd", "p_mean"]
    row = (exp.n, exp.k, res.rejection_rate, res.standard_error, res.rejections,
           res.replications, res.stat_mean, res.stat_sd, res.p_mean)
    return DataSeries("gof", cols, [row],
                      _meta(model=model.spec, q=q, n=exp.n, k=exp.k, seed=exp.seed,
                            sample_size=exp.sample_size, alpha=exp.alpha))


def _run_tables(cfg):
    which = cfg.table or 1
    reps = _reps(cfg)
    q = cfg.q or 2
    if which == 1:
        return table1(cfg.seed, reps, cfg.samples or FULL_SAMPLE_SIZE, q, cfg.threads)
    if which == 2:
        return table2(cfg.seed, reps, cfg.samples or FULL_SAMPLE_SIZE, q, cfg.threads)
    raise DomainError("--table must be 1 or 2")


def run(cfg):
    """Dispatch one configuration; returns a DataSeries, or None for reproduce-all."""
    if cfg.subcommand == "pdf":
        return _run_density(cfg, cumulative=False)
    if cfg.subcommand == "cdf":
        return _run_density(cfg, cumulative=True)
    if cfg.subcommand == "tv-curve":
        return _run_tv_curve(cfg)
    if cfg.subcommand == "coupling":
        return _run_coupling(cfg)
    if cfg.subcommand == "sample":
        return _run_sample(cfg)
    if cfg.subcommand == "gof":
        return _run_gof(cfg)
    if cfg.subcommand == "tables":
        return _run_tables(cfg)
    if cfg.subcommand == "reproduce-all":
        reproduce_all(cfg.output or "results", cfg.seed, cfg.full, cfg.threads)
        return None
    raise DomainError(f"unknown subcommand {cfg.subcommand!r}")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON RunConfig; explicit flags override it")
    common.add_argument("--model", help="model spec, e.g. benford:q=10 or power:alpha=0.5")
    common.add_argument("--q", type=int, help="base (default: model base, else 2)")
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o", help="output file (directory for reproduce-all)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int,
                        help="worker threads (default from QREMAINDER_THREADS or 1)")

    p = argparse.ArgumentParser(prog="qremainder", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    for name in ("pdf", "cdf"):
        s = sub.add_parser(name, parents=[common], help=f"remainder {name.upper()} on a grid")
        s.add_argument("--n", help="depth")
        s.add_argument("--grid", type=int)

    s = sub.add_parser("tv-curve", parents=[common], help="exact TV distance and bounds over n")
    s.add_argument("--n", help="range such as 0..10")
    s.add_argument("--depth", type=int, help="ladder depth for the coupling bound")
    s.add_argument("--tol", type=float)

    s = sub.add_parser("coupling", parents=[common], help="stopping-depth tail, envelope or samples")
    s.add_argument("--depth", type=int)
    s.add_argument("--tail", action="store_true", default=None, help="emit n, P(N>n) (default)")
    s.add_argument("--envelope", type=int, metavar="N")
    s.add_argument("--sample", type=int, dest="count", metavar="COUNT")

    s = sub.add_parser("sample", parents=[common], help="inverse-CDF samples from a model")
    s.add_argument("--count", type=int)

    s = sub.add_parser("gof", parents=[common], help="chi-square rejection rate")
    s.add_argument("--n")
    s.add_argument("--k", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--full", action="store_true", default=None)

    s = sub.add_parser("tables", parents=[common], help="Table-shaped rejection rates with SE column")
    s.add_argument("--table", type=int, choices=(1, 2))
    s.add_argument("--samples", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--full", action="store_true", default=None)

    s = sub.add_parser("reproduce-all", parents=[common], help="write every figure/table dataset")
    s.add_argument("--full", action="store_true", default=None)
    return p


def build_config(args):
    data = {}
    if args.config:
        try:
            data = RunConfig.from_json(Path(args.config).read_text()).to_dict()
        except OSError as exc:
            raise DomainError(f"cannot read config: {exc}") from None
    data["subcommand"] = args.subcommand
    for key, value in vars(args).items():
        if key in ("config", "subcommand") or value is None:
            continue
        data[key] = value
    return RunConfig.from_dict(data)


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CODES["usage"] if exc.code else 0
    try:
        cfg = build_config(args)
        if cfg.threads is None:
            cfg.threads = default_threads()
        series = run(cfg)
    except QRemainderError as exc:
        print(f"qremainder: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"qremainder: error: {exc}", file=sys.stderr)
        return EXIT_CODES["domain"]
    if series is not None:
        text = series.to_json() if cfg.format == "json" else series.to_csv()
        if cfg.output:
            Path(cfg.output).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
