"""``ctmpfit`` command line: generate-graph, simulate, estimate, enumerate-classes, experiment.

Exit codes: 0 success, 1 usage, 2 data/format error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import graph as graphs
from .dynamics import Model, ModelParams, config_from_bits
from .estimate import (ESTIMATORS, METHODS, EstimationError, SolverError, UnderdeterminedError,
                       estimate_theta)
from .experiment import (CENSUS_COLUMNS, SUMMARY_COLUMNS, ExperimentConfig, run_census,
                         run_experiment, to_csv)
from .graph import GraphError
from .simulate import (SimulationError, TrajectoryFormatError, random_initial, read_trajectory,
                       simulate, write_trajectory)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(choices):
    def parse(text):
        items = [t.strip().lower() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(choices)}")
        return items
    return parse


def _load_graph(args) -> graphs.Graph:
    if args.graph == "ieee118":
        return graphs.ieee118()
    return graphs.load_edgelist(args.graph)


def cmd_generate_graph(args):
    if args.complete is not None:
        g = graphs.generate_complete(args.complete)
        desc = f"complete n={args.complete}"
    elif args.path is not None:
        g = graphs.generate_path(args.path)
        desc = f"path n={args.path}"
    elif args.star is not None:
        g = graphs.generate_star(args.star)
        desc = f"star n={args.star}"
    elif args.er is not None:
        if args.p is None:
            raise UsageError("--er needs --p")
        g = graphs.generate_er(args.er, args.p, seed=args.seed, require_connected=args.connected)
        desc = f"er n={args.er} p={args.p} seed={args.seed} connected={args.connected}"
    else:
        if args.nei is None or args.rewire is None:
            raise UsageError("--ws needs --nei and --rewire")
        g = graphs.generate_ws(args.ws, args.nei, args.rewire, seed=args.seed)
        desc = f"ws n={args.ws} nei={args.nei} rewire={args.rewire} seed={args.seed}"
    graphs.write_edgelist(g, args.output, comment=desc)
    print(f"n={g.n} edges={g.num_edges} dmax={g.max_degree}")
    return 0


def cmd_simulate(args):
    g = _load_graph(args)
    params = ModelParams(args.model, args.mu, args.beta, args.delta)
    if args.initial:
        x0 = config_from_bits(args.initial)
        if x0.size != g.n or x0.max(initial=0) > 1:
            raise GraphError(f"--initial must be a {g.n}-character 0/1 string")
    else:
        x0 = random_initial(g.n, np.random.default_rng([args.seed, 1]))
    tr = simulate(g, params, x0, max_events=args.events, max_time=args.time, seed=args.seed)
    write_trajectory(tr, args.output)
    print(f"events={tr.num_events} t_end={tr.t_end!r} absorbed={tr.absorbed}")
    return 0


def _estimate_record(est, args, tr, g):
    rec = {"method": est.method, "estimator": est.estimator, "model": est.model.value,
           "n": g.n, "rows": est.diagnostics["rows"], "cols": est.diagnostics["cols"],
           "rank": est.diagnostics["rank"]}
    for k, v in enumerate(est.theta):
        rec[f"theta_{k}"] = float(v)
    rec.update(mu_hat=est.mu_hat, beta_hat=est.beta_hat, delta_hat=est.delta_hat,
               residual_norm=est.residual_norm,
               dropped_classes=est.diagnostics["dropped_classes"],
               seed="" if tr.seed is None else tr.seed, status="ok")
    if not est.diagnostics.get("converged", True):
        rec["status"] = "not_converged"
    return rec


def cmd_estimate(args):
    g = _load_graph(args)
    tr = read_trajectory(args.trajectory)
    tr.validate(g)
    model = Model.parse(args.model) if args.model else tr.model
    dmax = g.max_degree
    width = 3 if model is Model.CONTACT else dmax + 2
    columns = (["method", "estimator", "model", "n", "rows", "cols", "rank"]
               + [f"theta_{k}" for k in range(width)]
               + ["mu_hat", "beta_hat", "delta_hat", "residual_norm", "dropped_classes", "seed", "status"])
    rows = []
    failed = False
    for method in args.methods:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                est = estimate_theta(tr, g, model, args.estimator, method, n_min=args.n_min)
            rows.append(_estimate_record(est, args, tr, g))
        except (EstimationError, SolverError) as exc:
            failed = True
            rec = {c: "" for c in columns}
            rec.update(method=method, estimator=args.estimator, model=model.value, n=g.n, cols=width,
                       seed="" if tr.seed is None else tr.seed,
                       status=("underdetermined: " if isinstance(exc, UnderdeterminedError) else "error: ") + str(exc))
            for k in range(width):
                rec[f"theta_{k}"] = math.nan
            rows.append(rec)
    sys.stdout.write(to_csv(rows, columns))
    if failed:
        print("estimation failed for at least one method", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def cmd_enumerate_classes(args):
    ns = range(args.n_min, args.n_max + 1)
    rows = run_census(ns, args.family, args.model, count=args.graphs, seed=args.seed)
    text = to_csv(rows, CENSUS_COLUMNS)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args):
    cfg = ExperimentConfig.from_file(args.config)
    _, summary = run_experiment(cfg, outdir=args.output, workers=args.workers)
    sys.stdout.write(to_csv(summary, SUMMARY_COLUMNS))
    return 0


def build_parser():
    p = _Parser(prog="ctmpfit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gg = sub.add_parser("generate-graph", help="write a graph as an edge list")
    kind = gg.add_mutually_exclusive_group(required=True)
    kind.add_argument("--complete", type=int, metavar="N")
    kind.add_argument("--path", type=int, metavar="N")
    kind.add_argument("--star", type=int, metavar="N")
    kind.add_argument("--er", type=int, metavar="N", help="Erdos-Renyi on N nodes (needs --p)")
    kind.add_argument("--ws", type=int, metavar="N", help="Watts-Strogatz on N nodes (needs --nei, --rewire)")
    gg.add_argument("--p", type=float, help="ER edge probability")
    gg.add_argument("--connected", action="store_true", help="resample ER until connected")
    gg.add_argument("--nei", type=int, help="WS neighbours per side")
    gg.add_argument("--rewire", type=float, help="WS rewiring probability")
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("-o", "--output", required=True)
    gg.set_defaults(func=cmd_generate_graph)

    sm = sub.add_parser("simulate", help="simulate one trajectory")
    sm.add_argument("--graph", required=True, help="edge-list file or 'ieee118'")
    sm.add_argument("--model", choices=[m.value for m in Model], default="contact")
    sm.add_argument("--mu", type=float, required=True)
    sm.add_argument("--beta", type=float, required=True)
    sm.add_argument("--delta", type=float, required=True)
    stop = sm.add_argument_group("stop criterion (at least one)")
    stop.add_argument("--events", type=int, metavar="LENGTH", help="trajectory length in observed states")
    stop.add_argument("--time", type=float, metavar="HORIZON", help="observation horizon")
    sm.add_argument("--initial", help="initial configuration as a 0/1 string (default: random)")
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("-o", "--output", required=True)
    sm.set_defaults(func=cmd_simulate)

    es = sub.add_parser("estimate", help="estimate theta from a trajectory, CSV on stdout")
    es.add_argument("--graph", required=True, help="edge-list file or 'ieee118'")
    es.add_argument("--trajectory", required=True)
    es.add_argument("--model", choices=[m.value for m in Model], help="default: the trajectory's model")
    es.add_argument("--estimator", choices=ESTIMATORS, default="mle")
    es.add_argument("--methods", type=_csv_list(METHODS), default=list(METHODS))
    es.add_argument("--n-min", type=int, default=1, help="minimum departures for a class to be kept")
    es.set_defaults(func=cmd_estimate)

    ec = sub.add_parser("enumerate-classes", help="exact holding-class census on random graphs")
    ec.add_argument("--n-min", type=int, default=4)
    ec.add_argument("--n-max", type=int, default=14)
    ec.add_argument("--family", type=_csv_list(("er", "ws", "complete")), default=["er", "ws"])
    ec.add_argument("--model", type=_csv_list(("contact", "reversible")), default=["contact", "reversible"])
    ec.add_argument("--graphs", type=int, default=50, help="random graphs per (n, family)")
    ec.add_argument("--seed", type=int, default=0)
    ec.add_argument("-o", "--output")
    ec.set_defaults(func=cmd_enumerate_classes)

    ex = sub.add_parser("experiment", help="run a replicated estimation experiment from a config file")
    ex.add_argument("config")
    ex.add_argument("-o", "--output", help="output directory (default: config 'output')")
    ex.add_argument("--workers", type=int)
    ex.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate" and args.events is None and args.time is None:
            raise UsageError("simulate needs --events and/or --time")
        return args.func(args)
    except UsageError as exc:
        print(f"ctmpfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, TrajectoryFormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"ctmpfit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SimulationError, EstimationError, SolverError, np.linalg.LinAlgError) as exc:
        print(f"ctmpfit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ctmpfit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
