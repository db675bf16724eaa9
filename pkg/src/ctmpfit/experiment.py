"""Experiment harness: replicated simulate-and-estimate runs and holding-class censuses.

A replication draws (graph, theta, x0) from its own seed, simulates one
trajectory of the longest requested length and estimates theta from each
prefix length with every requested method. Output is tidy CSV, one row per
(replication, length, method, parameter).
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
import io
import math
from pathlib import Path
import warnings

import numpy as np

from . import graph as graphs
from .bounds import enumerate_classes
from .dynamics import Model, ModelParams, config_from_bits
from .estimate import EstimationError, SolverError, estimate_theta
from .metrics import summarize
from .simulate import SimulationError, random_initial, simulate

PARAMETERS = ("mu", "beta", "delta")

RAW_COLUMNS = ["replication", "seed", "graph", "n", "edges", "dmax", "length", "events", "t_end",
               "method", "estimator", "parameter", "true", "estimate", "abs_error", "status"]
SUMMARY_COLUMNS = ["length", "method", "parameter", "count", "mae", "smape", "std", "failures"]
CENSUS_COLUMNS = ["n", "model", "family", "graph_index", "p", "nei", "rewire", "edges", "dmax",
                  "k_exact", "k_bound", "k_bound_global", "ratio"]


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv):
    def parse(text):
        return [conv(tok.strip()) for tok in str(text).split(",") if tok.strip()]
    return parse


@dataclass
class ExperimentConfig:
    """Flat key/value experiment description.

    ``graph`` is one of ``er``, ``ws``, ``complete``, ``path``, ``star``,
    ``edgelist`` (needs ``edgelist``) or ``ieee118``. Random graphs are
    redrawn for each replication.
    """

    model: str = "contact"
    graph: str = "er"
    n: int = 100
    er_p: float = 0.05
    er_connected: bool = True
    ws_nei: int = 2
    ws_rewire: float = 0.5
    edgelist: str = ""
    replications: int = 50
    lengths: list = field(default_factory=lambda: [1000, 10000, 100000])
    theta_low: float = 0.0
    theta_high: float = 3.0
    theta: list = field(default_factory=list)
    initial: str = "random"
    estimator: str = "mle"
    methods: list = field(default_factory=lambda: ["wls", "nnls", "lad"])
    seed: int = 0
    workers: int = 1
    output: str = "results"

    _parsers = {
        "er_connected": _bool,
        "lengths": _list(int),
        "theta": _list(float),
        "methods": _list(str),
    }

    def __post_init__(self):
        self.model = Model.parse(self.model).value
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.lengths or min(self.lengths) < 2:
            raise ValueError("every trajectory length must be >= 2")
        if self.theta and len(self.theta) != 3:
            raise ValueError("theta must list mu, beta, delta")
        if not self.theta and not 0 <= self.theta_low <= self.theta_high:
            raise ValueError("need 0 <= theta_low <= theta_high")
        bad = set(self.methods) - {"wls", "nnls", "lad"}
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.graph not in ("er", "ws", "complete", "path", "star", "edgelist", "ieee118"):
            raise ValueError(f"unknown graph kind {self.graph!r}")
        if self.graph == "edgelist" and not self.edgelist:
            raise ValueError("graph = edgelist needs an edgelist path")

    @classmethod
    def from_text(cls, text: str, base_dir=None) -> "ExperimentConfig":
        kinds = {f.name: f.type for f in fields(cls) if not f.name.startswith("_")}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in kinds:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            conv = cls._parsers.get(key) or {"int": int, "float": float, "str": str}[kinds[key]]
            try:
                kw[key] = conv(value)
            except ValueError as exc:
                raise ValueError(f"config line {lineno}: {exc}") from None
        cfg = cls(**kw)
        if base_dir is not None and cfg.edgelist and not Path(cfg.edgelist).is_absolute():
            cfg.edgelist = str(Path(base_dir) / cfg.edgelist)
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_text(path.read_text(), base_dir=path.parent)


def replication_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, dtype=np.uint64)[0] >> 1)


def make_graph(cfg: ExperimentConfig, rng) -> graphs.Graph:
    kind = cfg.graph
    if kind == "er":
        return graphs.generate_er(cfg.n, cfg.er_p, seed=int(rng.integers(2**63)),
                                  require_connected=cfg.er_connected)
    if kind == "ws":
        return graphs.generate_ws(cfg.n, cfg.ws_nei, cfg.ws_rewire, seed=int(rng.integers(2**63)))
    if kind == "complete":
        return graphs.generate_complete(cfg.n)
    if kind == "path":
        return graphs.generate_path(cfg.n)
    if kind == "star":
        return graphs.generate_star(cfg.n)
    if kind == "ieee118":
        return graphs.ieee118()
    return graphs.load_edgelist(cfg.edgelist)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def run_replication(cfg: ExperimentConfig, index: int) -> list[dict]:
    seed = replication_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    g = make_graph(cfg, rng)
    model = Model.parse(cfg.model)
    if cfg.theta:
        mu, beta, delta = cfg.theta
    else:
        mu, beta, delta = rng.uniform(cfg.theta_low, cfg.theta_high, 3)
    params = ModelParams(model, float(mu), float(beta), float(delta))
    truth = dict(zip(PARAMETERS, (params.mu, params.beta, params.delta)))
    if cfg.initial == "random":
        x0 = random_initial(g.n, rng)
    else:
        x0 = config_from_bits(cfg.initial)
    sim_seed = int(rng.integers(2**63))
    base = {"replication": index, "seed": seed, "graph": g.fingerprint(), "n": g.n,
            "edges": g.num_edges, "dmax": g.max_degree}
    rows = []
    try:
        full = simulate(g, params, x0, max_events=max(cfg.lengths), seed=sim_seed)
    except SimulationError as exc:
        for length in cfg.lengths:
            for method in cfg.methods:
                for name in PARAMETERS:
                    rows.append({**base, "length": length, "events": 0, "t_end": 0.0, "method": method,
                                 "estimator": cfg.estimator, "parameter": name, "true": truth[name],
                                 "estimate": math.nan, "abs_error": math.nan,
                                 "status": f"simulation: {exc}"})
        return rows
    for length in cfg.lengths:
        tr = full.prefix(length)
        for method in cfg.methods:
            status = "ok"
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    est = estimate_theta(tr, g, model, cfg.estimator, method)
                values = dict(zip(PARAMETERS, est.recovered()))
                if not est.diagnostics.get("converged", True):
                    status = "ok:not_converged"
            except (EstimationError, SolverError, np.linalg.LinAlgError) as exc:
                values = dict.fromkeys(PARAMETERS, math.nan)
                status = f"error: {exc}"
            for name in PARAMETERS:
                val = float(values[name])
                st = status if math.isfinite(val) or status != "ok" else "unidentified"
                rows.append({**base, "length": length, "events": tr.num_events, "t_end": tr.t_end,
                             "method": method, "estimator": cfg.estimator, "parameter": name,
                             "true": truth[name], "estimate": val,
                             "abs_error": abs(val - truth[name]), "status": st})
    return rows


def _run_one(args):
    cfg, index = args
    return run_replication(cfg, index)


def run_replications(cfg: ExperimentConfig, workers=None) -> list[dict]:
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, i) for i in range(cfg.replications)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_one, jobs))
    else:
        chunks = [_run_one(job) for job in jobs]
    return [row for chunk in chunks for row in chunk]


def summarize_rows(rows) -> list[dict]:
    """MAE / SMAPE / std per (length, method, parameter) over replications with a finite estimate."""
    groups: dict = {}
    for r in rows:
        key = (r["length"], r["method"], r["parameter"])
        groups.setdefault(key, []).append(r)
    out = []
    for (length, method, name), grp in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], PARAMETERS.index(kv[0][2]))):
        good = [r for r in grp if r["status"].startswith("ok") and math.isfinite(r["estimate"])]
        entry = {"length": length, "method": method, "parameter": name, "count": len(good),
                 "mae": math.nan, "smape": math.nan, "std": math.nan,
                 "failures": len(grp) - len(good)}
        if good:
            s = summarize([r["estimate"] for r in good], [r["true"] for r in good])
            entry.update(mae=s.mae, smape=s.smape, std=s.std)
        out.append(entry)
    return out


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in columns})
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, outdir=None, workers=None):
    """Run all replications and write ``raw.csv`` and ``summary.csv`` into ``outdir``."""
    outdir = Path(outdir or cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = run_replications(cfg, workers)
    summary = summarize_rows(rows)
    (outdir / "raw.csv").write_text(to_csv(rows, RAW_COLUMNS))
    (outdir / "summary.csv").write_text(to_csv(summary, SUMMARY_COLUMNS))
    return rows, summary


# -- holding-class census ----------------------------------------------------

_FAMILY_CODE = {"er": 1, "ws": 2, "complete": 3}


def census_graph(family: str, n: int, index: int, seed: int):
    """Draw one census graph with the randomised generator settings.

    ER: ``p`` uniform between ``0.2 log(n)/n`` and ``log(n)/n``.
    WS: ``nei`` uniform on the integers ``3..n//2`` then clipped to the
    valid range ``1..(n-1)//2``; rewiring probability ``U(0.2, 0.8)``.
    Returns ``(graph, info)``.
    """
    rng = np.random.default_rng([int(seed), n, _FAMILY_CODE[family], index])
    if family == "complete":
        return graphs.generate_complete(n), {}
    if family == "er":
        a, b = 0.2 * math.log(n) / n, math.log(n) / n
        p = float(rng.uniform(min(a, b), max(a, b)))
        return graphs.generate_er(n, p, seed=int(rng.integers(2**63))), {"p": p}
    if family == "ws":
        hi_valid = (n - 1) // 2
        nei = int(rng.integers(3, max(3, n // 2) + 1))
        nei = max(1, min(nei, hi_valid))
        rewire = float(rng.uniform(0.2, 0.8))
        return graphs.generate_ws(n, nei, rewire, seed=int(rng.integers(2**63))), {"nei": nei, "rewire": rewire}
    raise ValueError(f"unknown census family {family!r}")


def run_census(ns, families=("er", "ws"), models=("contact", "reversible"), count=50, seed=0):
    rows = []
    for n in ns:
        for family in families:
            reps = 1 if family == "complete" else count
            for idx in range(reps):
                g, info = census_graph(family, n, idx, seed)
                for model in models:
                    c = enumerate_classes(g, model)
                    rows.append({"n": n, "model": c.model.value, "family": family, "graph_index": idx,
                                 "p": info.get("p", ""), "nei": info.get("nei", ""),
                                 "rewire": info.get("rewire", ""), "edges": g.num_edges,
                                 "dmax": g.max_degree, "k_exact": c.k_exact, "k_bound": c.k_bound,
                                 "k_bound_global": c.k_bound_global, "ratio": c.ratio})
    return rows
