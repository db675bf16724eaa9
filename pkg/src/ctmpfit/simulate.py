"""Exact (Gillespie) simulation of a single continuously observed trajectory.

The event loop runs in a compiled kernel fed with uniforms drawn in blocks
from a seeded ``numpy`` PCG64 generator, so a trajectory is a pure function
of ``(graph, params, x0, stop, seed)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .dynamics import (Model, ModelParams, as_config, config_from_bits, config_to_bits,
                       infected_neighbor_counts, node_rates)
from .graph import Graph

PRNG_NAME = "numpy.PCG64/v1"
FORMAT_TAG = "# ctmpfit trajectory v1"
CHUNK = 10_000


class SimulationError(RuntimeError):
    """Simulation could not produce the requested trajectory."""


class TrajectoryFormatError(ValueError):
    """Malformed trajectory file or inconsistent trajectory."""


@dataclass(eq=False)
class Trajectory:
    """Initial configuration plus the ordered jump events up to ``t_end``.

    ``times[k]``, ``nodes[k]`` and ``states[k]`` describe event ``k``: at
    time ``times[k]`` node ``nodes[k]`` switches to ``states[k]``.
    """

    model: Model
    initial: np.ndarray
    times: np.ndarray
    nodes: np.ndarray
    states: np.ndarray
    t_end: float
    graph_id: str = ""
    seed: int | None = None
    prng: str = PRNG_NAME
    absorbed: bool = field(default=False)

    def __post_init__(self):
        self.model = Model.parse(self.model)
        self.initial = as_config(self.initial)
        self.times = np.asarray(self.times, dtype=np.float64)
        self.nodes = np.asarray(self.nodes, dtype=np.int64)
        self.states = np.asarray(self.states, dtype=np.uint8)
        self.t_end = float(self.t_end)

    @property
    def n(self) -> int:
        return self.initial.size

    @property
    def num_events(self) -> int:
        return self.times.size

    def __len__(self):
        """Number of observed states, i.e. events + 1."""
        return self.num_events + 1

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.model == other.model
            and self.t_end == other.t_end
            and self.graph_id == other.graph_id
            and self.seed == other.seed
            and self.prng == other.prng
            and np.array_equal(self.initial, other.initial)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.states, other.states)
        )

    def validate(self, g: Graph | None = None) -> None:
        if g is not None and g.n != self.n:
            raise TrajectoryFormatError(f"trajectory has {self.n} nodes, graph has {g.n}")
        if g is not None and self.graph_id and self.graph_id != g.fingerprint():
            raise TrajectoryFormatError("trajectory was recorded on a different graph")
        if not (self.times.size == self.nodes.size == self.states.size):
            raise TrajectoryFormatError("event arrays differ in length")
        if self.times.size:
            if self.times[0] <= 0 or np.any(np.diff(self.times) <= 0):
                raise TrajectoryFormatError("event times must be strictly increasing and positive")
            if self.times[-1] > self.t_end:
                raise TrajectoryFormatError("event after t_end")
            if self.nodes.min() < 0 or self.nodes.max() >= self.n:
                raise TrajectoryFormatError("event node index out of range")
            if self.states.max() > 1:
                raise TrajectoryFormatError("event state must be 0 or 1")
            bad = _kernels.first_bad_flip(self.initial, self.nodes, self.states)
            if bad >= 0:
                raise TrajectoryFormatError(f"event {bad} does not flip node {self.nodes[bad]}")
        elif self.t_end < 0:
            raise TrajectoryFormatError("t_end must be non-negative")

    def prefix(self, num_states: int) -> "Trajectory":
        """The first ``num_states`` observed states; the window ends at the last kept jump."""
        k = max(0, min(num_states - 1, self.num_events))
        if k == self.num_events:
            t_end = self.t_end
        else:
            t_end = float(self.times[k - 1]) if k else 0.0
        return Trajectory(self.model, self.initial, self.times[:k], self.nodes[:k],
                          self.states[:k], t_end, self.graph_id, self.seed, self.prng)

    def scaled(self, c: float) -> "Trajectory":
        """Same path with every time multiplied by ``c``."""
        return Trajectory(self.model, self.initial, self.times * c, self.nodes, self.states,
                          self.t_end * c, self.graph_id, self.seed, self.prng)

    def configurations(self):
        """Yield ``(t_start, t_stop, x)`` for every sojourn, ``x`` copied."""
        x = self.initial.copy()
        t = 0.0
        for k in range(self.num_events):
            yield t, float(self.times[k]), x.copy()
            x[self.nodes[k]] = self.states[k]
            t = float(self.times[k])
        yield t, self.t_end, x.copy()


def random_initial(n: int, rng) -> np.ndarray:
    """Draw ``p0 ~ U(0, 1)`` and then each node infected with probability ``p0``."""
    p0 = rng.random()
    return (rng.random(n) < p0).astype(np.uint8)


def infection_table(p: ModelParams, dmax: int) -> np.ndarray:
    j = np.arange(dmax + 1, dtype=float)
    if p.model is Model.CONTACT:
        return p.beta + p.delta * j
    return p.beta * np.power(float(p.delta), j)


def simulate(g: Graph, p: ModelParams, x0, max_events=None, max_time=None, seed=None,
             debug=False) -> Trajectory:
    """Simulate one trajectory.

    Parameters
    ----------
    max_events : int, optional
        Trajectory length in observed states, so at most
        ``max_events - 1`` jumps. The observation window then ends at the last jump.
    max_time : float, optional
        Horizon; the window is ``[0, max_time]``.
    debug : bool
        Compare the incrementally maintained rates with a from-scratch
        recomputation every ``CHUNK`` events.
    """
    if max_events is None and max_time is None:
        raise ValueError("need max_events and/or max_time")
    if max_events is not None and max_events < 1:
        raise ValueError("max_events must be >= 1")
    if max_time is not None and not max_time > 0:
        raise ValueError("max_time must be positive")
    x = as_config(x0, g.n).copy()
    initial = x.copy()
    rng = np.random.default_rng(seed)
    table = infection_table(p, max(g.max_degree, 0))
    m = infected_neighbor_counts(g, x)
    rates = np.where(x == 1, float(p.mu), table[m])

    budget = (max_events - 1) if max_events is not None else np.iinfo(np.int64).max
    t_max = float(max_time) if max_time is not None else np.inf
    times, nodes, states = [], [], []
    t = 0.0
    done_total = 0
    status = _kernels.RUNNING
    while done_total < budget:
        chunk = int(min(CHUNK, budget - done_total))
        u = rng.random(2 * chunk)
        out_t = np.empty(chunk)
        out_node = np.empty(chunk, dtype=np.int64)
        out_state = np.empty(chunk, dtype=np.uint8)
        done, t, status = _kernels.gillespie_chunk(
            x, m, rates, g.indptr, g.indices, float(p.mu), table, t, t_max,
            chunk, u, out_t, out_node, out_state)
        times.append(out_t[:done])
        nodes.append(out_node[:done])
        states.append(out_state[:done])
        done_total += done
        if debug and not np.allclose(rates, node_rates(g, x, p), rtol=1e-12, atol=0):
            raise AssertionError(f"incremental rates drifted after {done_total} events")
        if status != _kernels.RUNNING:
            break

    if status == _kernels.ABSORBED and done_total == 0 and max_time is None:
        raise SimulationError("initial configuration is absorbing: all transition rates are zero")
    times = np.concatenate(times) if times else np.empty(0)
    if max_time is not None and (status != _kernels.RUNNING or done_total == 0):
        t_end = t_max
    else:
        t_end = float(times[-1]) if times.size else 0.0
    return Trajectory(
        model=p.model,
        initial=initial,
        times=times,
        nodes=np.concatenate(nodes) if nodes else np.empty(0, dtype=np.int64),
        states=np.concatenate(states) if states else np.empty(0, dtype=np.uint8),
        t_end=t_end,
        graph_id=g.fingerprint(),
        seed=None if seed is None else int(seed),
        absorbed=status == _kernels.ABSORBED,
    )


def write_trajectory(tr: Trajectory, path) -> None:
    """Line-oriented text; times written with ``repr`` so they read back exactly."""
    head = [
        FORMAT_TAG,
        f"model {tr.model.value}",
        f"n {tr.n}",
        f"graph {tr.graph_id or '-'}",
        f"seed {'-' if tr.seed is None else tr.seed}",
        f"prng {tr.prng}",
        f"t_end {tr.t_end!r}",
        f"initial {config_to_bits(tr.initial)}",
        "# t node new_state",
    ]
    body = [f"{t!r} {v} {s}" for t, v, s in zip(tr.times.tolist(), tr.nodes.tolist(), tr.states.tolist())]
    Path(path).write_text("\n".join(head + body) + "\n")


_HEADER_KEYS = ("model", "n", "graph", "seed", "prng", "t_end", "initial")


def read_trajectory(path) -> Trajectory:
    header = {}
    times, nodes, states = [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(header) < len(_HEADER_KEYS):
                key = parts[0]
                if key not in _HEADER_KEYS or key in header or len(parts) != 2:
                    raise TrajectoryFormatError(f"{path}:{lineno}: bad header line {line!r}")
                header[key] = parts[1]
                continue
            if len(parts) != 3:
                raise TrajectoryFormatError(f"{path}:{lineno}: expected 't node new_state'")
            try:
                t, v, s = float(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise TrajectoryFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
            if s not in (0, 1):
                raise TrajectoryFormatError(f"{path}:{lineno}: new_state must be 0 or 1")
            if times and not t > times[-1]:
                raise TrajectoryFormatError(f"{path}:{lineno}: event times not strictly increasing")
            times.append(t)
            nodes.append(v)
            states.append(s)
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise TrajectoryFormatError(f"{path}: missing header fields {missing}")
    try:
        initial = config_from_bits(header["initial"])
        if initial.size != int(header["n"]) or (initial.size and initial.max() > 1):
            raise ValueError
        tr = Trajectory(
            model=header["model"],
            initial=initial,
            times=np.array(times, dtype=np.float64),
            nodes=np.array(nodes, dtype=np.int64),
            states=np.array(states, dtype=np.uint8),
            t_end=float(header["t_end"]),
            graph_id="" if header["graph"] == "-" else header["graph"],
            seed=None if header["seed"] == "-" else int(header["seed"]),
            prng=header["prng"],
        )
    except ValueError as exc:
        raise TrajectoryFormatError(f"{path}: bad header values ({exc})") from None
    tr.validate()
    return tr
