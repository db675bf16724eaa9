"""Static contact networks: construction, random generators and edge-list I/O.

Nodes are the contiguous integers ``0..n-1``. A :class:`Graph` is immutable
once built; the CSR arrays (``indptr``/``indices``) are what the compiled
simulation and replay kernels consume.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
import hashlib

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or edge-list files."""


@dataclass(frozen=True)
class Graph:
    """Finite, simple, undirected, unweighted graph.

    Parameters
    ----------
    n : int
        Number of nodes, at least 1.
    edges : tuple of (int, int)
        Unordered node pairs stored as ``(i, j)`` with ``i < j``, sorted.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"graph needs at least one node, got n={self.n}")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            e = (i, j) if i < j else (j, i)
            if e in canon:
                raise GraphError(f"duplicate edge {e}")
            canon.add(e)
        edges = tuple(sorted(canon))
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in edges:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_edges(cls, n, edges):
        return cls(int(n), tuple((int(i), int(j)) for i, j in edges))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @cached_property
    def indptr(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.degrees))).astype(np.int64)

    @cached_property
    def indices(self) -> np.ndarray:
        flat = [j for a in self.adjacency for j in a]
        return np.array(flat, dtype=np.int64)

    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1
        return A

    def is_connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return bool(seen.all())

    def fingerprint(self) -> str:
        """Short stable hash of ``(n, edges)`` used to tie trajectories to graphs."""
        h = hashlib.sha256(f"{self.n}:".encode())
        for i, j in self.edges:
            h.update(f"{i},{j};".encode())
        return h.hexdigest()[:16]


def generate_complete(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def generate_path(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def generate_star(n: int) -> Graph:
    """Node 0 joined to every other node."""
    return Graph(n, tuple((0, i) for i in range(1, n)))


def generate_er(n, p, seed=None, require_connected=False, max_tries=1000) -> Graph:
    """Erdős–Rényi G(n, p).

    One uniform draw per unordered pair, pairs visited in lexicographic
    ``(i, j), i < j`` order; pair is an edge when the draw is below ``p``.
    With ``require_connected`` further samples are drawn from the same
    generator until a connected graph appears or ``max_tries`` is spent.
    """
    if n < 1:
        raise GraphError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_tries):
        mask = rng.random(iu.size) < p
        g = Graph(n, tuple(zip(iu[mask].tolist(), ju[mask].tolist())))
        if not require_connected or g.is_connected():
            return g
    raise GraphError(f"no connected G({n}, {p}) sample in {max_tries} tries")


def generate_ws(n, nei, p_rewire, seed=None) -> Graph:
    """Watts–Strogatz small world graph.

    Ring lattice with ``nei`` neighbours on each side; then, for each lattice
    offset ``1..nei`` and each node ``u``, the edge ``(u, u+offset)`` is
    rewired with probability ``p_rewire`` to ``(u, w)`` where ``w`` is drawn
    uniformly among nodes that are neither ``u`` nor already adjacent to it.
    The edge count ``n * nei`` never changes.
    """
    if n < 3:
        raise GraphError("Watts-Strogatz needs n >= 3")
    if not 1 <= nei <= (n - 1) // 2:
        raise GraphError(f"nei={nei} invalid for n={n}; need 1 <= nei <= {(n - 1) // 2}")
    if not 0.0 <= p_rewire <= 1.0:
        raise GraphError(f"rewiring probability {p_rewire} outside [0, 1]")
    rng = np.random.default_rng(seed)
    adj = [set() for _ in range(n)]
    for u in range(n):
        for k in range(1, nei + 1):
            v = (u + k) % n
            adj[u].add(v)
            adj[v].add(u)
    for k in range(1, nei + 1):
        for u in range(n):
            v = (u + k) % n
            if rng.random() >= p_rewire:
                continue
            if v not in adj[u] or len(adj[u]) >= n - 1:
                continue
            choices = [w for w in range(n) if w != u and w not in adj[u]]
            w = choices[rng.integers(len(choices))]
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return Graph(n, tuple((u, v) for u in range(n) for v in adj[u] if u < v))


def _parse_edgelist(lines, source="<edgelist>") -> Graph:
    n = None
    edges = []
    seen = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            values = [int(tok) for tok in parts]
        except ValueError:
            raise GraphError(f"{source}:{lineno}: expected integers, got {line!r}") from None
        if n is None:
            if len(values) != 1 or values[0] < 1:
                raise GraphError(f"{source}:{lineno}: first line must be a positive node count")
            n = values[0]
            continue
        if len(values) != 2:
            raise GraphError(f"{source}:{lineno}: expected 'i j', got {line!r}")
        i, j = values
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"{source}:{lineno}: node index out of range 0..{n - 1}")
        if i == j:
            raise GraphError(f"{source}:{lineno}: self-loop at node {i}")
        e = (min(i, j), max(i, j))
        if e in seen:
            raise GraphError(f"{source}:{lineno}: duplicate edge {e}")
        seen.add(e)
        edges.append(e)
    if n is None:
        raise GraphError(f"{source}: missing node count")
    return Graph(n, tuple(edges))


def load_edgelist(path) -> Graph:
    path = Path(path)
    with open(path) as fh:
        return _parse_edgelist(fh, str(path))


def write_edgelist(g: Graph, path, comment=None) -> None:
    with open(path, "w", newline="\n") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{g.n}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def ieee118() -> Graph:
    """Topology of the IEEE 118-bus test system (118 nodes, 179 edges)."""
    text = resources.files("ctmpfit.data").joinpath("ieee118.edgelist").read_text()
    return _parse_edgelist(text.splitlines(), "ieee118.edgelist")
