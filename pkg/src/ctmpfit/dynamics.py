"""Contact process and reversible contact process on a fixed graph.

A configuration is a length-``n`` ``uint8`` vector, 1 for infected (failed)
and 0 for susceptible (working). Both models let an infected node heal at
rate ``mu``. A susceptible node ``k`` with ``m_k`` infected neighbours gets
infected at rate ``beta + delta * m_k`` (contact) or ``beta * delta**m_k``
(reversible).

Holding classes are keyed structurally, independent of the parameters:

* contact: ``(s, sum of m_k over susceptible k)``
* reversible: ``(s, histogram of m_k over susceptible k)``

and every class maps to a feature row ``f`` with ``f @ theta`` equal to the
holding (total exit) rate of every configuration in the class.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import Graph


class Model(str, Enum):
    CONTACT = "contact"
    REVERSIBLE = "reversible"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown model {value!r}; expected 'contact' or 'reversible'") from None


@dataclass(frozen=True)
class ModelParams:
    """Dynamics parameters.

    For the reversible model ``delta`` is a unitless scaling factor and both
    ``mu`` and ``beta`` must be strictly positive.
    """

    model: Model
    mu: float
    beta: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        if min(self.mu, self.beta, self.delta) < 0:
            raise ValueError(f"rates must be non-negative: {self}")
        if self.model is Model.REVERSIBLE and not (self.mu > 0 and self.beta > 0 and self.delta > 0):
            raise ValueError("reversible contact process needs mu > 0, beta > 0 and delta > 0")


@dataclass(frozen=True, order=True)
class ContactSignature:
    s: int
    m_total: int


@dataclass(frozen=True, order=True)
class ReversibleSignature:
    s: int
    hist: tuple[int, ...]


def as_config(x, n=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    if x.ndim != 1:
        raise ValueError("configuration must be one-dimensional")
    if n is not None and x.size != n:
        raise ValueError(f"configuration has length {x.size}, graph has {n} nodes")
    if x.size and x.max() > 1:
        raise ValueError("configuration entries must be 0 or 1")
    return x


def config_from_bits(bits: str) -> np.ndarray:
    return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")


def config_to_bits(x) -> str:
    return "".join("1" if v else "0" for v in np.asarray(x))


def num_params(model, dmax: int) -> int:
    """Length ``b`` of the parameter vector for ``model`` on a graph of max degree ``dmax``."""
    return 3 if Model.parse(model) is Model.CONTACT else dmax + 2


def theta_vector(p: ModelParams, dmax: int) -> np.ndarray:
    """``[mu, beta, delta]`` or ``[mu, beta, beta*delta, ..., beta*delta**dmax]``."""
    if p.model is Model.CONTACT:
        return np.array([p.mu, p.beta, p.delta], dtype=float)
    return np.concatenate(([p.mu], p.beta * p.delta ** np.arange(dmax + 1, dtype=float)))


def theta_names(model, dmax: int) -> list[str]:
    if Model.parse(model) is Model.CONTACT:
        return ["mu", "beta", "delta"]
    return ["mu"] + [f"beta_delta{j}" for j in range(dmax + 1)]


def infected_neighbor_count(g: Graph, x, k: int) -> int:
    if not 0 <= k < g.n:
        raise IndexError(f"node {k} out of range for n={g.n}")
    x = as_config(x, g.n)
    return int(sum(int(x[i]) for i in g.neighbors(k)))


def infected_neighbor_counts(g: Graph, x) -> np.ndarray:
    """``m = A @ x`` for every node at once."""
    x = as_config(x, g.n)
    rows = np.repeat(np.arange(g.n), g.degrees)
    return np.bincount(rows, weights=x[g.indices], minlength=g.n).astype(np.int64)


def enumerate_transitions(g: Graph, x, p: ModelParams) -> list[tuple[int, int, float]]:
    """One ``(node, new_state, rate)`` entry per node."""
    x = as_config(x, g.n)
    m = infected_neighbor_counts(g, x)
    out = []
    for k in range(g.n):
        if x[k]:
            out.append((k, 0, float(p.mu)))
        elif p.model is Model.CONTACT:
            out.append((k, 1, float(p.beta + p.delta * m[k])))
        else:
            out.append((k, 1, float(p.beta * p.delta ** int(m[k]))))
    return out


def node_rates(g: Graph, x, p: ModelParams) -> np.ndarray:
    x = as_config(x, g.n)
    m = infected_neighbor_counts(g, x)
    if p.model is Model.CONTACT:
        infect = p.beta + p.delta * m
    else:
        infect = p.beta * np.power(float(p.delta), m)
    return np.where(x == 1, float(p.mu), infect).astype(float)


def holding_rate(g: Graph, x, p: ModelParams) -> float:
    """Absolute value of the diagonal entry of the generator at ``x``."""
    return float(sum(rate for _, _, rate in enumerate_transitions(g, x, p)))


def signature(g: Graph, x, model):
    x = as_config(x, g.n)
    m = infected_neighbor_counts(g, x)
    sus = x == 0
    s = int(sus.sum())
    if Model.parse(model) is Model.CONTACT:
        return ContactSignature(s, int(m[sus].sum()))
    hist = np.bincount(m[sus], minlength=g.max_degree + 1)
    return ReversibleSignature(s, tuple(int(c) for c in hist))


def feature_row(sig, n: int, dmax: int) -> np.ndarray:
    """Coefficient row of the class in the reduced linear system."""
    if isinstance(sig, ContactSignature):
        return np.array([n - sig.s, sig.s, sig.m_total], dtype=float)
    if len(sig.hist) > dmax + 1 and any(sig.hist[dmax + 1:]):
        raise ValueError(f"signature histogram {sig.hist} exceeds dmax={dmax}")
    row = np.zeros(dmax + 2)
    row[0] = n - sig.s
    h = sig.hist[: dmax + 1]
    row[1 : 1 + len(h)] = h
    return row


def signature_from_row(row, model):
    row = [int(round(v)) for v in row]
    if Model.parse(model) is Model.CONTACT:
        return ContactSignature(row[1], row[2])
    return ReversibleSignature(sum(row[1:]), tuple(row[1:]))


def feature_rows_batch(g: Graph, X: np.ndarray, model) -> np.ndarray:
    """Feature rows for a stack of configurations ``X`` of shape ``(k, n)``.

    Integer valued; rows are equal exactly when signatures are equal.
    """
    X = np.asarray(X)
    adj = g.adjacency_matrix().astype(np.int16)
    counts = X.astype(np.int16) @ adj
    sus = X == 0
    s = sus.sum(axis=1)
    if Model.parse(model) is Model.CONTACT:
        m_total = np.where(sus, counts, 0).sum(axis=1)
        return np.column_stack([g.n - s, s, m_total]).astype(np.int64)
    dmax = g.max_degree
    out = np.zeros((X.shape[0], dmax + 2), dtype=np.int64)
    out[:, 0] = g.n - s
    for j in range(dmax + 1):
        out[:, 1 + j] = (sus & (counts == j)).sum(axis=1)
    return out
