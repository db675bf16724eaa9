"""Recover the dynamics parameters from one continuously observed trajectory.

Pipeline::

    accumulate_stats -> build_system -> solve_{wls,nnls,lad} -> recover_delta_reversible

Sojourns are grouped by holding class. Each class gives a rate estimate
``q_hat = departures / occupancy`` and a variance proxy ``q_hat**2 / departures``.
Stacking the classes' feature rows against their rate estimates gives a small
linear system in the parameter vector, solved with inverse-variance weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import linalg

from . import _kernels
from .dynamics import Model, as_config, feature_row, num_params, signature_from_row, theta_names
from .graph import Graph
from .simulate import Trajectory

LAD_EPSILON = 1e-8
LAD_TOL = 1e-8
LAD_MAX_ITER = 500
NNLS_GRAD_TOL = 1e-10

ESTIMATORS = ("mle", "umvue")
METHODS = ("wls", "nnls", "lad")


class EstimationError(ValueError):
    """Trajectory cannot support the requested estimate."""


class UnderdeterminedError(EstimationError):
    """Reduced system does not have full column rank."""

    def __init__(self, columns, rank, width):
        self.columns = list(columns)
        self.rank = rank
        self.width = width
        super().__init__(
            f"underdetermined system: rank {rank} < {width}; "
            f"unidentifiable columns: {', '.join(self.columns)}")


class SolverError(RuntimeError):
    """Iterative solver exhausted its budget."""


class DeltaUnrecoverable(EstimationError):
    pass


@dataclass
class ClassStats:
    """Per-class sufficient statistics of a trajectory.

    ``rows[i]`` is the feature row of class ``i`` (classes sorted
    lexicographically by row), ``n_out[i]`` the number of jumps out of states
    in the class and ``r_time[i]`` the total time spent in it.
    """

    model: Model
    n: int
    dmax: int
    rows: np.ndarray
    n_out: np.ndarray
    r_time: np.ndarray
    t_end: float

    def __len__(self):
        return len(self.n_out)

    def signatures(self):
        return [signature_from_row(r, self.model) for r in self.rows]

    def as_dict(self):
        return {sig: (int(k), float(r)) for sig, k, r in zip(self.signatures(), self.n_out, self.r_time)}

    def q_hat(self, estimator="mle") -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            if estimator == "mle":
                return self.n_out / self.r_time
            if estimator == "umvue":
                return (self.n_out - 1) / self.r_time
        raise ValueError(f"unknown estimator {estimator!r}")

    def var_hat(self, estimator="mle") -> np.ndarray:
        rate = self.q_hat(estimator)
        if estimator == "umvue":
            # single departure: UMVUE is 0, fall back to the MLE spread
            rate = np.where(self.n_out == 1, self.q_hat("mle"), rate)
        with np.errstate(divide="ignore", invalid="ignore"):
            return rate**2 / self.n_out


def class_rate_mle(n_out, r_time):
    if not r_time > 0:
        raise EstimationError("occupancy time must be positive")
    return n_out / r_time


def class_rate_umvue(n_out, r_time):
    if not r_time > 0:
        raise EstimationError("occupancy time must be positive")
    if n_out < 1:
        raise EstimationError("UMVUE needs at least one departure")
    return (n_out - 1) / r_time


def _check(tr: Trajectory, g: Graph):
    if tr.n != g.n:
        raise EstimationError(f"trajectory has {tr.n} nodes, graph has {g.n}")
    if tr.graph_id and tr.graph_id != g.fingerprint():
        raise EstimationError("trajectory was recorded on a different graph")


def _sojourn_rows(tr: Trajectory, g: Graph, model: Model):
    rows = _kernels.replay_features(tr.initial, tr.nodes, g.indptr, g.indices,
                                    g.max_degree, model is Model.CONTACT)
    durations = np.diff(np.concatenate(([0.0], tr.times, [tr.t_end])))
    return rows, durations


def _unique_rows(rows):
    """``np.unique(rows, axis=0, return_inverse=True)`` via mixed-radix int64 keys when they fit."""
    radix = rows.max(axis=0).astype(np.int64) + 1
    if np.sum(np.log2(radix)) < 62:
        keys = np.zeros(len(rows), dtype=np.int64)
        for col, r in zip(rows.T, radix):
            keys = keys * r + col
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        return rows[first], inverse.ravel()
    classes, inverse = np.unique(rows, axis=0, return_inverse=True)
    return classes, inverse.ravel()


def accumulate_stats(tr: Trajectory, g: Graph, model=None) -> ClassStats:
    """One replay pass: occupancy time and departures per holding class."""
    model = Model.parse(model or tr.model)
    _check(tr, g)
    rows, durations = _sojourn_rows(tr, g, model)
    departed = np.ones(len(durations), dtype=np.int64)
    departed[-1] = 0
    keep = durations > 0
    if not keep.any():
        raise EstimationError("empty observation window")
    classes, inverse = _unique_rows(rows[keep])
    return ClassStats(
        model=model,
        n=g.n,
        dmax=g.max_degree,
        rows=classes.astype(np.int64),
        n_out=np.bincount(inverse, weights=departed[keep]).astype(np.int64),
        r_time=np.bincount(inverse, weights=durations[keep]),
        t_end=tr.t_end,
    )


def pairwise_rate_mle(tr: Trajectory, g: Graph, i, j, by="state", model=None) -> float:
    """Transition count ``i -> j`` over occupancy of ``i``.

    ``by="state"`` takes configurations, ``by="class"`` takes signatures; a
    jump between two states of the same class counts toward ``i -> i`` in
    class mode.
    """
    model = Model.parse(model or tr.model)
    _check(tr, g)
    if by == "state":
        key_i, key_j = as_config(i, g.n).tobytes(), as_config(j, g.n).tobytes()
        x = tr.initial.copy()
        keys = [x.tobytes()]
        for v, s in zip(tr.nodes, tr.states):
            x[v] = s
            keys.append(x.tobytes())
    elif by == "class":
        key_i, key_j = i, j
        rows, _ = _sojourn_rows(tr, g, model)
        keys = [signature_from_row(r, model) for r in rows]
    else:
        raise ValueError(f"by must be 'state' or 'class', got {by!r}")
    durations = np.diff(np.concatenate(([0.0], tr.times, [tr.t_end])))
    occupancy = sum(d for k, d in zip(keys, durations) if k == key_i)
    if not occupancy > 0:
        raise EstimationError(f"source {i!r} never observed")
    count = sum(1 for a, b in zip(keys[:-1], keys[1:]) if a == key_i and b == key_j)
    return count / occupancy


@dataclass
class ReducedSystem:
    """Weighted reduced system ``coef @ theta ~= rates`` with row weights ``weights``.

    ``active`` flags the columns that the graph structure can identify at
    all; the contact ``delta`` column is inactive on edgeless graphs.
    ``model=None`` gives a bare system with no parameter back-out.
    """

    model: Model | None
    n: int
    dmax: int
    estimator: str
    coef: np.ndarray
    rates: np.ndarray
    weights: np.ndarray
    n_out: np.ndarray
    active: np.ndarray
    names: list[str]
    dropped: int = 0

    @classmethod
    def from_arrays(cls, coef, rates, weights=None, names=None):
        coef = np.atleast_2d(np.asarray(coef, dtype=float))
        rates = np.asarray(rates, dtype=float)
        weights = np.ones(len(rates)) if weights is None else np.asarray(weights, dtype=float)
        width = coef.shape[1]
        return cls(model=None, n=0, dmax=0, estimator="-", coef=coef, rates=rates, weights=weights,
                   n_out=np.ones(len(rates), dtype=np.int64), active=np.ones(width, dtype=bool),
                   names=list(names) if names else [f"theta_{k}" for k in range(width)])

    @property
    def num_rows(self):
        return self.coef.shape[0]

    @property
    def num_cols(self):
        return self.coef.shape[1]

    def scaled(self):
        """Row-scaled ``(sqrt(weights) * coef[:, active], sqrt(weights) * rates)``."""
        sw = np.sqrt(self.weights)
        return sw[:, None] * self.coef[:, self.active], sw * self.rates


def build_system(stats: ClassStats, estimator="mle", n_min=1) -> ReducedSystem:
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")
    keep = stats.n_out >= max(int(n_min), 1)
    if not keep.any():
        raise EstimationError("no holding class was left by a jump; nothing to fit")
    rates = stats.q_hat(estimator)[keep]
    var = stats.var_hat(estimator)[keep]
    coef = np.array([feature_row(sig, stats.n, stats.dmax)
                  for sig, k in zip(stats.signatures(), keep) if k])
    active = np.ones(num_params(stats.model, stats.dmax), dtype=bool)
    if stats.model is Model.CONTACT and stats.dmax == 0:
        active[2] = False
    return ReducedSystem(
        model=stats.model, n=stats.n, dmax=stats.dmax, estimator=estimator,
        coef=coef, rates=rates, weights=1.0 / var, n_out=stats.n_out[keep], active=active,
        names=theta_names(stats.model, stats.dmax), dropped=int((~keep).sum()),
    )


@dataclass
class ThetaEstimate:
    method: str
    estimator: str
    model: Model
    theta: np.ndarray
    names: list[str]
    residual_norm: float
    mu_hat: float = math.nan
    beta_hat: float = math.nan
    delta_hat: float = math.nan
    cov: np.ndarray | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)

    def recovered(self):
        return self.mu_hat, self.beta_hat, self.delta_hat


def _rank_check(A, names):
    nrows, ncols = A.shape
    if nrows == 0:
        raise UnderdeterminedError(names, 0, ncols)
    _, R, piv = linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(nrows, ncols) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum()) if diag.size and diag[0] > 0 else 0
    if rank < ncols:
        raise UnderdeterminedError([names[k] for k in sorted(piv[rank:])], rank, ncols)
    return rank


def _finish(sys: ReducedSystem, method, x_active, objective, rank, extra=None):
    theta = np.full(sys.num_cols, np.nan)
    theta[sys.active] = x_active
    diagnostics = {"rank": rank, "rows": sys.num_rows, "cols": sys.num_cols,
                   "dropped_classes": sys.dropped}
    diagnostics.update(extra or {})
    est = ThetaEstimate(method=method, estimator=sys.estimator, model=sys.model, theta=theta,
                        names=list(sys.names), residual_norm=float(objective), diagnostics=diagnostics)
    A, _ = sys.scaled()
    cov = np.full((sys.num_cols, sys.num_cols), np.nan)
    cov[np.ix_(sys.active, sys.active)] = np.linalg.inv(A.T @ A)
    est.cov = cov
    if sys.model is Model.CONTACT:
        est.mu_hat, est.beta_hat, est.delta_hat = (float(v) for v in theta)
    elif sys.model is Model.REVERSIBLE:
        est.mu_hat, est.beta_hat = float(theta[0]), float(theta[1])
        try:
            est.delta_hat = recover_delta_reversible(theta, cov)[2]
        except DeltaUnrecoverable as exc:
            diagnostics["delta_status"] = str(exc)
    return est


def solve_wls(sys: ReducedSystem) -> ThetaEstimate:
    """Weighted least squares through a QR factorisation of the row-scaled system."""
    A, y = sys.scaled()
    names = [nm for nm, a in zip(sys.names, sys.active) if a]
    rank = _rank_check(A, names)
    Q, R = linalg.qr(A, mode="economic")
    x = linalg.solve_triangular(R, Q.T @ y)
    return _finish(sys, "wls", x, np.linalg.norm(A @ x - y), rank)


def nnls_active_set(A, y, tol=None, max_iter=None):
    """Lawson–Hanson active-set NNLS for ``min ||A x - y||_2, x >= 0``.

    Returns ``(x, iterations)``. Stops when every gradient component
    ``A.T (y - A x)`` on the zero set is at most ``tol``.
    """
    ncols = A.shape[1]
    if tol is None:
        tol = NNLS_GRAD_TOL * max(1.0, float(np.abs(A.T @ y).max(initial=0.0)))
    if max_iter is None:
        max_iter = 10 * ncols
    x = np.zeros(ncols)
    passive = np.zeros(ncols, dtype=bool)
    grad = A.T @ (y - A @ x)
    it = 0
    while (~passive).any() and grad[~passive].max() > tol:
        it += 1
        if it > max_iter:
            raise SolverError(f"NNLS did not converge in {max_iter} iterations")
        j = np.flatnonzero(~passive)[np.argmax(grad[~passive])]
        passive[j] = True
        while True:
            z = np.zeros(ncols)
            z[passive] = np.linalg.lstsq(A[:, passive], y, rcond=None)[0]
            if z[passive].min() > 0:
                break
            bad = np.flatnonzero(passive & (z <= 0))
            ratios = x[bad] / (x[bad] - z[bad])
            alpha = ratios.min()
            x = x + alpha * (z - x)
            x[bad[ratios == alpha]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
            if not passive.any():
                z = np.zeros(ncols)
                break
        x = z
        grad = A.T @ (y - A @ x)
    return x, it


def solve_nnls(sys: ReducedSystem, max_iter=None) -> ThetaEstimate:
    A, y = sys.scaled()
    names = [nm for nm, a in zip(sys.names, sys.active) if a]
    rank = _rank_check(A, names)
    x, it = nnls_active_set(A, y, max_iter=max_iter)
    return _finish(sys, "nnls", x, np.linalg.norm(A @ x - y), rank, {"iterations": it})


def lad_irls(A, y, eps=LAD_EPSILON, tol=LAD_TOL, max_iter=LAD_MAX_ITER):
    """Least absolute deviations by iteratively reweighted least squares.

    Row weights are ``1 / max(|r_i|, eps)``. After the loop the best iterate
    is compared against the vertex fit through its ``ncols`` smallest residuals,
    since an L1 optimum interpolates that many rows.

    Returns ``(x, objective, iterations, converged)``.
    """
    ncols = A.shape[1]
    x = np.linalg.lstsq(A, y, rcond=None)[0]
    best_x, best_obj = x, np.abs(A @ x - y).sum()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r = A @ x - y
        sv = 1.0 / np.sqrt(np.maximum(np.abs(r), eps))
        x_new = np.linalg.lstsq(sv[:, None] * A, sv * y, rcond=None)[0]
        obj = np.abs(A @ x_new - y).sum()
        if obj < best_obj:
            best_x, best_obj = x_new, obj
        step = np.abs(x_new - x).max()
        x = x_new
        if step < tol:
            converged = True
            break
    if A.shape[0] >= ncols:
        idx = np.argsort(np.abs(A @ best_x - y), kind="stable")[:ncols]
        sub = A[idx]
        if np.linalg.matrix_rank(sub) == ncols:
            x_v = np.linalg.solve(sub, y[idx])
            obj_v = np.abs(A @ x_v - y).sum()
            if obj_v < best_obj:
                best_x, best_obj = x_v, obj_v
    return best_x, float(best_obj), it, converged


def solve_lad(sys: ReducedSystem) -> ThetaEstimate:
    A, y = sys.scaled()
    names = [nm for nm, a in zip(sys.names, sys.active) if a]
    rank = _rank_check(A, names)
    x, obj, it, converged = lad_irls(A, y)
    if not converged:
        warnings.warn(f"LAD IRLS stopped after {it} iterations without converging", RuntimeWarning)
    return _finish(sys, "lad", x, obj, rank, {
        "iterations": it, "converged": converged, "epsilon": LAD_EPSILON})


SOLVERS = {"wls": solve_wls, "nnls": solve_nnls, "lad": solve_lad}


def recover_delta_reversible(theta, cov=None):
    """Back out ``(mu, beta, delta)`` from ``[mu, beta, beta*delta, ..., beta*delta**dmax]``.

    ``log(theta[1 + k])`` is regressed on ``k`` over the positive entries and
    ``delta = exp(slope)``. With a covariance matrix the regression is
    weighted by the delta-method precision ``theta_k**2 / var_k`` of each log
    coefficient; otherwise the weights are uniform.
    """
    theta = np.asarray(theta, dtype=float)
    coef = theta[1:]
    k = np.arange(coef.size, dtype=float)
    ok = np.isfinite(coef) & (coef > 0)
    if ok.sum() < 2:
        raise DeltaUnrecoverable("fewer than two positive beta*delta**k coefficients")
    wts = np.ones(ok.sum())
    if cov is not None:
        var = np.diag(np.asarray(cov, dtype=float))[1:][ok]
        if np.all(np.isfinite(var)) and np.all(var > 0):
            wts = coef[ok] ** 2 / var
    X = np.column_stack([np.ones(ok.sum()), k[ok]])
    sw = np.sqrt(wts)
    (_, slope), *_ = np.linalg.lstsq(sw[:, None] * X, sw * np.log(coef[ok]), rcond=None)
    return float(theta[0]), float(theta[1]), float(np.exp(slope))


def estimate_theta(tr: Trajectory, g: Graph, model=None, estimator="mle", method="wls",
                   n_min=1) -> ThetaEstimate:
    if method not in SOLVERS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    stats = accumulate_stats(tr, g, model)
    sys = build_system(stats, estimator, n_min)
    est = SOLVERS[method](sys)
    est.diagnostics["classes_observed"] = len(stats)
    return est
