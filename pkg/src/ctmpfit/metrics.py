"""Error metrics for estimated versus true parameters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _pair(est, true):
    est = np.asarray(est, dtype=float).ravel()
    true = np.asarray(true, dtype=float).ravel()
    if est.size != true.size:
        raise ValueError(f"length mismatch: {est.size} estimates, {true.size} true values")
    if est.size == 0:
        raise ValueError("need at least one value")
    return est, true


def mae(est, true) -> float:
    est, true = _pair(est, true)
    return float(np.mean(np.abs(est - true)))


def smape(est, true) -> float:
    """Symmetric mean absolute percentage error in ``[0, 100]``.

    A term with both values zero counts as 0.
    """
    est, true = _pair(est, true)
    num = np.abs(est - true)
    den = np.abs(est) + np.abs(true)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(100.0 * terms.mean())


@dataclass(frozen=True)
class ErrorSummary:
    mae: float
    smape: float
    std: float
    l_count: int


def summarize(est, true) -> ErrorSummary:
    est, true = _pair(est, true)
    err = np.abs(est - true)
    std = float(err.std(ddof=1)) if err.size > 1 else 0.0
    return ErrorSummary(mae(est, true), smape(est, true), std, int(err.size))
