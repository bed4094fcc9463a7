"""Regression error metrics: RMSE, MAE, and their average (ARSE).

All metrics are computed in the target's original units (t/ha for yield);
normalization is never applied before scoring.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, LengthMismatchError


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    mae: float
    arse: float
    n: int

    def as_row(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "arse": self.arse, "n": self.n}


def _paired(pred, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.size != a.size:
        raise LengthMismatchError(f"pred has {p.size} values, actual has {a.size}")
    if p.size == 0:
        raise EmptyInputError("cannot score empty vectors")
    return p, a


def rmse(pred, actual) -> float:
    """Root mean squared error; large residuals dominate."""
    p, a = _paired(pred, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(pred, actual) -> float:
    """Mean absolute error; every residual weighs the same."""
    p, a = _paired(pred, actual)
    return float(np.mean(np.abs(p - a)))


def arse(pred, actual) -> MetricsReport:
    """Full report with the combined metric: the mean of RMSE and MAE.

    The combined value sits between the two by construction
    (mae <= arse <= rmse), balancing outlier sensitivity against
    outlier blindness.
    """
    p, a = _paired(pred, actual)
    m_rmse = rmse(p, a)
    m_mae = mae(p, a)
    return MetricsReport(rmse=m_rmse, mae=m_mae, arse=(m_rmse + m_mae) / 2.0, n=p.size)
