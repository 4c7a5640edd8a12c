"""Regression evaluation metrics on original-unit response vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsReport:
    """MAE, MAPE, RMSE, R-squared and adjusted R-squared for one test split.

    ``r2``/``adj_r2`` are NaN when undefined (constant truth, or too few
    rows for the adjustment). ``mape_skipped`` counts zero-truth terms
    excluded from MAPE.
    """

    mae: float
    mape: float
    rmse: float
    r2: float
    adj_r2: float
    n: int
    d_used: int
    mape_skipped: int = 0


def compute_metrics(y: np.ndarray, yhat: np.ndarray, d_used: int) -> MetricsReport:
    """Evaluate the five metrics of a prediction vector against the truth.

    MAPE terms with y_i = 0 are skipped (and counted); R-squared uses the
    mean of ``y`` as baseline; adjusted R-squared applies the
    (n-1)/(n-d_used-1) correction and is NaN unless n > d_used + 1.
    """
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.ndim != 1 or y.shape != yhat.shape:
        raise ValueError("y and yhat must be equal-length vectors")
    n = y.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    if d_used < 0:
        raise ValueError("d_used must be non-negative")

    err = y - yhat
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err**2)))

    nonzero = y != 0
    skipped = int(n - nonzero.sum())
    if skipped == n:
        mape = math.nan
    else:
        mape = float(np.mean(np.abs(err[nonzero] / y[nonzero])))

    sst = float(np.sum((y - y.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - float(np.sum(err**2)) / sst
    else:
        r2 = math.nan
    if math.isfinite(r2) and n > d_used + 1:
        adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - d_used - 1)
    else:
        adj_r2 = math.nan

    return MetricsReport(
        mae=mae, mape=mape, rmse=rmse, r2=r2, adj_r2=adj_r2,
        n=n, d_used=d_used, mape_skipped=skipped,
    )
