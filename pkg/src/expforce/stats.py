"""Correlation estimators used to score metrics against outcomes."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm, rankdata


class UndefinedCorrelation(ValueError):
    """One of the inputs has zero variance."""


def _check(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    return x, y


def pearson(x, y) -> float:
    """Sample Pearson product-moment correlation."""
    x, y = _check(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    # relative tolerance so constant vectors with float noise count as constant
    if sxx <= 1e-24 * max(1.0, float(x @ x)) or syy <= 1e-24 * max(1.0, float(y @ y)):
        raise UndefinedCorrelation("correlation undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x, y = _check(x, y)
    return pearson(rankdata(x), rankdata(y))


def correlation_stderr(r: float, n: int) -> float:
    if n <= 2:
        return math.nan
    return math.sqrt(max(0.0, 1.0 - r * r) / (n - 2))


def fisher_ci(r: float, n: int, level: float = 0.95) -> tuple[float, float]:
    """Confidence interval for a correlation via the Fisher z-transform."""
    if n <= 3:
        return (-1.0, 1.0)
    r = max(-1 + 1e-15, min(1 - 1e-15, r))
    z = math.atanh(r)
    half = norm.ppf(0.5 + level / 2) / math.sqrt(n - 3)
    return math.tanh(z - half), math.tanh(z + half)
