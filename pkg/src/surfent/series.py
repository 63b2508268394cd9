"""Growth series and rate extrapolation.

All sequences handled here are of the form a_n = (1/n) log Q_n where Q_n is
(roughly) sub-multiplicative, so a_n = rate + O(1/n) at best and the Fekete
infimum is an upper estimate of the limit.  Three extrapolators are kept side
by side so their disagreement is visible in the diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

METHODS = ("fit", "fekete", "cauchy", "slope")


def fekete_rate(values: Sequence[float]) -> float:
    return float(np.min(values))


def _upper_window(n: np.ndarray, min_points: int = 2) -> np.ndarray:
    k = len(n)
    half = max(min_points, (k + 1) // 2)
    return np.arange(k)[-min(half, k):]


def fit_rate(n: Sequence[int], values: Sequence[float]) -> tuple:
    """Least-squares fit a_n = rate + beta/n over the upper half of n.

    Returns ``(rate, beta, rms_residual)``.
    """
    n = np.asarray(n, dtype=float)
    a = np.asarray(values, dtype=float)
    if len(n) == 1:
        return float(a[0]), 0.0, 0.0
    idx = _upper_window(n)
    X = np.column_stack([np.ones(len(idx)), 1.0 / n[idx]])
    coef, *_ = np.linalg.lstsq(X, a[idx], rcond=None)
    resid = a[idx] - X @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def cauchy_rate(n: Sequence[int], values: Sequence[float]) -> float:
    """(n a_n - m a_m)/(n - m) on the last two entries."""
    if len(n) < 2:
        return float(values[-1])
    n1, n2 = float(n[-2]), float(n[-1])
    return float((n2 * values[-1] - n1 * values[-2]) / (n2 - n1))


def slope_rate(n: Sequence[int], logs: Sequence[float]) -> tuple:
    """Least-squares slope of log Q_n against n over the upper half of n."""
    n = np.asarray(n, dtype=float)
    y = np.asarray(logs, dtype=float)
    if len(n) == 1:
        return float(y[0] / n[0]), 0.0, 0.0
    idx = _upper_window(n)
    X = np.column_stack([n[idx], np.ones(len(idx))])
    coef, *_ = np.linalg.lstsq(X, y[idx], rcond=None)
    resid = y[idx] - X @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


@dataclass
class GrowthSeries:
    """Normalized log-quantities a_n (nats/iteration) with an extrapolated rate."""

    n: np.ndarray
    values: np.ndarray
    rate: float
    method: str
    diagnostics: Dict[str, float] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.n) and np.any(np.diff(self.n) <= 0):
            raise ValueError("n must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("growth values must be finite")

    @classmethod
    def from_values(cls, n, values, method: str = "fit", flags=None) -> "GrowthSeries":
        n = np.asarray(n, dtype=int)
        values = np.asarray(values, dtype=float)
        if len(n) == 0:
            raise ValueError("empty growth series")
        fit, beta, rms = fit_rate(n, values)
        slope, icept, srms = slope_rate(n, values * n)
        diag = {
            "fit_rate": fit,
            "fit_beta": beta,
            "fit_rms": rms,
            "fekete_rate": fekete_rate(values),
            "cauchy_rate": cauchy_rate(n, values),
            "slope_rate": slope,
            "slope_intercept": icept,
        }
        if method not in METHODS:
            raise ValueError(f"unknown extrapolation method {method!r}")
        rate = diag[f"{method}_rate"]
        return cls(n, values, rate, method, diag, list(flags or []))

    def as_rows(self):
        return [(int(k), float(v)) for k, v in zip(self.n, self.values)]
