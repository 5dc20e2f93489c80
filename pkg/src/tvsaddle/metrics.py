"""Convergence measurements and rate fits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from tvsaddle.errors import UnsupportedMetricError, ValidationError

CSV_COLUMNS = ("k", "rounds", "dist_sq", "gap", "consensus")


@dataclass(frozen=True)
class MetricPoint:
    k: int
    rounds: int
    consensus: float
    dist_sq: Optional[float] = None
    gap: Optional[float] = None


def distance_sq(zbar, zstar) -> float:
    a = np.asarray(zbar, dtype=float)
    b = np.asarray(zstar, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d)


def gap_of(problem, z) -> float:
    if problem.gap_oracle is None:
        raise UnsupportedMetricError(f"{problem.name} has no gap oracle")
    return problem.gap_oracle(np.asarray(z, dtype=float))


def consensus_error(states) -> float:
    """Mean squared deviation of the node rows from their mean."""
    rows = np.asarray(getattr(states, "rows", states), dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    dev = rows - rows.mean(axis=0)
    return float(np.sum(dev * dev) / rows.shape[0])


def _tail(series, tail: float):
    pts = np.asarray(series, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("series must be a sequence of (x, value) pairs")
    if len(pts) < 10:
        raise ValidationError(f"need at least 10 points, got {len(pts)}")
    if np.any(pts[:, 1] <= 0) or not np.all(np.isfinite(pts)):
        raise ValidationError("all values must be positive and finite to fit on a log scale")
    if not 0 < tail <= 1:
        raise ValidationError(f"tail must lie in (0, 1], got {tail}")
    start = len(pts) - max(2, int(round(tail * len(pts))))
    return pts[start:]


def fit_linear_rate(series, tail: float = 0.5) -> float:
    """Least-squares slope of ``ln(value)`` against round over the last ``tail`` of the points."""
    pts = _tail(series, tail)
    return float(np.polyfit(pts[:, 0], np.log(pts[:, 1]), 1)[0])


def fit_sublinear_rate(series, tail: float = 0.5) -> float:
    """Least-squares slope of ``ln(value)`` against ``ln(k)``; ``1/k`` gives -1."""
    pts = _tail(series, tail)
    if np.any(np.asarray(series, dtype=float)[:, 0] <= 0):
        raise ValidationError("iteration counts must be positive for a log-log fit")
    return float(np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)[0])
