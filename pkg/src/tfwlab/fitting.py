"""Least-squares rate fits on log-log and semilog axes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


def _r_squared(y, yfit) -> float:
    ss_res = float(np.sum((y - yfit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-30 else 0.0
    return 1.0 - ss_res / ss_tot


def _prepare(xs, ys, name):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if len(xs) < 3:
        raise ValueError(f"{name} needs at least 3 points, got {len(xs)}")
    if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValueError(f"{name} needs positive finite values")
    return xs, ys


def fit_power_law(xs, ys) -> tuple[float, float, float]:
    """Fit ``y = C x^p``; returns ``(p, C, R^2)`` from least squares on log axes."""
    xs, ys = _prepare(xs, ys, "power-law fit")
    if np.any(xs <= 0):
        raise ValueError("power-law fit needs positive abscissae")
    lx, ly = np.log(xs), np.log(ys)
    p, c = np.polyfit(lx, ly, 1)
    return float(p), float(np.exp(c)), _r_squared(ly, p * lx + c)


@dataclass
class DecayFit:
    """``v ~ exp(intercept - rate * d)`` fitted on semilog axes."""

    distances: list
    values: list
    rate: float
    intercept: float
    r_squared: float
    excluded: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def fit_exponential(ds, vs) -> DecayFit:
    ds, vs = _prepare(ds, vs, "exponential fit")
    lv = np.log(vs)
    slope, icpt = np.polyfit(ds, lv, 1)
    return DecayFit(ds.tolist(), vs.tolist(), float(-slope), float(icpt),
                    _r_squared(lv, slope * ds + icpt))
