"""Accuracy criteria: integrated squared errors over evaluation grids,
out-of-sample forecast scores, and CDF-inversion prediction intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc

from .errors import ValidationError
from .kernels import error_density
from .types import check_bandwidths

DEFAULT_GRID_POINTS = 1000


@dataclass(frozen=True)
class EvaluationGrid:
    """Evaluation locations (m, d) with their per-dimension support bounds."""

    points: np.ndarray
    support_lo: np.ndarray
    support_hi: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, float))
        lo = np.atleast_1d(np.asarray(self.support_lo, float))
        hi = np.atleast_1d(np.asarray(self.support_hi, float))
        if pts.shape[0] < 2:
            raise ValidationError("an evaluation grid needs at least 2 points")
        if (lo >= hi).any():
            raise ValidationError("grid support bounds must satisfy lo < hi")
        if (pts < lo).any() or (pts > hi).any():
            raise ValidationError("grid points fall outside the stated support")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "support_lo", lo)
        object.__setattr__(self, "support_hi", hi)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def volume(self) -> float:
        return float(np.prod(self.support_hi - self.support_lo))


def regular_grid(lo: float, hi: float, m: int = DEFAULT_GRID_POINTS) -> EvaluationGrid:
    """Equispaced 1-d grid spanning [lo, hi] inclusive."""
    return EvaluationGrid(points=np.linspace(lo, hi, m)[:, None],
                          support_lo=[lo], support_hi=[hi])


def qmc_grid(lo, hi, m: int = DEFAULT_GRID_POINTS, seed: int = 0) -> EvaluationGrid:
    """Scrambled low-discrepancy grid for multivariate supports.

    Fixed per seed so every replication of an experiment scores on the
    same points.
    """
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    sampler = qmc.Halton(d=lo.shape[0], scramble=True, seed=seed)
    unit = sampler.random(m)
    return EvaluationGrid(points=lo + unit * (hi - lo),
                          support_lo=lo, support_hi=hi)


def ise_regression(estimate, truth, grid: EvaluationGrid) -> float:
    """Integrated squared error between two regression surfaces.

    One-dimensional grids use the Riemann weight (hi - lo) / m; higher
    dimensions average over the quasi-random points and scale by the
    support volume.
    """
    est = np.asarray(estimate(grid.points), dtype=float)
    tru = np.asarray(truth(grid.points), dtype=float)
    if not np.isfinite(est).all():
        bad = grid.points[~np.isfinite(est)][0]
        raise ValidationError(f"estimate is non-finite at grid point {bad}")
    sq = (est - tru) ** 2
    if grid.d == 1:
        return float(sq.sum() * (grid.support_hi[0] - grid.support_lo[0]) / grid.m)
    return float(sq.mean() * grid.volume)


def ise_density(e, b: float, truth_density, sigma_max: float,
                m: int = DEFAULT_GRID_POINTS) -> float:
    """Riemann-sum ISE between the residual-mixture density and a known
    error density over [-4 sigma_max, 4 sigma_max]."""
    b = float(check_bandwidths(b)[0])
    span = 4.0 * float(sigma_max)
    z = np.linspace(-span, span, m)
    est = error_density(e, b, z)
    tru = np.asarray(truth_density(z), dtype=float)
    if not np.isfinite(est).all() or not np.isfinite(tru).all():
        raise ValidationError("non-finite density value on the ISE grid")
    return float(((est - tru) ** 2).sum() * 2.0 * span / m)


@dataclass(frozen=True)
class ForecastScore:
    """Out-of-sample accuracy: mean squared error, mean absolute error, and
    mean absolute percentage error (percent).  ``mape`` is nan with the flag
    cleared when some holdout response is exactly zero."""

    msfe: float
    mafe: float
    mape: float
    mape_defined: bool = True


def forecast_scores(actuals, forecasts) -> ForecastScore:
    a = np.asarray(actuals, dtype=float)
    f = np.asarray(forecasts, dtype=float)
    if a.shape != f.shape or a.ndim != 1 or a.size < 1:
        raise ValidationError("actuals and forecasts must be equal-length vectors")
    err = a - f
    msfe = float((err ** 2).mean())
    mafe = float(np.abs(err).mean())
    if (a == 0).any():
        return ForecastScore(msfe=msfe, mafe=mafe, mape=math.nan,
                             mape_defined=False)
    mape = float(np.abs(err / a).mean() * 100.0)
    return ForecastScore(msfe=msfe, mafe=mafe, mape=mape)


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    nominal: float = 0.95

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValidationError("interval bounds out of order")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def error_cdf_grid(e, b: float, m: int = DEFAULT_GRID_POINTS):
    """Mixture CDF of the residual density on a grid spanning the residual
    range padded by six bandwidths.  Returns (grid, cdf values)."""
    b = float(check_bandwidths(b)[0])
    e = np.asarray(e, dtype=float)
    z = np.linspace(e.min() - 6.0 * b, e.max() + 6.0 * b, m)
    cdf = norm.cdf((z[:, None] - e) / b).mean(axis=1)
    return z, cdf


def prediction_interval(e, b: float, point_forecast: float,
                        alpha: float = 0.05,
                        m: int = DEFAULT_GRID_POINTS) -> PredictionInterval:
    """Interval from inverting the residual-mixture CDF: the grid points
    nearest the alpha/2 and 1 - alpha/2 quantiles, added to the forecast."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    z, cdf = error_cdf_grid(e, b, m)
    lo = z[int(np.argmin(np.abs(cdf - alpha / 2.0)))]
    hi = z[int(np.argmin(np.abs(cdf - (1.0 - alpha / 2.0))))]
    return PredictionInterval(lower=float(point_forecast + lo),
                              upper=float(point_forecast + hi),
                              nominal=1.0 - alpha)


def mise_aggregate(ise_values) -> float:
    """Monte Carlo mean of replication ISEs."""
    v = np.asarray(ise_values, dtype=float)
    if v.size == 0:
        raise ValidationError("need at least one ISE value")
    return float(v.mean())
