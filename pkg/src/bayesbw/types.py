"""Core data containers used throughout the package."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBandwidthError, ValidationError


@dataclass(frozen=True)
class Dataset:
    """A regression sample: response ``y`` (n,) and regressors ``x`` (n, d).

    Local linear fitting needs at least d+2 observations, and every entry
    must be finite.
    """

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim != 1 or x.ndim != 2:
            raise ValidationError("y must be 1-d and x 2-d (n rows, d columns)")
        if y.shape[0] != x.shape[0]:
            raise ValidationError(
                f"y has {y.shape[0]} rows but x has {x.shape[0]}"
            )
        if x.shape[1] < 1:
            raise ValidationError("x needs at least one column")
        if y.shape[0] < x.shape[1] + 2:
            raise ValidationError(
                f"need n >= d+2 observations, got n={y.shape[0]} with d={x.shape[1]}"
            )
        if not (np.isfinite(y).all() and np.isfinite(x).all()):
            raise ValidationError("dataset contains non-finite entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def check_bandwidths(h) -> np.ndarray:
    """Validate and return a positive, finite bandwidth vector."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.ndim != 1 or h.size == 0:
        raise InvalidBandwidthError("bandwidths must form a nonempty 1-d vector")
    if not np.isfinite(h).all() or (h <= 0).any():
        raise InvalidBandwidthError(f"bandwidths must be positive and finite, got {h}")
    return h


@dataclass(frozen=True)
class BandwidthSet:
    """Regression bandwidths ``h`` (one per regressor) and error-density
    bandwidth ``b``, all strictly positive."""

    h: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "h", check_bandwidths(self.h))
        b = float(self.b)
        if not np.isfinite(b) or b <= 0:
            raise InvalidBandwidthError(f"b must be positive and finite, got {b}")
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class LocalFit:
    """Level and derivative estimate of the regression function at one point."""

    m_hat: float
    gradient: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        if not (np.isfinite(self.m_hat) and np.isfinite(g).all()):
            raise ValidationError("local fit produced non-finite values")
        object.__setattr__(self, "gradient", g)
