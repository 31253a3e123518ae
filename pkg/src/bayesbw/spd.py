"""State-price density extraction: Nadaraya-Watson regression of implied
volatility on (futures price, strike, maturity), then the Black-Scholes
lognormal density at the smoothed volatility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import DegenerateWindowError, ValidationError
from .kernels import WEIGHT_FLOOR, predict, weight_matrix
from .sampler import PriorSpec, SamplerConfig, sample_posterior
from .selectors import cv_minimize, rot_regression_bandwidth
from .types import Dataset, check_bandwidths

TRADING_DAYS_PER_YEAR = 252.0
BANDWIDTH_SOURCES = ("bayes", "rot", "cv", "explicit")


@dataclass(frozen=True)
class OptionRecord:
    """One option observation with its implied volatility already backed out."""

    futures_price: float
    strike: float
    maturity: float          # years
    implied_vol: float
    rate: float              # per-year, continuous compounding
    dividend_yield: float
    spot: float

    def __post_init__(self):
        for name in ("futures_price", "strike", "maturity", "implied_vol", "spot"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"option field {name} must be positive")

    @property
    def regressors(self) -> np.ndarray:
        return np.array([self.futures_price, self.strike, self.maturity])


def _records_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    records = list(records)
    if not records:
        raise ValidationError("need at least one option record")
    z = np.array([r.regressors for r in records])
    vols = np.array([r.implied_vol for r in records])
    return z, vols


def nw_implied_vol(records, h, query) -> float:
    """Kernel-weighted average implied volatility at query = (F, X, maturity)."""
    h = check_bandwidths(h)
    if h.shape[0] != 3:
        raise ValidationError("implied-vol regression uses exactly 3 bandwidths")
    z, vols = _records_arrays(records)
    q = np.asarray(query, float).reshape(1, 3)
    w = weight_matrix(q, z, h)[0]
    total = w.sum()
    if total < WEIGHT_FLOOR:
        raise DegenerateWindowError(
            "no option records carry weight at the query point")
    return float(w @ vols / total)


@dataclass(frozen=True)
class SPDCurve:
    """State-price density values on a terminal-price grid."""

    s_grid: np.ndarray
    density: np.ndarray
    maturity: float
    sigma_hat: float
    bandwidth_source: str = "explicit"
    h: np.ndarray | None = None

    @property
    def mass(self) -> float:
        return float(simpson(self.density, x=self.s_grid))


def default_s_grid(sigma_hat: float, spot: float, maturity: float,
                   rate: float, dividend: float,
                   n_points: int = 2001, span_log_sd: float = 8.0) -> np.ndarray:
    """Terminal-price grid covering +-span_log_sd log-standard-deviations."""
    mu = math.log(spot) + (rate - dividend - 0.5 * sigma_hat ** 2) * maturity
    sd = sigma_hat * math.sqrt(maturity)
    return np.linspace(math.exp(mu - span_log_sd * sd),
                       math.exp(mu + span_log_sd * sd), n_points)


def bs_spd(sigma_hat: float, spot: float, maturity: float, rate: float,
           dividend: float, s_grid=None, **grid_kwargs) -> SPDCurve:
    """Black-Scholes state-price density: lognormal in the terminal price
    with log-mean ln(spot) + (rate - dividend - sigma^2/2) * maturity and
    log-sd sigma * sqrt(maturity)."""
    if sigma_hat <= 0 or spot <= 0 or maturity <= 0:
        raise ValidationError("sigma_hat, spot and maturity must be positive")
    if s_grid is None:
        s_grid = default_s_grid(sigma_hat, spot, maturity, rate, dividend,
                                **grid_kwargs)
    s = np.asarray(s_grid, dtype=float)
    if (s <= 0).any():
        raise ValidationError("terminal-price grid must be positive")
    var = sigma_hat ** 2 * maturity
    mu = math.log(spot) + (rate - dividend - 0.5 * sigma_hat ** 2) * maturity
    dens = np.exp(-0.5 * (np.log(s) - mu) ** 2 / var) \
        / (s * math.sqrt(2.0 * math.pi * var))
    return SPDCurve(s_grid=s, density=dens, maturity=maturity,
                    sigma_hat=float(sigma_hat))


def records_dataset(records) -> Dataset:
    z, vols = _records_arrays(records)
    return Dataset(y=vols, x=z)


def resolve_bandwidths(records, source: str, explicit_h=None,
                       estimator: str = "local_constant",
                       prior: PriorSpec | None = None,
                       sampler_cfg: SamplerConfig | None = None) -> np.ndarray:
    """Bandwidth vector for the implied-vol regression from the chosen source."""
    if source not in BANDWIDTH_SOURCES:
        raise ValidationError(
            f"unknown bandwidth source {source!r}, expected {BANDWIDTH_SOURCES}")
    if source == "explicit":
        if explicit_h is None:
            raise ValidationError("explicit bandwidth source needs an h vector")
        return check_bandwidths(explicit_h)
    data = records_dataset(records)
    if source == "rot":
        return rot_regression_bandwidth(data)
    if source == "cv":
        return cv_minimize(data, estimator).h
    if sampler_cfg is None:
        raise ValidationError("bayes bandwidth source needs a SamplerConfig")
    chain = sample_posterior(data, prior or PriorSpec(), sampler_cfg, estimator)
    return chain.bandwidth_estimate().h


def spd_pipeline(records, bandwidth_source: str, maturities, query,
                 explicit_h=None, estimator: str = "local_constant",
                 prior: PriorSpec | None = None,
                 sampler_cfg: SamplerConfig | None = None,
                 n_points: int = 2001, span_log_sd: float = 8.0) -> list[SPDCurve]:
    """One state-price density curve per requested maturity (in years).

    ``query`` is the (futures price, strike) pair at which the smoothed
    volatility is read off; the spot price, rate and dividend yield come
    from the medians of the record set.
    """
    records = list(records)
    h = resolve_bandwidths(records, bandwidth_source, explicit_h,
                           estimator, prior, sampler_cfg)
    f_q, x_q = float(query[0]), float(query[1])
    spot = float(np.median([r.spot for r in records]))
    rate = float(np.median([r.rate for r in records]))
    dividend = float(np.median([r.dividend_yield for r in records]))
    curves = []
    for lam in maturities:
        lam = float(lam)
        if estimator == "local_constant":
            sigma = nw_implied_vol(records, h, (f_q, x_q, lam))
        else:
            data = records_dataset(records)
            sigma = float(predict(data, h, np.array([[f_q, x_q, lam]]),
                                  estimator)[0])
        if sigma <= 0:
            raise ValidationError(
                f"smoothed volatility is nonpositive at maturity {lam}")
        curve = bs_spd(sigma, spot, lam, rate, dividend,
                       n_points=n_points, span_log_sd=span_log_sd)
        curves.append(SPDCurve(
            s_grid=curve.s_grid, density=curve.density, maturity=lam,
            sigma_hat=curve.sigma_hat, bandwidth_source=bandwidth_source,
            h=h.copy()))
    return curves


def synthetic_smile_records(n: int = 400, seed: int = 0) -> list[OptionRecord]:
    """Synthetic option sample with a volatility smile, a stand-in for real
    exchange data: futures around 1400, strikes across moneyness, maturities
    from 2 to 60 trading days."""
    rng = np.random.default_rng(seed)
    futures = 1400.0 + rng.normal(0.0, 5.0, size=n)
    moneyness = rng.uniform(0.85, 1.15, size=n)
    strikes = futures * moneyness
    days = rng.choice([2, 5, 10, 21, 42, 60], size=n)
    maturities = days / TRADING_DAYS_PER_YEAR
    base = 0.15 + 1.2 * (moneyness - 1.0) ** 2 + 0.08 * np.sqrt(maturities)
    vols = base + rng.normal(0.0, 0.004, size=n)
    rate, dividend = 0.03, 0.02
    out = []
    for i in range(n):
        spot = futures[i] * math.exp(-(rate - dividend) * maturities[i])
        out.append(OptionRecord(
            futures_price=float(futures[i]), strike=float(strikes[i]),
            maturity=float(maturities[i]), implied_vol=float(vols[i]),
            rate=rate, dividend_yield=dividend, spot=float(spot)))
    return out
