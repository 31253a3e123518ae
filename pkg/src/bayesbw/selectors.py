"""Frequentist bandwidth baselines: normal-reference rules and cross-validation
for the regression function, plus rule-of-thumb / likelihood cross-validation
bandwidths for the residual density.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import (
    BayesbwError,
    DegenerateRegressorError,
    DegenerateResidualsError,
    SelectorFailureError,
)
from .kernels import SQRT_2PI, residuals_loo
from .types import Dataset

_IQR_NORMALIZER = 1.34


@dataclass(frozen=True)
class SelectorResult:
    """Outcome of a bandwidth search."""

    h: np.ndarray
    objective_value: float
    evaluations: int
    converged: bool
    boundary: bool = False


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the multistart simplex search behind cv_minimize."""

    start_factors: tuple = (0.5, 1.0, 2.0)
    max_starts: int = 9
    budget_per_start: int = 500
    tol_log: float = 1e-6
    box_factor: float = 100.0
    seed: int = 0


def _robust_scale(v: np.ndarray) -> float:
    """min(sample sd, IQR/1.34), falling back to whichever is positive."""
    s = float(np.std(v, ddof=1))
    q = float(np.subtract(*np.percentile(v, [75, 25]))) / _IQR_NORMALIZER
    candidates = [c for c in (s, q) if c > 0]
    if not candidates:
        return 0.0
    return min(candidates)


def rot_regression_bandwidth(data: Dataset) -> np.ndarray:
    """Normal-reference bandwidths sigma_k * (4 / ((d+2) n))^(1/(d+4))."""
    factor = (4.0 / ((data.d + 2) * data.n)) ** (1.0 / (data.d + 4))
    h = np.empty(data.d)
    for k in range(data.d):
        sigma = _robust_scale(data.x[:, k])
        if sigma <= 0:
            raise DegenerateRegressorError(
                f"regressor column {k} has zero spread", column=k)
        h[k] = sigma * factor
    return h


def cv_objective(data: Dataset, h, estimator: str = "local_linear") -> float:
    """Sum of squared leave-one-out prediction errors; +inf on degeneracy."""
    try:
        e = residuals_loo(data, h, estimator)
    except BayesbwError:
        return math.inf
    return float(e @ e)


def _start_points(log_rot: np.ndarray, cfg: SearchConfig) -> list[np.ndarray]:
    d = log_rot.shape[0]
    levels = np.log(np.asarray(cfg.start_factors, float))
    combos = list(itertools.product(range(len(levels)), repeat=d))
    if len(combos) > cfg.max_starts:
        # Latin-hypercube subsample: every level appears equally often per axis.
        rng = np.random.default_rng(cfg.seed)
        reps = cfg.max_starts // len(levels)
        cols = []
        for _ in range(d):
            col = np.repeat(np.arange(len(levels)), reps)
            rng.shuffle(col)
            cols.append(col)
        combos = list(zip(*[c.tolist() for c in cols]))
    return [log_rot + levels[list(c)] for c in combos]


def cv_minimize(data: Dataset, estimator: str = "local_linear",
                search: SearchConfig | None = None) -> SelectorResult:
    """Minimize the cross-validation criterion by multistart Nelder-Mead
    over log bandwidths, seeded around the normal-reference rule.

    The returned point is the best of every objective evaluation made, not
    just the final simplex vertex.  A best point on the search-box boundary
    is reported with converged=False and boundary=True: the criterion was
    still decreasing at an extreme bandwidth, which is the classic way
    cross-validation fails to pick a meaningful value.
    """
    cfg = search or SearchConfig()
    log_rot = np.log(rot_regression_bandwidth(data))
    log_span = math.log(cfg.box_factor)
    lo, hi = log_rot - log_span, log_rot + log_span

    best = {"z": None, "value": math.inf, "count": 0}

    def objective(z):
        best["count"] += 1
        if (z < lo).any() or (z > hi).any():
            return math.inf
        value = cv_objective(data, np.exp(z), estimator)
        if value < best["value"] or (
                value == best["value"] and best["z"] is not None
                and tuple(z) < tuple(best["z"])):
            best["value"] = value
            best["z"] = z.copy()
        return value

    any_success = False
    for z0 in _start_points(log_rot, cfg):
        res = minimize(objective, z0, method="Nelder-Mead",
                       options={"xatol": cfg.tol_log, "fatol": cfg.tol_log,
                                "maxfev": cfg.budget_per_start,
                                "disp": False})
        any_success = any_success or bool(res.success)
    if best["z"] is None or not math.isfinite(best["value"]):
        raise SelectorFailureError(
            "cross-validation found no finite objective from any start")
    on_edge = bool(((best["z"] - lo) < 1e-3).any() or ((hi - best["z"]) < 1e-3).any())
    return SelectorResult(
        h=np.exp(best["z"]),
        objective_value=best["value"],
        evaluations=best["count"],
        converged=any_success and not on_edge,
        boundary=on_edge,
    )


def rot_density_bandwidth(e) -> float:
    """Normal-reference bandwidth for a kernel density of the residuals."""
    e = np.asarray(e, dtype=float)
    n = e.shape[0]
    if n < 2:
        raise DegenerateResidualsError("need at least two residuals")
    sigma = _robust_scale(e)
    if sigma <= 0:
        raise DegenerateResidualsError("residuals have zero spread")
    return sigma * (4.0 / (3.0 * n)) ** 0.2


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section search for the maximizer of a unimodal f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def likelihood_cv_density_bandwidth(e) -> float:
    """Bandwidth maximizing the leave-one-out log likelihood of the
    residual kernel density, searched by golden section over log b."""
    e = np.asarray(e, dtype=float)
    n = e.shape[0]
    rot = rot_density_bandwidth(e)
    diff = e[:, None] - e[None, :]
    off = ~np.eye(n, dtype=bool)

    def loo_loglik(log_b: float) -> float:
        b = math.exp(log_b)
        K = np.exp(-0.5 * (diff / b) ** 2)
        s = np.where(off, K, 0.0).sum(axis=1) / ((n - 1) * b * SQRT_2PI)
        if (s <= 0).any():
            return -math.inf
        return float(np.log(s).sum())

    log_opt = _golden_section_max(loo_loglik,
                                  math.log(0.01 * rot), math.log(100.0 * rot),
                                  tol=1e-6)
    return math.exp(log_opt)
