"""Gaussian product kernels, leave-one-out local fitting, residuals, and the
residual-mixture error density.

Everything here is dense O(n^2 d): no tree or binning approximations.  All
functions are pure; reductions run in fixed array order, so results are
deterministic regardless of caller-side parallelism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateResidualsError,
    DegenerateWindowError,
    RankDeficiencyError,
)
from .types import Dataset, LocalFit, check_bandwidths

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Ties in residuals: |e_i - e_j| <= TIE_RTOL * max(1, |e_i|).
TIE_RTOL = 1e-12
# Local design matrices above this condition number get one ridge retry.
COND_LIMIT = 1e12
RIDGE_SCALE = 1e-8
# Below this total kernel mass a fitting window is degenerate.
WEIGHT_FLOOR = 1e-300
# Cap on scratch array elements for blocked batch solves (~32 MB of float64).
_BLOCK_ELEMS = 4_000_000

ESTIMATORS = ("local_linear", "local_constant")


def _check_estimator(estimator: str) -> str:
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}")
    return estimator


def gaussian_kernel(u):
    """Standard normal density, the kernel used throughout."""
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u) / SQRT_2PI


def product_kernel_weight(x_target, x_source, h) -> float:
    """Product Gaussian kernel weight between two d-vectors.

    Returns prod_k phi((x_target_k - x_source_k) / h_k) / h_k.
    """
    h = check_bandwidths(h)
    u = (np.atleast_1d(np.asarray(x_target, float))
         - np.atleast_1d(np.asarray(x_source, float))) / h
    return float(np.prod(gaussian_kernel(u) / h))


def weight_matrix(points: np.ndarray, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """W[q, i] = product kernel weight between query q and observation i."""
    points = np.atleast_2d(np.asarray(points, float))
    sq = np.zeros((points.shape[0], x.shape[0]))
    for k in range(x.shape[1]):
        u = (points[:, k, None] - x[None, :, k]) / h[k]
        sq += u * u
    return np.exp(-0.5 * sq) / (SQRT_2PI ** x.shape[1] * np.prod(h))


def _solve_with_ridge(S: np.ndarray, T: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Solve a stack of (d+1)x(d+1) systems; one ridge retry on bad conditioning."""
    p = S.shape[-1]
    cond = np.linalg.cond(S)
    bad = ~(cond < COND_LIMIT)
    if bad.any():
        S = S.copy()
        lam = RIDGE_SCALE * np.trace(S[bad], axis1=-2, axis2=-1) / p
        S[bad] += lam[:, None, None] * np.eye(p)
        cond = np.linalg.cond(S[bad])
        if (~(cond < COND_LIMIT)).any():
            j = int(indices[bad][~(cond < COND_LIMIT)][0])
            raise RankDeficiencyError(
                f"local design matrix at point {j} is rank deficient "
                f"even after ridge regularization", index=j)
    try:
        return np.linalg.solve(S, T[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond gate above
        raise RankDeficiencyError(f"local solve failed: {exc}") from exc


def _local_linear_batch(W, points, x, y, indices):
    """Weighted least-squares fits at each query row of ``points``.

    W must already carry any leave-one-out exclusions (zeroed columns).
    Design rows are (1, x_i - x_q), so the slope block estimates the
    gradient of the regression function at the query.
    Returns (m_hat (m,), gradient (m, d)).
    """
    m, d = points.shape[0], x.shape[1]
    sw = W.sum(axis=1)
    low = sw < WEIGHT_FLOOR
    if low.any():
        j = int(indices[low][0])
        raise DegenerateWindowError(
            f"kernel weights underflow at point {j}; bandwidths too small",
            index=j)
    m_hat = np.empty(m)
    grad = np.empty((m, d))
    block = max(1, _BLOCK_ELEMS // max(1, x.shape[0] * d))
    for lo in range(0, m, block):
        hi = min(m, lo + block)
        Wb = W[lo:hi]
        diff = x[None, :, :] - points[lo:hi, None, :]        # (b, n, d)
        wd = Wb[:, :, None] * diff
        S = np.empty((hi - lo, d + 1, d + 1))
        T = np.empty((hi - lo, d + 1))
        S[:, 0, 0] = sw[lo:hi]
        S[:, 0, 1:] = wd.sum(axis=1)
        S[:, 1:, 0] = S[:, 0, 1:]
        S[:, 1:, 1:] = np.einsum("qnd,qne->qde", wd, diff)
        T[:, 0] = Wb @ y
        T[:, 1:] = np.einsum("qnd,n->qd", wd, y)
        sol = _solve_with_ridge(S, T, indices[lo:hi])
        m_hat[lo:hi] = sol[:, 0]
        grad[lo:hi] = sol[:, 1:]
    return m_hat, grad


def _local_constant_batch(W, y, indices):
    sw = W.sum(axis=1)
    low = sw < WEIGHT_FLOOR
    if low.any():
        j = int(indices[low][0])
        raise DegenerateWindowError(
            f"kernel weights underflow at point {j}; bandwidths too small",
            index=j)
    return (W @ y) / sw


def local_linear_fit_loo(data: Dataset, h, j: int) -> LocalFit:
    """Leave-one-out local linear fit at observation ``j`` (0-based).

    Solves the kernel-weighted least-squares problem over all i != j with
    design rows (1, x_i - x_j): the intercept estimates the regression level
    at x_j and the slope block its gradient.
    """
    h = check_bandwidths(h)
    W = weight_matrix(data.x[j:j + 1], data.x, h)
    W[0, j] = 0.0
    m_hat, grad = _local_linear_batch(W, data.x[j:j + 1], data.x, data.y,
                                      np.array([j]))
    return LocalFit(m_hat=float(m_hat[0]), gradient=grad[0])


def local_constant_fit_loo(data: Dataset, h, j: int) -> float:
    """Leave-one-out kernel-weighted mean of y at observation ``j``."""
    h = check_bandwidths(h)
    W = weight_matrix(data.x[j:j + 1], data.x, h)
    W[0, j] = 0.0
    return float(_local_constant_batch(W, data.y, np.array([j]))[0])


def residuals_loo(data: Dataset, h, estimator: str = "local_linear") -> np.ndarray:
    """Leave-one-out residuals e_i = y_i - m_hat_{-i}(x_i; h) for all i."""
    _check_estimator(estimator)
    h = check_bandwidths(h)
    if h.shape[0] != data.d:
        raise ValueError(f"expected {data.d} bandwidths, got {h.shape[0]}")
    W = weight_matrix(data.x, data.x, h)
    np.fill_diagonal(W, 0.0)
    idx = np.arange(data.n)
    if estimator == "local_constant":
        m_hat = _local_constant_batch(W, data.y, idx)
    else:
        m_hat, _ = _local_linear_batch(W, data.x, data.x, data.y, idx)
    return data.y - m_hat


def predict(data: Dataset, h, points, estimator: str = "local_linear") -> np.ndarray:
    """Full-sample regression estimate at arbitrary points (m, d)."""
    _check_estimator(estimator)
    h = check_bandwidths(h)
    points = np.atleast_2d(np.asarray(points, float))
    if points.shape[1] != data.d:
        raise ValueError(f"query points have {points.shape[1]} columns, expected {data.d}")
    W = weight_matrix(points, data.x, h)
    idx = np.arange(points.shape[0])
    if estimator == "local_constant":
        return _local_constant_batch(W, data.y, idx)
    m_hat, _ = _local_linear_batch(W, points, data.x, data.y, idx)
    return m_hat


@dataclass(frozen=True)
class ExclusionIndex:
    """For each residual i, which j may enter its leave-one-out density sum.

    mask[i, j] is True when e_j differs from e_i beyond the tie tolerance
    (in particular mask[i, i] is always False); n_excluded[i] counts the
    dropped terms, so each inner sum has n - n_excluded[i] terms.
    """

    mask: np.ndarray
    n_excluded: np.ndarray

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    def indices(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.mask[i])


def build_exclusion_index(e) -> ExclusionIndex:
    """Identify tied residual pairs that would contribute phi(0)/b terms."""
    e = np.asarray(e, dtype=float)
    diff = e[:, None] - e[None, :]
    tied = np.abs(diff) <= TIE_RTOL * np.maximum(1.0, np.abs(e))[:, None]
    mask = ~tied
    n_excluded = tied.sum(axis=1)
    if (n_excluded >= e.shape[0]).any():
        raise DegenerateResidualsError(
            "all residuals tie with each other; leave-one-out density undefined")
    return ExclusionIndex(mask=mask, n_excluded=n_excluded)


def error_density(e, b: float, eps):
    """Residual-mixture density: mean over i of phi((eps - e_i)/b)/b.

    ``eps`` may be a scalar or an array of evaluation points.
    """
    b = float(check_bandwidths(b)[0])
    e = np.asarray(e, dtype=float)
    eps_arr = np.asarray(eps, dtype=float)
    u = (eps_arr[..., None] - e) / b
    out = gaussian_kernel(u).mean(axis=-1) / b
    return float(out) if np.isscalar(eps) or eps_arr.ndim == 0 else out


def error_density_loo(e, idx: ExclusionIndex, b: float, i: int) -> float:
    """Density ordinate of e_i from the other residuals, ties dropped."""
    b = float(check_bandwidths(b)[0])
    e = np.asarray(e, dtype=float)
    keep = idx.mask[i]
    m = int(keep.sum())
    if m == 0:
        raise DegenerateResidualsError(f"residual {i} has an empty exclusion sum")
    u = (e[i] - e[keep]) / b
    return float(gaussian_kernel(u).sum() / (b * m))


def loo_density_ordinates(e: np.ndarray, idx: ExclusionIndex, b: float) -> np.ndarray:
    """All n leave-one-out density ordinates at once (likelihood fast path)."""
    diff = (e[:, None] - e[None, :]) / b
    K = np.exp(-0.5 * diff * diff)
    s = np.where(idx.mask, K, 0.0).sum(axis=1)
    return s / ((e.shape[0] - idx.n_excluded) * b * SQRT_2PI)
