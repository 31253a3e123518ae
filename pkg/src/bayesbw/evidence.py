"""Marginal likelihood estimation and Bayes-factor comparison between the
local constant and local linear regression estimators.

Both estimators work on the chain's log-bandwidth draws: the candidate's
identity P(y) = likelihood * prior / posterior evaluated at a high-density
point (posterior ordinate replaced by a product-Gaussian KDE of the draws),
and the modified harmonic mean with a truncated-Gaussian weight function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import chi2

from .errors import EvidenceUndefinedError
from .kernels import SQRT_2PI
from .sampler import (
    PosteriorChain,
    PriorSpec,
    chain_log_likelihoods,
    log_prior_log_scale,
    log_pseudo_likelihood,
)
from .types import BandwidthSet, Dataset


@dataclass(frozen=True)
class EvidenceReport:
    """Log marginal likelihood pair for one regression estimator."""

    lml_chib: float
    lml_geweke: float
    estimator_tag: str
    theta_star: BandwidthSet


@dataclass(frozen=True)
class BayesFactor:
    """Oriented Bayes factor: value >= 1 with a tag naming the winner.

    When exp overflows, ``value`` is inf, ``overflow`` is set, and
    ``log_value`` carries the usable number.
    """

    value: float
    log_value: float
    favored: str
    overflow: bool = False


KASS_RAFTERY_BANDS = (
    (3.0, "insignificant"),
    (20.0, "positive"),
    (150.0, "strong"),
    (math.inf, "very strong"),
)


def _kde_rot_bandwidths(draws: np.ndarray) -> np.ndarray:
    """Normal-reference bandwidths for a product-Gaussian KDE of the draws."""
    n, dim = draws.shape
    factor = (4.0 / ((dim + 2) * n)) ** (1.0 / (dim + 4))
    sd = draws.std(axis=0, ddof=1)
    iqr = np.subtract(*np.percentile(draws, [75, 25], axis=0)) / 1.34
    sigma = np.where((iqr > 0) & (iqr < sd), iqr, sd)
    if (sigma <= 0).any():
        raise EvidenceUndefinedError("a chain coordinate has zero spread")
    return sigma * factor


def kde_log_ordinate(draws: np.ndarray, point: np.ndarray,
                     bandwidths: np.ndarray | None = None) -> float:
    """Log density of a product-Gaussian KDE of ``draws`` at ``point``."""
    bw = _kde_rot_bandwidths(draws) if bandwidths is None else bandwidths
    u = (point[None, :] - draws) / bw
    logs = -0.5 * (u * u).sum(axis=1) - np.log(bw).sum() \
        - draws.shape[1] * math.log(SQRT_2PI)
    return float(logsumexp(logs) - math.log(draws.shape[0]))


def chib_log_evidence(draws: np.ndarray, log_joint, point=None) -> float:
    """Candidate's identity estimate of the log evidence.

    ``draws`` are posterior samples on an unconstrained scale and
    ``log_joint`` maps a point on that scale to log likelihood + log prior.
    The evaluation point defaults to the sample mean of the draws.
    """
    draws = np.asarray(draws, dtype=float)
    theta = draws.mean(axis=0) if point is None else np.asarray(point, float)
    log_ord = kde_log_ordinate(draws, theta)
    if log_ord < math.log(1e-300):
        raise EvidenceUndefinedError(
            "posterior KDE ordinate underflows at the evaluation point; "
            "a longer chain is needed")
    return float(log_joint(theta)) - log_ord


def geweke_log_evidence(draws: np.ndarray, log_joint_values,
                        truncation_mass: float = 0.9) -> float:
    """Modified harmonic-mean estimate of the log evidence.

    The weight function is the Gaussian fitted to the draws, truncated to
    its own ellipsoid of probability ``truncation_mass`` and renormalized,
    so it integrates to one over the retained region by construction.
    """
    draws = np.asarray(draws, dtype=float)
    values = np.asarray(log_joint_values, dtype=float)
    n, dim = draws.shape
    mean = draws.mean(axis=0)
    cov = np.cov(draws, rowvar=False).reshape(dim, dim)
    chol = np.linalg.cholesky(cov + 1e-12 * np.trace(cov) / dim * np.eye(dim))
    centered = draws - mean
    white = np.linalg.solve(chol, centered.T).T
    r2 = (white * white).sum(axis=1)
    threshold = chi2.ppf(truncation_mass, df=dim)
    inside = r2 <= threshold
    if inside.mean() < 0.01:
        raise EvidenceUndefinedError(
            "fewer than 1% of draws fall inside the truncation ellipsoid")
    log_det = np.log(np.diag(chol)).sum()
    log_f = (-0.5 * r2[inside] - log_det - dim * math.log(SQRT_2PI)
             - math.log(truncation_mass))
    log_inv = logsumexp(log_f - values[inside]) - math.log(n)
    return float(-log_inv)


def _chain_phi(chain: PosteriorChain) -> np.ndarray:
    return np.log(chain.samples)


def posterior_mean_log_scale(chain: PosteriorChain) -> BandwidthSet:
    """Evaluation point for the evidence: posterior mean on the log scale."""
    theta = np.exp(_chain_phi(chain).mean(axis=0))
    return BandwidthSet(h=theta[:-1], b=float(theta[-1]))


def lml_chib(data: Dataset, chain: PosteriorChain, prior: PriorSpec,
             estimator: str) -> float:
    """Log marginal likelihood via the candidate's identity on log-bandwidth
    coordinates; one extra likelihood evaluation at the posterior mean."""
    phi = _chain_phi(chain)

    def log_joint(p):
        h, b = np.exp(p[:-1]), float(math.exp(p[-1]))
        ll = log_pseudo_likelihood(data, h, b, estimator)
        return ll + log_prior_log_scale(p, prior, data.n, data.d)

    return chib_log_evidence(phi, log_joint)


def lml_geweke(data: Dataset, chain: PosteriorChain, prior: PriorSpec,
               estimator: str, truncation_mass: float = 0.9) -> float:
    """Log marginal likelihood via the modified harmonic mean, reusing the
    per-draw likelihood values recorded in the chain."""
    phi = _chain_phi(chain)
    values = chain_log_likelihoods(chain) \
        + log_prior_log_scale(phi, prior, data.n, data.d)
    return geweke_log_evidence(phi, values, truncation_mass)


def evidence_report(data: Dataset, chain: PosteriorChain,
                    prior: PriorSpec, estimator: str) -> EvidenceReport:
    return EvidenceReport(
        lml_chib=lml_chib(data, chain, prior, estimator),
        lml_geweke=lml_geweke(data, chain, prior, estimator),
        estimator_tag=estimator,
        theta_star=posterior_mean_log_scale(chain),
    )


def bayes_factor(lml_a: float, lml_b: float) -> BayesFactor:
    """exp(lml_a - lml_b), oriented so the reported value is >= 1."""
    diff = lml_a - lml_b
    favored = "a" if diff >= 0 else "b"
    log_value = abs(diff)
    if log_value > 700.0:
        return BayesFactor(value=math.inf, log_value=log_value,
                           favored=favored, overflow=True)
    return BayesFactor(value=math.exp(log_value), log_value=log_value,
                       favored=favored)


def interpret_bf(bf: float) -> str:
    """Evidence band for an oriented Bayes factor (boundaries round up)."""
    if bf < 1.0:
        raise ValueError("orient the Bayes factor so it is >= 1 first")
    for upper, label in KASS_RAFTERY_BANDS:
        if bf < upper:
            return label
    return KASS_RAFTERY_BANDS[-1][1]
