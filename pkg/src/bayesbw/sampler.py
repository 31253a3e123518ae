"""Joint posterior sampling of regression and error-density bandwidths.

The error density is the residual location-mixture, the likelihood the
product of leave-one-out mixture ordinates with tied terms dropped, and the
sampler an adaptive random-walk Metropolis with one joint block for the
regression bandwidths (target acceptance 0.234) and a scalar block for the
density bandwidth (target 0.44).  Step sizes adapt by Robbins-Monro during
burn-in and stay frozen afterwards, so recorded draws come from a fixed
kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit, gammaln, logit
from scipy.stats import beta as beta_dist
from scipy.stats import invgamma

from .errors import (
    BayesbwError,
    SamplerInitError,
    ValidationError,
)
from .kernels import (
    build_exclusion_index,
    loo_density_ordinates,
    residuals_loo,
    _check_estimator,
)
from .selectors import rot_density_bandwidth, rot_regression_bandwidth
from .types import BandwidthSet, Dataset

PRIOR_FAMILIES = ("inverse_gamma", "exponential", "beta_exponent")

# Bandwidth convergence-rate exponents: b shrinks like n^(-1/5) and each
# h_k like n^(-1/(d+4)), so priors sit on sample-size-free constants.
RATE_B = 0.2


def rate_h(d: int) -> float:
    return 1.0 / (d + 4)


@dataclass(frozen=True)
class PriorSpec:
    """Prior family and hyperparameters for the squared-bandwidth constants.

    inverse_gamma: IG(alpha, beta) on b0^2 and each h0k^2 (defaults 1, 0.05).
    exponential: Exp(tau) on b^2 and each h_k^2 (default tau=1).
    beta_exponent: Beta(psi, kappa) on the exponents of b=n^-omega and
    h_k=n^-eta_k; psi_h/kappa_h may be scalars or per-regressor sequences.
    """

    family: str = "inverse_gamma"
    alpha_b: float = 1.0
    beta_b: float = 0.05
    alpha_h: float = 1.0
    beta_h: float = 0.05
    tau: float = 1.0
    psi_b: float = 1.0
    kappa_b: float = 1.0
    psi_h: float | tuple = 1.0
    kappa_h: float | tuple = 1.0

    def __post_init__(self):
        if self.family not in PRIOR_FAMILIES:
            raise ValidationError(
                f"unknown prior family {self.family!r}, expected {PRIOR_FAMILIES}")
        for name in ("alpha_b", "beta_b", "alpha_h", "beta_h", "tau",
                     "psi_b", "kappa_b"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"prior hyperparameter {name} must be > 0")
        for name in ("psi_h", "kappa_h"):
            vals = np.atleast_1d(np.asarray(getattr(self, name), float))
            if (vals <= 0).any():
                raise ValidationError(f"prior hyperparameter {name} must be > 0")

    def beta_h_params(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        psi = np.broadcast_to(np.asarray(self.psi_h, float), (d,))
        kappa = np.broadcast_to(np.asarray(self.kappa_h, float), (d,))
        return psi, kappa


@dataclass(frozen=True)
class RateReparam:
    """Bandwidths factored into sample-size-free constants times known rates."""

    b0: float
    h0: np.ndarray
    n: int

    def to_bandwidths(self) -> BandwidthSet:
        d = np.atleast_1d(self.h0).shape[0]
        return BandwidthSet(
            h=np.atleast_1d(self.h0) * self.n ** (-rate_h(d)),
            b=self.b0 * self.n ** (-RATE_B),
        )

    @classmethod
    def from_bandwidths(cls, bw: BandwidthSet, n: int) -> "RateReparam":
        return cls(b0=bw.b * n ** RATE_B, h0=bw.h * n ** rate_h(bw.d), n=n)


@dataclass(frozen=True)
class SamplerConfig:
    """Run-length, acceptance targets, seeding and initialization."""

    seed: int
    burn_in: int = 1000
    draws: int = 10000
    target_accept_h: float = 0.234
    target_accept_b: float = 0.44
    init: str | BandwidthSet = "rot"
    adapt_constant: float = 1.0
    init_step: float = 0.1

    def __post_init__(self):
        if self.draws < 100:
            raise ValidationError("draws must be at least 100")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be nonnegative")
        for name in ("target_accept_h", "target_accept_b"):
            t = getattr(self, name)
            if not 0.0 < t < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1)")
        if self.adapt_constant <= 0 or self.init_step <= 0:
            raise ValidationError("adapt_constant and init_step must be > 0")


@dataclass(frozen=True)
class ChainMeta:
    n: int
    d: int
    estimator: str
    prior: PriorSpec
    config: SamplerConfig


@dataclass(frozen=True)
class PosteriorChain:
    """Recorded draws on the natural bandwidth scale.

    samples columns are h_1..h_d followed by b; log_post holds the log
    pseudo-posterior (likelihood plus prior density in the prior's own
    parameterization) per draw; step histories cover burn-in and recording.
    """

    samples: np.ndarray
    log_post: np.ndarray
    accept_h: np.ndarray
    accept_b: np.ndarray
    step_h: np.ndarray
    step_b: np.ndarray
    meta: ChainMeta

    @property
    def draws(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1] - 1

    def bandwidth_estimate(self) -> BandwidthSet:
        """Ergodic-average point estimate of all bandwidths."""
        m = self.samples.mean(axis=0)
        return BandwidthSet(h=m[:-1], b=float(m[-1]))


# ---------------------------------------------------------------------------
# Likelihood, priors, posterior
# ---------------------------------------------------------------------------

def log_pseudo_likelihood(data: Dataset, h, b: float,
                          estimator: str = "local_linear",
                          info: dict | None = None) -> float:
    """Sum over i of the log leave-one-out mixture ordinate of residual i.

    Degeneracies (underflowing windows, rank-deficient local designs, total
    residual ties, vanishing ordinates) map to -inf rather than raising, so
    optimizers and the Metropolis walk simply avoid those regions; the cause
    lands in ``info`` when a dict is supplied.
    """
    b = float(b)
    if not math.isfinite(b) or b <= 0:
        if info is not None:
            info["degenerate_cause"] = f"nonpositive density bandwidth {b}"
        return -math.inf
    try:
        e = residuals_loo(data, h, estimator)
        idx = build_exclusion_index(e)
    except BayesbwError as exc:
        if info is not None:
            info["degenerate_cause"] = f"{type(exc).__name__}: {exc}"
        return -math.inf
    s = loo_density_ordinates(e, idx, b)
    if not (s > 0).all():
        if info is not None:
            info["degenerate_cause"] = "mixture ordinate underflow"
        return -math.inf
    return float(np.log(s).sum())


def log_prior(bw: BandwidthSet, prior: PriorSpec, n: int) -> float:
    """Log prior density at the given bandwidths, in the prior family's own
    parameterization (squared constants, squared bandwidths, or exponents).
    Out-of-support points return -inf."""
    d = bw.d
    if prior.family == "inverse_gamma":
        rp = RateReparam.from_bandwidths(bw, n)
        out = invgamma.logpdf(rp.b0 ** 2, a=prior.alpha_b, scale=prior.beta_b)
        out += invgamma.logpdf(np.asarray(rp.h0) ** 2,
                               a=prior.alpha_h, scale=prior.beta_h).sum()
        return float(out)
    if prior.family == "exponential":
        z = np.append(bw.h ** 2, bw.b ** 2)
        return float((math.log(prior.tau) - prior.tau * z).sum())
    # beta_exponent
    log_n = math.log(n)
    omega = -math.log(bw.b) / log_n
    eta = -np.log(bw.h) / log_n
    if not (0 < omega < 1) or not ((eta > 0) & (eta < 1)).all():
        return -math.inf
    psi_h, kappa_h = prior.beta_h_params(d)
    out = beta_dist.logpdf(omega, prior.psi_b, prior.kappa_b)
    out += beta_dist.logpdf(eta, psi_h, kappa_h).sum()
    return float(out)


def log_prior_log_scale(phi, prior: PriorSpec, n: int, d: int):
    """Log prior density of the vector phi = (log h_1..log h_d, log b),
    change-of-variable terms included.

    Accepts a single (d+1,) vector or a stack (m, d+1); returns float or (m,).
    """
    phi = np.asarray(phi, dtype=float)
    single = phi.ndim == 1
    P = phi[None, :] if single else phi
    log_n = math.log(n)
    if prior.family == "inverse_gamma":
        # log IG(e^L) + log|d e^L / d phi| collapses to
        # alpha log beta - lgamma(alpha) - alpha L - beta e^{-L} + log 2,
        # with L = log of the squared rate constant; evaluated analytically
        # so extreme proposals underflow to -inf instead of producing nans.
        rates = np.append(np.full(d, rate_h(d)), RATE_B)
        alphas = np.append(np.full(d, prior.alpha_h), prior.alpha_b)
        betas = np.append(np.full(d, prior.beta_h), prior.beta_b)
        L = 2.0 * (P + rates * log_n)
        with np.errstate(over="ignore"):
            comp = (alphas * np.log(betas) - gammaln(alphas) - alphas * L
                    - betas * np.exp(-L) + math.log(2.0))
        out = comp.sum(axis=1)
    elif prior.family == "exponential":
        with np.errstate(over="ignore"):
            comp = (math.log(prior.tau) - prior.tau * np.exp(2.0 * P)
                    + math.log(2.0) + 2.0 * P)
        out = comp.sum(axis=1)
    else:
        expo = -P / log_n
        psi_h, kappa_h = prior.beta_h_params(d)
        psis = np.append(psi_h, prior.psi_b)
        kappas = np.append(kappa_h, prior.kappa_b)
        inside = ((expo > 0) & (expo < 1)).all(axis=1)
        out = np.full(P.shape[0], -np.inf)
        if inside.any():
            comp = beta_dist.logpdf(expo[inside], psis, kappas) - math.log(log_n)
            out[inside] = comp.sum(axis=1)
    return float(out[0]) if single else out


def log_posterior(data: Dataset, h, b: float, prior: PriorSpec,
                  estimator: str = "local_linear") -> float:
    """Log pseudo-posterior up to the normalizing constant."""
    lp = log_prior(BandwidthSet(h=h, b=b), prior, data.n)
    if not math.isfinite(lp):
        return -math.inf
    ll = log_pseudo_likelihood(data, h, b, estimator)
    return ll + lp


# ---------------------------------------------------------------------------
# Walk parameterizations
# ---------------------------------------------------------------------------

class _LogScaleParam:
    """Walk on (log h, log b); used by the inverse-gamma and exponential
    families.  Affine to a walk on the log squared rate constants, so the
    kernel family is unchanged and the adaptation absorbs the scale."""

    def __init__(self, prior: PriorSpec, n: int, d: int):
        self.prior, self.n, self.d = prior, n, d

    def natural(self, state: np.ndarray) -> tuple[np.ndarray, float]:
        bw = np.exp(state)
        return bw[:-1], float(bw[-1])

    def natural_batch(self, states: np.ndarray) -> np.ndarray:
        return np.exp(states)

    def state_from(self, h: np.ndarray, b: float) -> np.ndarray:
        return np.log(np.append(h, b))

    def log_prior_state(self, state) -> float:
        return log_prior_log_scale(state, self.prior, self.n, self.d)

    def log_prior_state_batch(self, states) -> np.ndarray:
        return log_prior_log_scale(states, self.prior, self.n, self.d)


class _LogitExponentParam:
    """Walk on logit exponents for the beta family: b = n^-omega with
    omega = expit(state), likewise for each h_k."""

    _CLIP = 1e-4

    def __init__(self, prior: PriorSpec, n: int, d: int):
        self.prior, self.n, self.d = prior, n, d
        self.log_n = math.log(n)
        psi_h, kappa_h = prior.beta_h_params(d)
        self._psis = np.append(psi_h, prior.psi_b)
        self._kappas = np.append(kappa_h, prior.kappa_b)

    def natural(self, state: np.ndarray) -> tuple[np.ndarray, float]:
        bw = self.n ** (-expit(state))
        return bw[:-1], float(bw[-1])

    def natural_batch(self, states: np.ndarray) -> np.ndarray:
        return self.n ** (-expit(states))

    def state_from(self, h: np.ndarray, b: float) -> np.ndarray:
        expo = -np.log(np.append(h, b)) / self.log_n
        return logit(np.clip(expo, self._CLIP, 1.0 - self._CLIP))

    def log_prior_state(self, state) -> float:
        expo = expit(np.asarray(state, float))
        dens = beta_dist.logpdf(expo, self._psis, self._kappas)
        jac = np.log(expo) + np.log1p(-expo)
        return float((dens + jac).sum())

    def log_prior_state_batch(self, states) -> np.ndarray:
        expo = expit(np.asarray(states, float))
        dens = beta_dist.logpdf(expo, self._psis, self._kappas)
        jac = np.log(expo) + np.log1p(-expo)
        return (dens + jac).sum(axis=1)


def _make_param(prior: PriorSpec, n: int, d: int):
    if prior.family == "beta_exponent":
        return _LogitExponentParam(prior, n, d)
    return _LogScaleParam(prior, n, d)


# ---------------------------------------------------------------------------
# Generic adaptive random-walk Metropolis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    """One Metropolis block: coordinate indices and its acceptance target."""

    idx: np.ndarray
    target_accept: float


@dataclass(frozen=True)
class WalkResult:
    states: np.ndarray       # (draws, dim) post burn-in
    log_target: np.ndarray   # (draws,)
    accepts: np.ndarray      # (draws, n_blocks) bool
    steps: np.ndarray        # (burn_in + draws, n_blocks) step sizes


def adaptive_random_walk(log_target, x0, blocks, burn_in: int, draws: int,
                         rng: np.random.Generator, adapt_constant: float = 1.0,
                         init_step: float = 0.1) -> WalkResult:
    """Blockwise Gaussian random-walk Metropolis with Robbins-Monro step
    adaptation toward each block's target acceptance rate.

    log step sizes move by c * (accepted - target) / max(1, t) with
    c = adapt_constant / (target * (1 - target)), during burn-in only.
    """
    x = np.asarray(x0, dtype=float).copy()
    lp = float(log_target(x))
    if not math.isfinite(lp):
        raise SamplerInitError("initial point has non-finite log target")
    nb = len(blocks)
    log_step = np.full(nb, math.log(init_step))
    c_eff = np.array([adapt_constant / (b.target_accept * (1 - b.target_accept))
                      for b in blocks])
    total = burn_in + draws
    states = np.empty((draws, x.size))
    lps = np.empty(draws)
    accepts = np.zeros((draws, nb), dtype=bool)
    steps = np.empty((total, nb))
    acc_iter = np.zeros(nb, dtype=bool)
    for t in range(total):
        for bi, blk in enumerate(blocks):
            prop = x.copy()
            prop[blk.idx] += math.exp(log_step[bi]) * rng.standard_normal(blk.idx.size)
            lp_prop = float(log_target(prop))
            u = rng.uniform()
            log_u = math.log(u) if u > 0.0 else -math.inf
            accept = math.isfinite(lp_prop) and (lp_prop - lp) > log_u
            if accept:
                x, lp = prop, lp_prop
                if not math.isfinite(lp):
                    raise RuntimeError(
                        f"accepted state has non-finite log target at iteration "
                        f"{t}: state={x!r}")
            acc_iter[bi] = accept
            if t < burn_in:
                log_step[bi] += c_eff[bi] * ((1.0 if accept else 0.0)
                                             - blk.target_accept) / max(1, t)
                log_step[bi] = min(max(log_step[bi], math.log(1e-6)), math.log(1e3))
            steps[t, bi] = math.exp(log_step[bi])
        if t >= burn_in:
            r = t - burn_in
            states[r] = x
            lps[r] = lp
            accepts[r] = acc_iter
    return WalkResult(states=states, log_target=lps, accepts=accepts, steps=steps)


# ---------------------------------------------------------------------------
# Posterior sampling for the bandwidth model
# ---------------------------------------------------------------------------

def _make_model_target(data: Dataset, prior: PriorSpec, estimator: str, param):
    """Model log target in walk coordinates, with the residual bundle
    memoized on the regression-bandwidth subvector so scalar b moves skip
    the leave-one-out refits."""

    @lru_cache(maxsize=8)
    def bundle(h_key: bytes):
        h = np.frombuffer(h_key, dtype=float)
        try:
            e = residuals_loo(data, h, estimator)
            idx = build_exclusion_index(e)
        except BayesbwError:
            return None
        return e, idx

    def log_target(state: np.ndarray) -> float:
        lp_prior = param.log_prior_state(state)
        if not math.isfinite(lp_prior):
            return -math.inf
        h, b = param.natural(state)
        if not (np.isfinite(h).all() and math.isfinite(b)) or b <= 0 or (h <= 0).any():
            return -math.inf
        bun = bundle(h.tobytes())
        if bun is None:
            return -math.inf
        e, idx = bun
        s = loo_density_ordinates(e, idx, b)
        if not (s > 0).all():
            return -math.inf
        return float(np.log(s).sum()) + lp_prior

    return log_target


def _initial_bandwidths(data: Dataset, cfg: SamplerConfig,
                        estimator: str) -> tuple[np.ndarray, float]:
    if isinstance(cfg.init, BandwidthSet):
        return cfg.init.h, cfg.init.b
    if cfg.init != "rot":
        raise ValidationError(f"unknown init {cfg.init!r}; use 'rot' or a BandwidthSet")
    h = rot_regression_bandwidth(data)
    e = residuals_loo(data, h, estimator)
    return h, rot_density_bandwidth(e)


def sample_posterior(data: Dataset, prior: PriorSpec | None = None,
                     cfg: SamplerConfig | None = None,
                     estimator: str = "local_linear") -> PosteriorChain:
    """Draw from the joint pseudo-posterior of (h, b).

    Fully reproducible from cfg.seed.  Raises SamplerInitError when no
    starting point with finite log posterior is found after ten jittered
    retries around the rule-of-thumb initialization.
    """
    _check_estimator(estimator)
    prior = prior or PriorSpec()
    if cfg is None:
        raise ValidationError("a SamplerConfig with an explicit seed is required")
    rng = np.random.default_rng(cfg.seed)
    param = _make_param(prior, data.n, data.d)
    log_target = _make_model_target(data, prior, estimator, param)

    h0, b0 = _initial_bandwidths(data, cfg, estimator)
    state0 = param.state_from(np.asarray(h0, float), float(b0))
    attempts = 0
    while not math.isfinite(log_target(state0)):
        attempts += 1
        if attempts > 10:
            raise SamplerInitError(
                "no initial point with finite log posterior after 10 jittered tries")
        state0 = param.state_from(np.asarray(h0, float), float(b0)) \
            + 0.5 * rng.standard_normal(state0.size)

    blocks = [
        Block(idx=np.arange(data.d), target_accept=cfg.target_accept_h),
        Block(idx=np.array([data.d]), target_accept=cfg.target_accept_b),
    ]
    walk = adaptive_random_walk(log_target, state0, blocks,
                                cfg.burn_in, cfg.draws, rng,
                                adapt_constant=cfg.adapt_constant,
                                init_step=cfg.init_step)

    samples = param.natural_batch(walk.states)
    if not (samples > 0).all():
        raise RuntimeError("recorded chain contains nonpositive bandwidths")
    # Re-express the recorded log target as likelihood + prior density in the
    # prior's own parameterization (drops the walk's change-of-variable terms).
    log_lik = walk.log_target - param.log_prior_state_batch(walk.states)
    prior_public = np.array([
        log_prior(BandwidthSet(h=row[:-1], b=float(row[-1])), prior, data.n)
        for row in samples])
    meta = ChainMeta(n=data.n, d=data.d, estimator=estimator,
                     prior=prior, config=cfg)
    return PosteriorChain(
        samples=samples,
        log_post=log_lik + prior_public,
        accept_h=walk.accepts[:, 0].copy(),
        accept_b=walk.accepts[:, 1].copy(),
        step_h=walk.steps[:, 0].copy(),
        step_b=walk.steps[:, 1].copy(),
        meta=meta,
    )


def chain_log_likelihoods(chain: PosteriorChain) -> np.ndarray:
    """Per-draw log pseudo-likelihood, recovered from the recorded log
    posterior by subtracting the prior density at each draw."""
    prior_vals = np.array([
        log_prior(BandwidthSet(h=row[:-1], b=float(row[-1])),
                  chain.meta.prior, chain.meta.n)
        for row in chain.samples])
    return chain.log_post - prior_vals


# ---------------------------------------------------------------------------
# Chain diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterSummary:
    name: str
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    batch_mean_sd: float
    sif: float

    @property
    def sif_defined(self) -> bool:
        return math.isfinite(self.sif)


@dataclass(frozen=True)
class PosteriorSummary:
    parameters: list[ParameterSummary]
    draws_used: int
    truncated: bool
    accept_rate_h: float
    accept_rate_b: float

    def __getitem__(self, name: str) -> ParameterSummary:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)


def integrated_autocorr_time(x) -> float:
    """Integrated autocorrelation time 1 + 2 sum rho_k, truncated where the
    initial sequence of paired autocorrelation sums stops being positive.
    Returns nan for a constant chain."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    xc = x - x.mean()
    if not (xc != 0).any():
        return math.nan
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n] / n
    rho = acov / acov[0]
    total = 0.0
    k = 0
    while k + 1 < n:
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        total += pair
        k += 2
    return float(2.0 * total - 1.0)


def batch_mean_sd(x, n_batches: int = 100) -> tuple[float, bool]:
    """Monte Carlo standard error of the chain mean from equal batch means.

    Draws that do not fill the last batch are dropped; the flag reports
    whether truncation happened.
    """
    x = np.asarray(x, dtype=float)
    size = x.shape[0] // n_batches
    if size < 1:
        raise ValidationError(f"need at least {n_batches} draws for batch means")
    used = x[:size * n_batches]
    means = used.reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches)), size * n_batches != x.shape[0]


def summarize_chain(chain: PosteriorChain) -> PosteriorSummary:
    """Per-parameter posterior mean, sd, equal-tailed 95% interval,
    batch-mean standard error (100 batches) and inefficiency factor."""
    if chain.draws < 100:
        raise ValidationError("need at least 100 recorded draws to summarize")
    names = [f"h_{k + 1}" for k in range(chain.d)] + ["b"]
    params = []
    truncated = False
    for col, name in enumerate(names):
        x = chain.samples[:, col]
        bm, trunc = batch_mean_sd(x)
        truncated = truncated or trunc
        lo, hi = np.quantile(x, [0.025, 0.975])
        params.append(ParameterSummary(
            name=name,
            mean=float(x.mean()),
            sd=float(x.std(ddof=1)),
            ci_low=float(lo),
            ci_high=float(hi),
            batch_mean_sd=bm,
            sif=integrated_autocorr_time(x),
        ))
    return PosteriorSummary(
        parameters=params,
        draws_used=chain.draws,
        truncated=truncated,
        accept_rate_h=float(chain.accept_h.mean()),
        accept_rate_b=float(chain.accept_b.mean()),
    )
