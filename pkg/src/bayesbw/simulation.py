"""Monte Carlo study harness: synthetic regression designs, error laws, and
replication loops comparing the bandwidth selection methods.

Replication r always draws from an RNG stream keyed on (root seed, r), so
results are independent of execution order and of how many worker processes
run the loop.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BayesbwError, ValidationError
from .kernels import predict, residuals_loo
from .metrics import EvaluationGrid, ise_density, ise_regression, qmc_grid, regular_grid
from .sampler import (
    PosteriorChain,
    PriorSpec,
    SamplerConfig,
    sample_posterior,
)
from .selectors import (
    cv_minimize,
    likelihood_cv_density_bandwidth,
    rot_density_bandwidth,
    rot_regression_bandwidth,
)
from .evidence import evidence_report
from .types import Dataset

DESIGNS = ("m1", "m2")
ERROR_LAWS = ("gaussian_half", "mixture")
METHODS = ("rot", "cv", "bayes_ll", "bayes_lc")

_MIXTURE_WEIGHTS = (0.7, 0.3)
_MIXTURE_SDS = (0.4, 0.8)
_GAUSSIAN_SD = 0.5


def design_m1(x: np.ndarray) -> np.ndarray:
    """cos(2 pi x1) + sin(2 pi x1) on one regressor."""
    t = 2.0 * math.pi * np.atleast_2d(x)[:, 0]
    return np.cos(t) + np.sin(t)


def design_m2(x: np.ndarray) -> np.ndarray:
    """sin(2 pi x1) + cos(2 pi x2) + 4 (1 - x3^2) on three regressors."""
    x = np.atleast_2d(x)
    return (np.sin(2.0 * math.pi * x[:, 0])
            + np.cos(2.0 * math.pi * x[:, 1])
            + 4.0 * (1.0 - x[:, 2] ** 2))


def _gaussian_density(z):
    z = np.asarray(z, float)
    return np.exp(-0.5 * (z / _GAUSSIAN_SD) ** 2) / (_GAUSSIAN_SD * math.sqrt(2 * math.pi))


def _mixture_density(z):
    z = np.asarray(z, float)
    out = np.zeros_like(z, dtype=float)
    for w, s in zip(_MIXTURE_WEIGHTS, _MIXTURE_SDS):
        out = out + w * np.exp(-0.5 * (z / s) ** 2) / (s * math.sqrt(2 * math.pi))
    return out


@dataclass(frozen=True)
class DGPSpec:
    """One simulation design: regression function, error law, sample size."""

    design: str
    error: str
    n: int
    seed: int

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValidationError(f"unknown design {self.design!r}, expected {DESIGNS}")
        if self.error not in ERROR_LAWS:
            raise ValidationError(f"unknown error law {self.error!r}, expected {ERROR_LAWS}")
        if self.n < 50:
            raise ValidationError("n must be at least 50")

    @property
    def d(self) -> int:
        return 1 if self.design == "m1" else 3


@dataclass(frozen=True)
class GeneratedData:
    """A simulated dataset plus the true regression function and error
    density it came from (for scoring estimators against the truth)."""

    dataset: Dataset
    m_true: object
    error_density_true: object
    sigma_max: float


def generate(spec: DGPSpec) -> GeneratedData:
    """Draw regressors uniformly on the unit cube, add errors from the
    specified law, and return the sample with its truth handles."""
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(size=(spec.n, spec.d))
    if spec.error == "gaussian_half":
        eps = rng.normal(0.0, _GAUSSIAN_SD, size=spec.n)
        density, sigma_max = _gaussian_density, _GAUSSIAN_SD
    else:
        comp = rng.random(spec.n) < _MIXTURE_WEIGHTS[0]
        sds = np.where(comp, _MIXTURE_SDS[0], _MIXTURE_SDS[1])
        eps = rng.normal(0.0, 1.0, size=spec.n) * sds
        density, sigma_max = _mixture_density, max(_MIXTURE_SDS)
    m_true = design_m1 if spec.design == "m1" else design_m2
    y = m_true(x) + eps
    return GeneratedData(dataset=Dataset(y=y, x=x), m_true=m_true,
                         error_density_true=density, sigma_max=sigma_max)


@dataclass
class MethodOutcome:
    """One replication x method cell of an experiment."""

    replication: int
    method: str
    h: np.ndarray | None = None
    b: float | None = None          # joint density bandwidth (Bayes methods)
    b_rot: float | None = None      # two-step pairings (frequentist methods)
    b_lcv: float | None = None
    ise_regression: float | None = None
    ise_density: float | None = None
    ise_density_rot: float | None = None
    ise_density_lcv: float | None = None
    lml_chib: float | None = None
    lml_geweke: float | None = None
    runtime: float = 0.0
    failure: str | None = None
    boundary: bool = False

    def metrics(self):
        """Deterministic per-cell metrics; wall-clock runtime stays on the
        record itself so seeded reruns emit byte-identical tables."""
        out = {}
        if self.h is not None:
            for k, v in enumerate(self.h):
                out[f"h_{k + 1}"] = float(v)
        for name in ("b", "b_rot", "b_lcv", "ise_regression", "ise_density",
                     "ise_density_rot", "ise_density_lcv", "lml_chib",
                     "lml_geweke"):
            v = getattr(self, name)
            if v is not None:
                out[name] = float(v)
        return out


@dataclass
class ExperimentResult:
    spec: DGPSpec
    methods: tuple
    replications: int
    records: list = field(default_factory=list)

    def tidy_rows(self):
        """(replication, method, metric, value) rows, failures included as
        a 'failure' metric with value nan."""
        for rec in sorted(self.records, key=lambda r: (r.replication, r.method)):
            if rec.failure is not None:
                yield rec.replication, rec.method, "failure", math.nan
                continue
            for metric, value in rec.metrics().items():
                yield rec.replication, rec.method, metric, value

    def values(self, method: str, metric: str) -> np.ndarray:
        out = [rec.metrics().get(metric) for rec in self.records
               if rec.method == method and rec.failure is None]
        return np.asarray([v for v in out if v is not None], dtype=float)

    def median(self, method: str, metric: str) -> float:
        v = self.values(method, metric)
        return float(np.median(v)) if v.size else math.nan

    def failures(self, method: str | None = None):
        return [rec for rec in self.records
                if rec.failure is not None
                and (method is None or rec.method == method)]


def _experiment_grid(spec: DGPSpec) -> EvaluationGrid:
    if spec.d == 1:
        return regular_grid(0.0, 1.0)
    return qmc_grid(np.zeros(3), np.ones(3), seed=spec.seed)


def _density_ise_pair(gen: GeneratedData, h: np.ndarray, estimator: str):
    """Two-step residual density bandwidths and their ISEs."""
    e = residuals_loo(gen.dataset, h, estimator)
    b_rot = rot_density_bandwidth(e)
    b_lcv = likelihood_cv_density_bandwidth(e)
    ise_rot = ise_density(e, b_rot, gen.error_density_true, gen.sigma_max)
    ise_lcv = ise_density(e, b_lcv, gen.error_density_true, gen.sigma_max)
    return b_rot, b_lcv, ise_rot, ise_lcv


def _bayes_cell(gen: GeneratedData, grid: EvaluationGrid, estimator: str,
                prior: PriorSpec, cfg: SamplerConfig, want_evidence: bool,
                out: MethodOutcome) -> PosteriorChain:
    chain = sample_posterior(gen.dataset, prior, cfg, estimator)
    bw = chain.bandwidth_estimate()
    out.h, out.b = bw.h, bw.b
    out.ise_regression = ise_regression(
        lambda pts: predict(gen.dataset, bw.h, pts, estimator),
        gen.m_true, grid)
    e = residuals_loo(gen.dataset, bw.h, estimator)
    out.ise_density = ise_density(e, bw.b, gen.error_density_true, gen.sigma_max)
    if want_evidence:
        report = evidence_report(gen.dataset, chain, prior, estimator)
        out.lml_chib = report.lml_chib
        out.lml_geweke = report.lml_geweke
    return chain


def run_replication(spec: DGPSpec, replication: int, methods,
                    sampler_cfg: SamplerConfig | None = None,
                    prior: PriorSpec | None = None,
                    want_evidence: bool = False) -> list:
    """All method cells for one replication; failures stay per-cell."""
    prior = prior or PriorSpec()
    data_seed, mcmc_seed = (
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence([spec.seed, replication]).spawn(2))
    gen = generate(DGPSpec(design=spec.design, error=spec.error,
                           n=spec.n, seed=data_seed))
    grid = _experiment_grid(spec)
    base_cfg = sampler_cfg or SamplerConfig(seed=0, burn_in=1000, draws=2000)
    records = []
    for method in methods:
        out = MethodOutcome(replication=replication, method=method)
        start = time.perf_counter()
        try:
            if method == "rot":
                h = rot_regression_bandwidth(gen.dataset)
                out.h = h
                out.ise_regression = ise_regression(
                    lambda pts: predict(gen.dataset, h, pts), gen.m_true, grid)
                (out.b_rot, out.b_lcv,
                 out.ise_density_rot, out.ise_density_lcv) = _density_ise_pair(
                    gen, h, "local_linear")
            elif method == "cv":
                sel = cv_minimize(gen.dataset, "local_linear")
                out.boundary = sel.boundary
                h = sel.h
                out.h = h
                out.ise_regression = ise_regression(
                    lambda pts: predict(gen.dataset, h, pts), gen.m_true, grid)
                (out.b_rot, out.b_lcv,
                 out.ise_density_rot, out.ise_density_lcv) = _density_ise_pair(
                    gen, h, "local_linear")
            elif method in ("bayes_ll", "bayes_lc"):
                estimator = "local_linear" if method == "bayes_ll" else "local_constant"
                cfg = SamplerConfig(
                    seed=mcmc_seed + (0 if method == "bayes_ll" else 1),
                    burn_in=base_cfg.burn_in, draws=base_cfg.draws,
                    target_accept_h=base_cfg.target_accept_h,
                    target_accept_b=base_cfg.target_accept_b,
                    init=base_cfg.init,
                    adapt_constant=base_cfg.adapt_constant,
                    init_step=base_cfg.init_step)
                _bayes_cell(gen, grid, estimator, prior, cfg, want_evidence, out)
            else:
                raise ValidationError(f"unknown method {method!r}, expected {METHODS}")
        except BayesbwError as exc:
            out.failure = f"{type(exc).__name__}: {exc}"
        out.runtime = time.perf_counter() - start
        records.append(out)
    return records


def _replication_worker(args):
    spec, r, methods, cfg, prior, want_evidence = args
    return run_replication(spec, r, methods, cfg, prior, want_evidence)


def run_experiment(spec: DGPSpec, methods=METHODS, replications: int = 100,
                   sampler_cfg: SamplerConfig | None = None,
                   prior: PriorSpec | None = None,
                   want_evidence: bool = False,
                   workers: int = 1) -> ExperimentResult:
    """Replication loop over the requested methods.

    Fails only if some method produced no successful cell at all; individual
    cell failures are recorded and left in place.
    """
    if replications < 1:
        raise ValidationError("replications must be at least 1")
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}, expected {METHODS}")
    jobs = [(spec, r, methods, sampler_cfg, prior, want_evidence)
            for r in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_replication_worker, jobs))
    else:
        batches = [_replication_worker(job) for job in jobs]
    result = ExperimentResult(spec=spec, methods=methods,
                              replications=replications)
    for batch in batches:
        result.records.extend(batch)
    for m in methods:
        ok = [rec for rec in result.records
              if rec.method == m and rec.failure is None]
        if not ok:
            causes = {rec.failure for rec in result.failures(m)}
            raise BayesbwError(
                f"method {m!r} failed in every replication: {sorted(causes)}")
    return result
