"""Joint Bayesian bandwidth estimation for local linear nonparametric
regression with a residual-mixture error density, plus rule-of-thumb and
cross-validation baselines, model-evidence comparison, a Monte Carlo study
harness, and a state-price-density application.
"""

from .errors import (
    BayesbwError,
    DegenerateRegressorError,
    DegenerateResidualsError,
    DegenerateWindowError,
    EvidenceUndefinedError,
    InvalidBandwidthError,
    RankDeficiencyError,
    SamplerInitError,
    SelectorFailureError,
    ValidationError,
)
from .evidence import (
    BayesFactor,
    EvidenceReport,
    bayes_factor,
    evidence_report,
    interpret_bf,
    lml_chib,
    lml_geweke,
)
from .kernels import (
    ExclusionIndex,
    build_exclusion_index,
    error_density,
    error_density_loo,
    gaussian_kernel,
    local_constant_fit_loo,
    local_linear_fit_loo,
    predict,
    product_kernel_weight,
    residuals_loo,
)
from .metrics import (
    EvaluationGrid,
    ForecastScore,
    PredictionInterval,
    forecast_scores,
    ise_density,
    ise_regression,
    mise_aggregate,
    prediction_interval,
    qmc_grid,
    regular_grid,
)
from .sampler import (
    PosteriorChain,
    PosteriorSummary,
    PriorSpec,
    RateReparam,
    SamplerConfig,
    integrated_autocorr_time,
    log_posterior,
    log_prior,
    log_pseudo_likelihood,
    sample_posterior,
    summarize_chain,
)
from .selectors import (
    SearchConfig,
    SelectorResult,
    cv_minimize,
    cv_objective,
    likelihood_cv_density_bandwidth,
    rot_density_bandwidth,
    rot_regression_bandwidth,
)
from .simulation import DGPSpec, ExperimentResult, generate, run_experiment
from .spd import OptionRecord, SPDCurve, bs_spd, nw_implied_vol, spd_pipeline
from .types import BandwidthSet, Dataset, LocalFit

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
