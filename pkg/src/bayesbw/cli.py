"""Command-line interface.

Subcommands: fit, select, simulate, predict, evidence, spd.  Exit codes:
0 success, 2 usage error, 3 data/validation error, 4 selector failure,
5 internal error.  Every stochastic command takes a mandatory seed and its
data outputs are byte-reproducible from (inputs, config, seed); archives
additionally record wall time and library versions.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import io as _io
from .errors import BayesbwError, SelectorFailureError, ValidationError
from .evidence import bayes_factor, evidence_report, interpret_bf
from .kernels import predict as ll_predict
from .kernels import residuals_loo
from .metrics import forecast_scores, prediction_interval
from .sampler import PriorSpec, SamplerConfig, sample_posterior, summarize_chain
from .selectors import cv_minimize, rot_density_bandwidth, rot_regression_bandwidth
from .simulation import DGPSpec, run_experiment
from .spd import TRADING_DAYS_PER_YEAR, spd_pipeline

_ESTIMATORS = {"ll": "local_linear", "lc": "local_constant"}
_PRIORS = {"ig": "inverse_gamma", "exp": "exponential", "beta": "beta_exponent"}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SELECTOR = 4
EXIT_INTERNAL = 5


class UsageError(Exception):
    pass


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _sampler_config(args) -> SamplerConfig:
    if args.seed is None:
        raise UsageError("--seed is required for stochastic commands")
    return SamplerConfig(seed=args.seed, burn_in=args.burn_in, draws=args.draws)


def _prior(args) -> PriorSpec:
    return PriorSpec(family=_PRIORS[args.prior])


def _write_archive(args, command: str, outdir: str, outputs: dict,
                   started: float, config_snapshot: dict) -> None:
    _io.write_archive(os.path.join(outdir, "archive.json"), command,
                      config_snapshot, outputs, time.perf_counter() - started)


def cmd_fit(args) -> int:
    started = time.perf_counter()
    data = _io.read_dataset_csv(args.data)
    cfg = _sampler_config(args)
    prior = _prior(args)
    estimator = _ESTIMATORS[args.estimator]
    chain = sample_posterior(data, prior, cfg, estimator)
    summary = summarize_chain(chain)
    outdir = _outdir(args)
    paths = {
        "summary": os.path.join(outdir, "summary.csv"),
        "chain": os.path.join(outdir, "chain.csv"),
        "chain_meta": os.path.join(outdir, "chain_meta.json"),
    }
    _io.atomic_write_text(paths["summary"], _io.summary_csv_text(summary))
    _io.write_chain(chain, paths["chain"], paths["chain_meta"])
    _write_archive(args, "fit", outdir,
                   {k: os.path.basename(v) for k, v in paths.items()},
                   started,
                   {"data": args.data, "seed": args.seed, "burn_in": args.burn_in,
                    "draws": args.draws, "estimator": estimator,
                    "prior": prior.family})
    for p in summary.parameters:
        print(f"{p.name}: {p.mean:.6g}  [{p.ci_low:.6g}, {p.ci_high:.6g}]  "
              f"sd={p.sd:.3g}  bm-sd={p.batch_mean_sd:.3g}  sif={p.sif:.2f}")
    print(f"acceptance: h {summary.accept_rate_h:.3f}, "
          f"b {summary.accept_rate_b:.3f}")
    return EXIT_OK


def cmd_select(args) -> int:
    data = _io.read_dataset_csv(args.data)
    outdir = _outdir(args)
    estimator = _ESTIMATORS[args.estimator]
    lines = ["method," + ",".join(f"h_{k + 1}" for k in range(data.d))
             + ",objective,converged,boundary"]
    failed = False
    if args.method == "rot":
        h = rot_regression_bandwidth(data)
        lines.append("rot," + ",".join(repr(float(v)) for v in h) + ",,true,false")
        print("rot bandwidths:", " ".join(f"{v:.6g}" for v in h))
    else:
        result = cv_minimize(data, estimator)
        lines.append("cv," + ",".join(repr(float(v)) for v in result.h)
                     + f",{repr(result.objective_value)}"
                     + f",{str(result.converged).lower()}"
                     + f",{str(result.boundary).lower()}")
        print("cv bandwidths:", " ".join(f"{v:.6g}" for v in result.h),
              f"(objective {result.objective_value:.6g}, "
              f"{result.evaluations} evaluations)")
        if result.boundary:
            print("warning: optimum sits on the search-box boundary; "
                  "cross-validation failed to pick a meaningful bandwidth",
                  file=sys.stderr)
            failed = True
    _io.atomic_write_text(os.path.join(outdir, "bandwidths.csv"),
                          "\n".join(lines) + "\n")
    return EXIT_SELECTOR if failed else EXIT_OK


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _io.read_config(args.config)
    seed = args.seed if args.seed is not None else \
        _io.config_get(cfg, "seed", int)
    spec = DGPSpec(
        design=_io.config_get(cfg, "design", str),
        error=_io.config_get(cfg, "error", str),
        n=_io.config_get(cfg, "n", int),
        seed=seed)
    methods = tuple(m.strip() for m in
                    _io.config_get(cfg, "methods", str, "rot,cv,bayes_ll").split(","))
    replications = _io.config_get(cfg, "replications", int, 100)
    sampler_cfg = SamplerConfig(
        seed=seed,
        burn_in=_io.config_get(cfg, "burn_in", int, 1000),
        draws=_io.config_get(cfg, "draws", int, 2000))
    workers = _io.config_get(cfg, "workers", int,
                             int(os.environ.get("BAYESBW_WORKERS", "1")))
    want_evidence = _io.config_get(cfg, "evidence", _io.config_bool, False)
    result = run_experiment(spec, methods, replications, sampler_cfg,
                            want_evidence=want_evidence, workers=workers)
    outdir = _outdir(args)
    _io.atomic_write_text(os.path.join(outdir, "results.csv"),
                          _io.tidy_csv_text(result))
    lines = ["method,metric,median"]
    for method in methods:
        for metric in ("ise_regression", "ise_density", "ise_density_rot",
                       "ise_density_lcv"):
            values = result.values(method, metric)
            if values.size:
                lines.append(f"{method},{metric},{repr(float(np.median(values)))}")
    _io.atomic_write_text(os.path.join(outdir, "summary.csv"),
                          "\n".join(lines) + "\n")
    _write_archive(args, "simulate", outdir,
                   {"results": "results.csv", "summary": "summary.csv"},
                   started, dict(cfg, seed=str(seed)))
    print(f"{replications} replications x {len(methods)} methods done; "
          f"results in {outdir}/results.csv")
    return EXIT_OK


def cmd_predict(args) -> int:
    started = time.perf_counter()
    train = _io.read_dataset_csv(args.train)
    test = _io.read_dataset_csv(args.test)
    if test.d != train.d:
        raise ValidationError(
            f"column mismatch: train has x1..x{train.d}, test has x1..x{test.d}")
    if args.method == "bayes":
        cfg = _sampler_config(args)
        chain = sample_posterior(train, _prior(args), cfg, "local_linear")
        bw = chain.bandwidth_estimate()
        h, b = bw.h, bw.b
    else:
        h = rot_regression_bandwidth(train)
        e0 = residuals_loo(train, h)
        b = rot_density_bandwidth(e0)
    forecasts = ll_predict(train, h, test.x)
    e = residuals_loo(train, h)
    intervals = [prediction_interval(e, b, float(f), alpha=args.alpha)
                 for f in forecasts]
    scores = forecast_scores(test.y, forecasts)
    outdir = _outdir(args)
    lines = ["row,actual,forecast,lower,upper"]
    for i, (f, iv) in enumerate(zip(forecasts, intervals)):
        lines.append(f"{i},{repr(float(test.y[i]))},{repr(float(f))},"
                     f"{repr(iv.lower)},{repr(iv.upper)}")
    _io.atomic_write_text(os.path.join(outdir, "predictions.csv"),
                          "\n".join(lines) + "\n")
    mape_text = repr(scores.mape) if scores.mape_defined else "undefined"
    _io.atomic_write_text(
        os.path.join(outdir, "scores.csv"),
        "method,msfe,mafe,mape\n"
        f"{args.method},{repr(scores.msfe)},{repr(scores.mafe)},{mape_text}\n")
    _write_archive(args, "predict", outdir,
                   {"predictions": "predictions.csv", "scores": "scores.csv"},
                   started,
                   {"train": args.train, "test": args.test, "method": args.method,
                    "seed": args.seed, "alpha": args.alpha})
    print(f"MSFE={scores.msfe:.6g} MAFE={scores.mafe:.6g} "
          f"MAPE={scores.mape:.4f}%" if scores.mape_defined else
          f"MSFE={scores.msfe:.6g} MAFE={scores.mafe:.6g} MAPE undefined")
    return EXIT_OK


def cmd_evidence(args) -> int:
    started = time.perf_counter()
    data = _io.read_dataset_csv(args.data)
    cfg = _sampler_config(args)
    prior = _prior(args)
    reports = {}
    for tag, estimator in (("local_linear", "local_linear"),
                           ("local_constant", "local_constant")):
        seed_shift = 0 if estimator == "local_linear" else 1
        chain_cfg = SamplerConfig(seed=cfg.seed + seed_shift,
                                  burn_in=cfg.burn_in, draws=cfg.draws)
        chain = sample_posterior(data, prior, chain_cfg, estimator)
        reports[tag] = evidence_report(data, chain, prior, estimator)
    bf = bayes_factor(reports["local_linear"].lml_chib,
                      reports["local_constant"].lml_chib)
    favored = "local_linear" if bf.favored == "a" else "local_constant"
    band = interpret_bf(bf.value if not bf.overflow else float("inf"))
    outdir = _outdir(args)
    lines = ["estimator,lml_chib,lml_geweke"]
    for tag, rep in reports.items():
        lines.append(f"{tag},{repr(rep.lml_chib)},{repr(rep.lml_geweke)}")
    _io.atomic_write_text(os.path.join(outdir, "evidence.csv"),
                          "\n".join(lines) + "\n")
    _io.atomic_write_text(
        os.path.join(outdir, "bayes_factor.csv"),
        "bf,log_bf,favored,interpretation\n"
        f"{repr(bf.value)},{repr(bf.log_value)},{favored},{band}\n")
    _write_archive(args, "evidence", outdir,
                   {"evidence": "evidence.csv", "bayes_factor": "bayes_factor.csv"},
                   started,
                   {"data": args.data, "seed": args.seed, "prior": prior.family,
                    "burn_in": args.burn_in, "draws": args.draws})
    for tag, rep in reports.items():
        print(f"{tag}: LML chib {rep.lml_chib:.3f}, geweke {rep.lml_geweke:.3f}")
    print(f"Bayes factor {bf.value:.4g} favoring {favored} ({band})")
    return EXIT_OK


def cmd_spd(args) -> int:
    started = time.perf_counter()
    records = _io.read_options_csv(args.options)
    maturities_days = [float(v) for v in args.maturities.split(",")]
    explicit_h = None
    if args.bandwidths:
        explicit_h = np.array([float(v) for v in args.bandwidths.split(",")])
    sampler_cfg = None
    if args.source == "bayes":
        sampler_cfg = _sampler_config(args)
    curves = spd_pipeline(
        records, args.source,
        maturities=[d / TRADING_DAYS_PER_YEAR for d in maturities_days],
        query=(args.query_futures, args.query_strike),
        explicit_h=explicit_h,
        estimator=_ESTIMATORS[args.estimator],
        sampler_cfg=sampler_cfg)
    outdir = _outdir(args)
    outputs = {}
    for days, curve in zip(maturities_days, curves):
        name = f"spd_{days:g}d.csv"
        _io.atomic_write_text(os.path.join(outdir, name),
                              _io.spd_csv_text(curve))
        outputs[f"curve_{days:g}d"] = name
    provenance = {
        "bandwidth_source": args.source,
        "h": [float(v) for v in curves[0].h],
        "sigma_hat": {f"{days:g}d": curve.sigma_hat
                      for days, curve in zip(maturities_days, curves)},
        "query": {"futures": args.query_futures, "strike": args.query_strike},
    }
    _io.atomic_write_text(os.path.join(outdir, "provenance.json"),
                          json.dumps(provenance, indent=1, sort_keys=True) + "\n")
    outputs["provenance"] = "provenance.json"
    _write_archive(args, "spd", outdir, outputs, started,
                   {"options": args.options, "source": args.source,
                    "maturities_days": maturities_days, "seed": args.seed})
    for days, curve in zip(maturities_days, curves):
        print(f"maturity {days:g}d: sigma_hat={curve.sigma_hat:.4f}, "
              f"mass={curve.mass:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesbw",
        description="Joint Bayesian bandwidth estimation for local linear "
                    "regression and its residual-mixture error density.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--out", help="output directory (default: current)")
        if seed:
            p.add_argument("--seed", type=int, default=None)

    def add_sampler(p):
        p.add_argument("--burn-in", dest="burn_in", type=int, default=1000)
        p.add_argument("--draws", type=int, default=2000)
        p.add_argument("--prior", choices=sorted(_PRIORS), default="ig")

    p = sub.add_parser("fit", help="sample the bandwidth posterior for a dataset")
    p.add_argument("data")
    p.add_argument("--estimator", choices=sorted(_ESTIMATORS), default="ll")
    add_sampler(p)
    add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="rule-of-thumb or cross-validation bandwidths")
    p.add_argument("data")
    p.add_argument("--method", choices=("rot", "cv"), required=True)
    p.add_argument("--estimator", choices=sorted(_ESTIMATORS), default="ll")
    add_common(p, seed=False)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="run a replication experiment from a config")
    p.add_argument("--config", required=True)
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="out-of-sample forecasts with intervals")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("--method", choices=("bayes", "rot"), default="bayes")
    p.add_argument("--alpha", type=float, default=0.05)
    add_sampler(p)
    add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evidence", help="compare local linear vs local constant")
    p.add_argument("data")
    add_sampler(p)
    add_common(p)
    p.set_defaults(func=cmd_evidence)

    p = sub.add_parser("spd", help="state-price density curves from options data")
    p.add_argument("options")
    p.add_argument("--source", choices=("bayes", "rot", "cv", "explicit"),
                   required=True)
    p.add_argument("--maturities", default="2,10",
                   help="comma list of maturities in trading days")
    p.add_argument("--query-futures", type=float, required=True)
    p.add_argument("--query-strike", type=float, required=True)
    p.add_argument("--bandwidths",
                   help="comma list of 3 bandwidths for --source explicit")
    p.add_argument("--estimator", choices=sorted(_ESTIMATORS), default="lc")
    add_sampler(p)
    add_common(p)
    p.set_defaults(func=cmd_spd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return int(args.func(args) or EXIT_OK)
    except UsageError as exc:
        print(f"error [usage]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error [data]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SelectorFailureError as exc:
        print(f"error [selector]: {exc}", file=sys.stderr)
        return EXIT_SELECTOR
    except BayesbwError as exc:
        print(f"error [internal/{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last resort, no raw traceback
        print(f"error [internal/{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
