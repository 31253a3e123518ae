"""File formats: dataset and option CSVs with line-numbered validation,
flat key-value config files, chain persistence with a metadata sidecar, and
self-contained run archives.  All writes go through a temp-file rename so
partially written outputs never appear.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import asdict

import numpy as np

from .errors import ValidationError
from .sampler import (
    ChainMeta,
    PosteriorChain,
    PosteriorSummary,
    PriorSpec,
    SamplerConfig,
)
from .spd import OptionRecord, SPDCurve, TRADING_DAYS_PER_YEAR
from .types import Dataset

_OPTION_COLUMNS = ("date", "futures_price", "strike", "maturity_days",
                   "implied_vol", "rate", "dividend_yield", "spot")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_cell(raw: str, line_no: int, column: str) -> float:
    text = raw.strip()
    if not text:
        raise ValidationError(f"line {line_no}: blank cell in column {column!r}")
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(
            f"line {line_no}: non-numeric value {raw!r} in column {column!r}") from None
    if not math.isfinite(value):
        raise ValidationError(
            f"line {line_no}: non-finite value {raw!r} in column {column!r}")
    return value


def read_dataset_csv(path: str) -> Dataset:
    """Read a regression sample with mandatory header y, x1..xd."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [c.strip() for c in header]
        d = len(header) - 1
        expected = ["y"] + [f"x{k + 1}" for k in range(d)]
        if d < 1 or header != expected:
            raise ValidationError(
                f"{path}: header must be y,x1..xd, got {','.join(header)}")
        ys, xs = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValidationError(
                    f"line {line_no}: expected {d + 1} cells, got {len(row)}")
            ys.append(_parse_cell(row[0], line_no, "y"))
            xs.append([_parse_cell(row[k + 1], line_no, f"x{k + 1}")
                       for k in range(d)])
    if not ys:
        raise ValidationError(f"{path}: no data rows")
    return Dataset(y=np.array(ys), x=np.array(xs))


def write_dataset_csv(path: str, data: Dataset) -> None:
    lines = ["y," + ",".join(f"x{k + 1}" for k in range(data.d))]
    for i in range(data.n):
        lines.append(",".join([repr(float(data.y[i]))]
                              + [repr(float(v)) for v in data.x[i]]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_options_csv(path: str) -> list[OptionRecord]:
    """Read option records; maturity arrives in trading days and is stored
    in years (days / 252)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty file")
        missing = [c for c in _OPTION_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValidationError(
                f"{path}: missing column(s) {', '.join(missing)}")
        records = []
        for line_no, row in enumerate(reader, start=2):
            vals = {c: _parse_cell(row[c], line_no, c)
                    for c in _OPTION_COLUMNS if c != "date"}
            records.append(OptionRecord(
                futures_price=vals["futures_price"],
                strike=vals["strike"],
                maturity=vals["maturity_days"] / TRADING_DAYS_PER_YEAR,
                implied_vol=vals["implied_vol"],
                rate=vals["rate"],
                dividend_yield=vals["dividend_yield"],
                spot=vals["spot"]))
    if not records:
        raise ValidationError(f"{path}: no data rows")
    return records


def write_options_csv(path: str, records) -> None:
    lines = [",".join(_OPTION_COLUMNS)]
    for i, r in enumerate(records):
        lines.append(",".join([
            f"row{i}",
            repr(float(r.futures_price)), repr(float(r.strike)),
            repr(float(r.maturity * TRADING_DAYS_PER_YEAR)),
            repr(float(r.implied_vol)), repr(float(r.rate)),
            repr(float(r.dividend_yield)), repr(float(r.spot))]))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Flat key-value configuration
# ---------------------------------------------------------------------------

def read_config(path: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path} line {line_no}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ValidationError(f"{path} line {line_no}: empty key")
            out[key] = value
    return out


def config_get(cfg: dict, key: str, convert, default=None):
    if key not in cfg:
        if default is not None:
            return default
        raise ValidationError(f"config field {key!r} is required")
    try:
        return convert(cfg[key])
    except (TypeError, ValueError):
        raise ValidationError(
            f"config field {key!r} has invalid value {cfg[key]!r}") from None


def config_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


# ---------------------------------------------------------------------------
# Chain persistence
# ---------------------------------------------------------------------------

def chain_csv_text(chain: PosteriorChain) -> str:
    d = chain.d
    header = (["draw"] + [f"h_{k + 1}" for k in range(d)]
              + ["b", "log_post", "accept_h", "accept_b"])
    lines = [",".join(header)]
    for i in range(chain.draws):
        cells = [str(i)]
        cells += [repr(float(v)) for v in chain.samples[i]]
        cells.append(repr(float(chain.log_post[i])))
        cells.append(str(int(chain.accept_h[i])))
        cells.append(str(int(chain.accept_b[i])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_chain(chain: PosteriorChain, csv_path: str, meta_path: str) -> None:
    atomic_write_text(csv_path, chain_csv_text(chain))
    cfg = asdict(chain.meta.config)
    if not isinstance(cfg["init"], str):
        cfg["init"] = {"h": list(map(float, chain.meta.config.init.h)),
                       "b": float(chain.meta.config.init.b)}
    meta = {
        "n": chain.meta.n,
        "d": chain.meta.d,
        "estimator": chain.meta.estimator,
        "prior": asdict(chain.meta.prior),
        "config": cfg,
        "step_h": [float(v) for v in chain.step_h],
        "step_b": [float(v) for v in chain.step_b],
    }
    atomic_write_text(meta_path, json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_chain(csv_path: str, meta_path: str) -> PosteriorChain:
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    cfg_raw = dict(meta["config"])
    if isinstance(cfg_raw.get("init"), dict):
        from .types import BandwidthSet
        cfg_raw["init"] = BandwidthSet(h=np.array(cfg_raw["init"]["h"]),
                                       b=cfg_raw["init"]["b"])
    prior_raw = dict(meta["prior"])
    for key in ("psi_h", "kappa_h"):
        if isinstance(prior_raw.get(key), list):
            prior_raw[key] = tuple(prior_raw[key])
    config = SamplerConfig(**cfg_raw)
    prior = PriorSpec(**prior_raw)
    rows = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = meta["d"]
        expected = (["draw"] + [f"h_{k + 1}" for k in range(d)]
                    + ["b", "log_post", "accept_h", "accept_b"])
        if header != expected:
            raise ValidationError(f"{csv_path}: unexpected chain header")
        for row in reader:
            rows.append(row)
    samples = np.array([[float(v) for v in row[1:d + 2]] for row in rows])
    log_post = np.array([float(row[d + 2]) for row in rows])
    accept_h = np.array([row[d + 3] == "1" for row in rows])
    accept_b = np.array([row[d + 4] == "1" for row in rows])
    return PosteriorChain(
        samples=samples, log_post=log_post,
        accept_h=accept_h, accept_b=accept_b,
        step_h=np.array(meta["step_h"]), step_b=np.array(meta["step_b"]),
        meta=ChainMeta(n=meta["n"], d=meta["d"], estimator=meta["estimator"],
                       prior=prior, config=config))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def summary_csv_text(summary: PosteriorSummary) -> str:
    lines = ["parameter,estimate,ci_low,ci_high,sd,batch_mean_sd,sif"]
    for p in summary.parameters:
        lines.append(",".join([
            p.name, repr(p.mean), repr(p.ci_low), repr(p.ci_high),
            repr(p.sd), repr(p.batch_mean_sd),
            repr(p.sif) if p.sif_defined else "undefined"]))
    return "\n".join(lines) + "\n"


def spd_csv_text(curve: SPDCurve) -> str:
    days = curve.maturity * TRADING_DAYS_PER_YEAR
    lines = ["maturity_days,s_grid,density"]
    for s, f in zip(curve.s_grid, curve.density):
        lines.append(f"{repr(float(days))},{repr(float(s))},{repr(float(f))}")
    return "\n".join(lines) + "\n"


def tidy_csv_text(result) -> str:
    lines = ["replication,method,metric,value"]
    for rep, method, metric, value in result.tidy_rows():
        lines.append(f"{rep},{method},{metric},{repr(float(value))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Run archives
# ---------------------------------------------------------------------------

def write_archive(path: str, command: str, config_snapshot: dict,
                  outputs: dict, wall_time: float) -> None:
    """Record what a run produced: config snapshot, library versions, output
    paths (relative to the archive), and wall time."""
    import scipy

    archive = {
        "command": command,
        "config": config_snapshot,
        "outputs": outputs,
        "wall_time_seconds": wall_time,
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__},
    }
    atomic_write_text(path, json.dumps(archive, indent=1, sort_keys=True) + "\n")


def load_archive(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
