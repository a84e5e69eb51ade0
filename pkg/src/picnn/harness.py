"""Experiment orchestration: sweeps, multi-trial statistics, slope fits, reports.

A sweep is a grid of cells (interior sample size N x trial index); each cell
derives its own seed from the base seed, trains a fresh network, and scores
it on an independent test sample. Reports are written as two CSV files and a
byte-stable JSON document.
"""
from __future__ import annotations

import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geometry as geo
from .network import ConvSpec, MlpSpec, NetworkSpec
from .training import (BoundaryMode, TrainConfig, build_problem, rel_errors,
                       train)

__all__ = [
    "ExperimentConfig", "TrialRecord", "RunReport", "cell_seed", "cell_id",
    "run_cell", "run_experiment", "slope_fit", "emit_reports", "parse_config",
    "load_report",
]


@dataclass(frozen=True)
class ExperimentConfig:
    manifold: geo.ManifoldKind = geo.ManifoldKind.HEMISPHERE
    bnd_mode: BoundaryMode = BoundaryMode.SOBOLEV_FFT
    N_list: tuple = (128, 256, 512)
    M: int = 256
    N_test: int = 5120
    trials: int = 3
    base_seed: int = 7
    net: NetworkSpec = NetworkSpec()
    train: TrainConfig = TrainConfig()
    output_dir: str = "out"

    def __post_init__(self):
        if self.trials < 1 or self.N_test < 1 or any(n < 1 for n in self.N_list):
            raise ValueError("trials, N_test and all N must be >= 1")

    def manifold_object(self) -> geo.Manifold:
        return geo.Manifold(self.manifold)


@dataclass
class TrialRecord:
    manifold: str
    bnd_mode: str
    N: int
    trial: int
    seed: int
    rel_l2: float
    rel_h2: float
    wall_s: float
    trace: list  # per-epoch TraceRow


def cell_seed(base_seed: int, N: int, trial: int) -> int:
    """Deterministic per-cell seed; stable across platforms and runs."""
    return base_seed + zlib.crc32(f"{N}:{trial}".encode())


def cell_id(rec_or_cfg, N: int = None, trial: int = None) -> str:
    if isinstance(rec_or_cfg, TrialRecord):
        r = rec_or_cfg
        return f"{r.manifold}-{r.bnd_mode}-N{r.N}-t{r.trial}"
    cfg = rec_or_cfg
    return f"{cfg.manifold.value}-{cfg.bnd_mode.value}-N{N}-t{trial}"


def run_cell(cfg: ExperimentConfig, N: int, trial: int) -> TrialRecord:
    """Sample, train, and score one sweep cell."""
    seed = cell_seed(cfg.base_seed, N, trial)
    m = cfg.manifold_object()
    rng = np.random.default_rng(seed)
    data = build_problem(m, N, cfg.M, rng)
    tcfg = replace(cfg.train, bnd_mode=cfg.bnd_mode, seed=seed)
    t0 = time.perf_counter()
    try:
        result = train(data, tcfg, cfg.net)
    except Exception as ex:
        raise RuntimeError(f"cell {cell_id(cfg, N, trial)} failed: {ex}") from ex
    wall = time.perf_counter() - t0
    test_theta, test_phi = geo.sample_interior_arrays(m, cfg.N_test, rng)
    rl2, rh2 = rel_errors(result.best_params, cfg.net, m, test_theta, test_phi)
    return TrialRecord(cfg.manifold.value, cfg.bnd_mode.value, N, trial, seed,
                       rl2, rh2, wall, result.trace)


def slope_fit(means, Ns):
    """OLS fit log2(mean) = a - alpha*log2(N); returns (a, alpha)."""
    means = np.asarray(means, dtype=float)
    Ns = np.asarray(Ns, dtype=float)
    if means.size != Ns.size or means.size < 2 or np.unique(Ns).size < 2:
        raise ValueError("need at least two distinct N values")
    if np.any(means <= 0):
        raise ValueError("means must be positive for a log fit")
    x = np.log2(Ns)
    y = np.log2(means)
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    a, slope = coef
    return float(a), float(-slope)


@dataclass
class RunReport:
    config: dict
    trials: list          # per-trial dicts (cell id, N, trial, seed, rel_l2, rel_h2)
    per_N_mean: dict      # str(N) -> {"rel_l2": .., "rel_h2": ..}
    per_N_std: dict
    alpha: float
    intercept_a: float
    traces: dict          # cell id -> list of epoch rows
    wall_s_total: float


def _config_echo(cfg: ExperimentConfig) -> dict:
    d = {
        "manifold": cfg.manifold.value,
        "bnd_mode": cfg.bnd_mode.value,
        "N_list": list(cfg.N_list),
        "M": cfg.M,
        "N_test": cfg.N_test,
        "trials": cfg.trials,
        "base_seed": cfg.base_seed,
        "output_dir": cfg.output_dir,
        "net": {
            "conv_layers": cfg.net.conv.layers,
            "conv_channels": cfg.net.conv.channels,
            "kernel_size": cfg.net.conv.kernel_size,
            "conv_activation": cfg.net.conv.activation.value,
            "mlp_widths": list(cfg.net.mlp.widths),
            "mlp_activation": cfg.net.mlp.activation.value,
        },
        "train": {k: (v.value if isinstance(v, BoundaryMode) else v)
                  for k, v in asdict(cfg.train).items()},
    }
    return d


def run_experiment(cfg: ExperimentConfig, records: list | None = None) -> RunReport:
    """Run the full N x trial grid (or aggregate precomputed records)."""
    if records is None:
        records = [run_cell(cfg, N, t) for N in cfg.N_list for t in range(cfg.trials)]
    per_mean, per_std = {}, {}
    for N in cfg.N_list:
        sel = [r for r in records if r.N == N]
        l2 = np.array([r.rel_l2 for r in sel])
        h2 = np.array([r.rel_h2 for r in sel])
        per_mean[str(N)] = {"rel_l2": float(l2.mean()), "rel_h2": float(h2.mean())}
        per_std[str(N)] = {"rel_l2": float(l2.std()), "rel_h2": float(h2.std())}
    if len(set(cfg.N_list)) >= 2:
        a, alpha = slope_fit([per_mean[str(N)]["rel_l2"] for N in cfg.N_list],
                             list(cfg.N_list))
    else:
        a, alpha = math.nan, math.nan
    trials = [{
        "cell_id": cell_id(r), "N": r.N, "trial": r.trial, "seed": r.seed,
        "rel_l2": r.rel_l2, "rel_h2": r.rel_h2,
    } for r in records]
    traces = {
        cell_id(r): [[row.epoch, row.lr, row.total_loss, row.rel_l2, row.rel_h2]
                     for row in r.trace]
        for r in records
    }
    wall = sum(r.wall_s for r in records)
    return RunReport(_config_echo(cfg), trials, per_mean, per_std, alpha, a,
                     traces, wall)


# ---------------------------------------------------------------------------
# reporting


CELLS_HEADER = "manifold,bnd_mode,N,trial,seed,rel_l2,rel_h2,wall_s"
EPOCHS_HEADER = "cell_id,epoch,lr,total_loss,rel_l2,rel_h2"


def emit_reports(report: RunReport, out_dir, records: list | None = None):
    """Write cells.csv, epochs.csv and report.json under out_dir.

    report.json omits wall-clock fields so that identical configurations
    yield byte-identical files; timings live in cells.csv only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = records or []
    lines = [CELLS_HEADER]
    for r in records:
        lines.append(f"{r.manifold},{r.bnd_mode},{r.N},{r.trial},{r.seed},"
                     f"{r.rel_l2!r},{r.rel_h2!r},{r.wall_s!r}")
    (out / "cells.csv").write_text("\n".join(lines) + "\n")

    lines = [EPOCHS_HEADER]
    for r in records:
        cid = cell_id(r)
        for row in r.trace:
            lines.append(f"{cid},{row.epoch},{row.lr!r},{row.total_loss!r},"
                         f"{row.rel_l2!r},{row.rel_h2!r}")
    (out / "epochs.csv").write_text("\n".join(lines) + "\n")

    doc = {
        "config": report.config,
        "trials": report.trials,
        "per_N_mean": report.per_N_mean,
        "per_N_std": report.per_N_std,
        "alpha": report.alpha,
        "intercept_a": report.intercept_a,
        "traces": report.traces,
    }
    (out / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return out / "cells.csv", out / "epochs.csv", out / "report.json"


def load_report(path) -> RunReport:
    doc = json.loads(Path(path).read_text())
    return RunReport(doc["config"], doc["trials"], doc["per_N_mean"],
                     doc["per_N_std"], doc["alpha"], doc["intercept_a"],
                     doc["traces"], 0.0)


# ---------------------------------------------------------------------------
# config file parsing (flat key = value lines)


def _parse_bool(v: str) -> bool:
    if v.lower() in ("true", "1", "yes", "on"):
        return True
    if v.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v}")


def parse_config(path) -> ExperimentConfig:
    """Flat key=value config file mirroring ExperimentConfig field names.

    Lines starting with # are comments. Training fields use the TrainConfig
    names (epochs, lr_eta, ...); network fields are conv_layers,
    conv_channels, kernel_size, mlp_widths.
    """
    kv = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    manifold = geo.ManifoldKind(kv.pop("manifold", "hemisphere"))
    bnd_mode = BoundaryMode(kv.pop("bnd_mode", "sobolev"))
    n_list = tuple(int(s) for s in kv.pop("N_list", "128,256,512").split(","))

    conv = ConvSpec(layers=int(kv.pop("conv_layers", 3)),
                    channels=int(kv.pop("conv_channels", 56)),
                    kernel_size=int(kv.pop("kernel_size", 3)))
    widths = tuple(int(s) for s in kv.pop("mlp_widths", "24,8").split(","))
    net = NetworkSpec(conv, MlpSpec(widths=widths))

    tkw = {}
    for name, cast in [("epochs", int), ("lr_eta", float), ("steplr_gamma", float),
                       ("steplr_period", int), ("lambda_bnd", float),
                       ("s_order", float), ("K", int), ("batch_size", int),
                       ("include_plain_l2_term", _parse_bool),
                       ("adam_beta1", float), ("adam_beta2", float),
                       ("adam_eps", float), ("seed", int)]:
        if name in kv:
            tkw[name] = cast(kv.pop(name))
    tcfg = TrainConfig(bnd_mode=bnd_mode, **tkw)

    kwargs = dict(manifold=manifold, bnd_mode=bnd_mode, N_list=n_list,
                  net=net, train=tcfg)
    for name, cast in [("M", int), ("N_test", int), ("trials", int),
                       ("base_seed", int), ("output_dir", str)]:
        if name in kv:
            kwargs[name] = cast(kv.pop(name))
    if kv:
        raise ValueError(f"unknown config keys: {sorted(kv)}")
    return ExperimentConfig(**kwargs)
