"""Render picnn experiment outputs as figures.

Four figure kinds, each a pure function of its input files:

  rates     - log-log convergence curves with error bars and fitted slopes,
              from cells.csv
  epochs    - per-cell training curves (error vs epoch), from epochs.csv
  channels  - error vs channel count across runs, from a directory holding
              one or more report.json files
  pointwise - 3-D scatter of samples colored by absolute error, from a
              pointwise.csv with header x,y,z,u_pred,u_exact

Slopes are always refit from the CSV numbers rather than read from
report.json, so a figure cannot disagree with the data it shows.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["PlotJob", "SchemaError", "render", "slope_fit",
           "read_csv_columns", "KINDS"]

KINDS = ("rates", "epochs", "channels", "pointwise")

CELLS_COLUMNS = ["manifold", "bnd_mode", "N", "trial", "seed",
                 "rel_l2", "rel_h2", "wall_s"]
EPOCHS_COLUMNS = ["cell_id", "epoch", "lr", "total_loss", "rel_l2", "rel_h2"]
POINTWISE_COLUMNS = ["x", "y", "z", "u_pred", "u_exact"]


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class PlotJob:
    kind: str
    input_path: str
    output_path: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not Path(self.input_path).exists():
            raise FileNotFoundError(self.input_path)


def read_csv_columns(path, required: list) -> dict:
    """Parse a comma-separated file into named string columns."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    for col in required:
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    cols = {name: [] for name in header}
    for i, row in enumerate(lines[1:], start=2):
        parts = row.split(",")
        if len(parts) != len(header):
            raise SchemaError(f"{path}: line {i} has {len(parts)} fields, "
                              f"expected {len(header)}")
        for name, v in zip(header, parts):
            cols[name].append(v)
    return cols


def slope_fit(means, Ns):
    """OLS fit log2(mean) = a - alpha*log2(N); returns (a, alpha)."""
    x = np.log2(np.asarray(Ns, dtype=float))
    y = np.log2(np.asarray(means, dtype=float))
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(-coef[1])


def _style_axes(ax):
    ax.grid(True, which="both", alpha=0.3, linewidth=0.5)
    ax.tick_params(labelsize=9)


def _render_rates(job: PlotJob):
    cols = read_csv_columns(job.input_path, ["N", "rel_l2"])
    N = np.array([int(v) for v in cols["N"]])
    err = np.array([float(v) for v in cols["rel_l2"]])
    modes = cols.get("bnd_mode", ["all"] * N.size)

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    info = {}
    for mode in sorted(set(modes)):
        sel = np.array([m == mode for m in modes])
        Ns = np.array(sorted(set(N[sel])))
        means = np.array([err[sel & (N == n)].mean() for n in Ns])
        stds = np.array([err[sel & (N == n)].std() for n in Ns])
        if Ns.size >= 2 and np.all(means > 0):
            a, alpha = slope_fit(means, Ns)
        else:
            a, alpha = math.nan, math.nan
        label = f"{mode} (alpha={alpha:.2f})"
        ax.errorbar(Ns, means, yerr=stds, marker="o", markersize=4,
                    capsize=3, linewidth=1.2, label=label)
        info[mode] = {"alpha": alpha, "intercept_a": a,
                      "Ns": Ns.tolist(), "means": means.tolist()}
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("interior samples N")
    ax.set_ylabel("relative L2 error")
    ax.legend(fontsize=8)
    _style_axes(ax)
    fig.tight_layout()
    fig.savefig(job.output_path, dpi=150)
    plt.close(fig)
    return info


def _render_epochs(job: PlotJob):
    cols = read_csv_columns(job.input_path, EPOCHS_COLUMNS)
    cells = cols["cell_id"]
    epoch = np.array([int(v) for v in cols["epoch"]])
    rel = np.array([float(v) for v in cols["rel_l2"]])

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    info = {}
    for cid in sorted(set(cells)):
        sel = np.array([c == cid for c in cells])
        order = np.argsort(epoch[sel])
        ax.semilogy(epoch[sel][order], rel[sel][order],
                    linewidth=1.0, label=cid)
        info[cid] = int(sel.sum())
    ax.set_xlabel("epoch")
    ax.set_ylabel("relative L2 error")
    if len(info) <= 12:
        ax.legend(fontsize=7)
    _style_axes(ax)
    fig.tight_layout()
    fig.savefig(job.output_path, dpi=150)
    plt.close(fig)
    return info


def _render_channels(job: PlotJob):
    root = Path(job.input_path)
    paths = sorted(root.rglob("report.json")) if root.is_dir() else [root]
    if not paths:
        raise SchemaError(f"{job.input_path}: no report.json found")
    rows = []
    for p in paths:
        doc = json.loads(p.read_text())
        try:
            c = doc["config"]["net"]["conv_channels"]
            per_n = doc["per_N_mean"]
        except KeyError as ex:
            raise SchemaError(f"{p}: missing column {ex}")
        for n_str, m in per_n.items():
            rows.append((int(c), int(n_str), float(m["rel_l2"])))
    rows.sort()

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    info = {}
    for n in sorted({r[1] for r in rows}):
        cs = [r[0] for r in rows if r[1] == n]
        es = [r[2] for r in rows if r[1] == n]
        ax.loglog(cs, es, marker="o", markersize=4, linewidth=1.2,
                  label=f"N={n}", base=2)
        info[str(n)] = {"channels": cs, "rel_l2": es}
    ax.set_xlabel("channels c")
    ax.set_ylabel("relative L2 error")
    ax.legend(fontsize=8)
    _style_axes(ax)
    fig.tight_layout()
    fig.savefig(job.output_path, dpi=150)
    plt.close(fig)
    return info


def _render_pointwise(job: PlotJob):
    cols = read_csv_columns(job.input_path, POINTWISE_COLUMNS)
    x = np.array([float(v) for v in cols["x"]])
    y = np.array([float(v) for v in cols["y"]])
    z = np.array([float(v) for v in cols["z"]])
    err = np.abs(np.array([float(v) for v in cols["u_pred"]])
                 - np.array([float(v) for v in cols["u_exact"]]))

    fig = plt.figure(figsize=(5.0, 4.2))
    ax = fig.add_subplot(projection="3d")
    sc = ax.scatter(x, y, z, c=err, cmap="viridis", s=10)
    fig.colorbar(sc, ax=ax, shrink=0.7, label="|u_pred - u_exact|")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    fig.tight_layout()
    fig.savefig(job.output_path, dpi=150)
    plt.close(fig)
    return {"points": int(x.size), "max_abs_err": float(err.max())}


_RENDERERS = {
    "rates": _render_rates,
    "epochs": _render_epochs,
    "channels": _render_channels,
    "pointwise": _render_pointwise,
}


def render(job: PlotJob) -> dict:
    """Render one figure; returns a metadata dict (fitted slopes, counts)."""
    out = _RENDERERS[job.kind](job)
    if not Path(job.output_path).stat().st_size:
        raise RuntimeError(f"empty output written to {job.output_path}")
    return out
