"""Command-line entry points: run, sweep, rates, construct."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import constructions as cons
from . import geometry as geo
from .harness import (ExperimentConfig, parse_config, run_cell,
                      run_experiment, emit_reports, slope_fit)
from .training import BoundaryMode, TrainConfig

_MANIFOLDS = {"hemisphere": geo.ManifoldKind.HEMISPHERE,
              "half-torus": geo.ManifoldKind.HALF_TORUS}
_MODES = {"l2": BoundaryMode.L2, "sobolev": BoundaryMode.SOBOLEV_FFT,
          "plugin": BoundaryMode.PLUGIN_EIGEN}


def _execute(cfg: ExperimentConfig) -> int:
    records = [run_cell(cfg, N, t) for N in cfg.N_list for t in range(cfg.trials)]
    report = run_experiment(cfg, records=records)
    paths = emit_reports(report, cfg.output_dir, records=records)
    for N in cfg.N_list:
        mean = report.per_N_mean[str(N)]
        print(f"N={N}: rel_l2={mean['rel_l2']:.6f} rel_h2={mean['rel_h2']:.6f}")
    if not math.isnan(report.alpha):
        print(f"fitted slope alpha={report.alpha:.4f} (intercept a={report.intercept_a:.4f})")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_run(args) -> int:
    return _execute(parse_config(args.config))


def _cmd_sweep(args) -> int:
    n_list = tuple(int(s) for s in args.n.split(","))
    train = TrainConfig(epochs=args.epochs, bnd_mode=_MODES[args.bnd],
                        batch_size=args.batch_size)
    cfg = ExperimentConfig(manifold=_MANIFOLDS[args.manifold],
                           bnd_mode=_MODES[args.bnd], N_list=n_list, M=args.m,
                           trials=args.trials, base_seed=args.seed,
                           train=train, output_dir=args.out)
    return _execute(cfg)


def _cmd_rates(args) -> int:
    rows = Path(args.infile).read_text().strip().splitlines()
    header = rows[0].split(",")
    try:
        i_n, i_l2 = header.index("N"), header.index("rel_l2")
    except ValueError:
        print("cells.csv must carry N and rel_l2 columns", file=sys.stderr)
        return 2
    by_n = {}
    for row in rows[1:]:
        parts = row.split(",")
        by_n.setdefault(int(parts[i_n]), []).append(float(parts[i_l2]))
    Ns = sorted(by_n)
    means = [float(np.mean(by_n[n])) for n in Ns]
    for n, e in zip(Ns, means):
        print(f"N={n}: mean rel_l2={e:.6f} over {len(by_n[n])} trials")
    a, alpha = slope_fit(means, Ns)
    print(f"alpha={alpha:.6f} a={a:.6f}")
    return 0


def _cmd_construct(args) -> int:
    checks = []
    rng = np.random.default_rng(0)

    xs = rng.uniform(-10, 10, (100, 3))
    worst = max(abs(cons.requ_product(r) - np.prod(r)) for r in xs)
    checks.append(("requ_product exact (100 random triples)", worst <= 1e-10))

    checks.append(("chi_2(1.5) = 0.5",
                   abs(cons.bspline_cutoff(cons.CutoffSpec(2), 1.5) - 0.5) < 1e-14))

    k = cons.MaternKernel(2.0)
    r = np.linspace(0.1, 3, 40)
    a, b = cons.matern_decompose(k, r**2, 30)
    recon = a + r * b
    exact = math.sqrt(math.pi / 2) * np.exp(-r)
    checks.append(("matern nu=1/2 decomposition (N=30)",
                   float(np.max(np.abs(recon - exact))) <= 1e-10))

    bank, co = cons.ridge_decompose_sqdist(rng.standard_normal(3))
    x = rng.standard_normal(3)
    y = np.array([co[i, 1] for i in range(3)]) / -2.0
    ok = abs(cons.ridge_eval(bank, co, x) - float(np.sum((x - y) ** 2))) <= 1e-12
    checks.append(("ridge decomposition of squared distance", ok))

    fb = cons.standard_bank(3)
    net = cons.multichannel_inner_product_net(fb, 3, 2)
    worst = max(float(np.max(np.abs(net.evaluate(v) - fb.xi @ v)))
                for v in rng.uniform(-10, 10, (100, 3)))
    checks.append(("multichannel inner-product net exact", worst <= 1e-12))

    failed = 0
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += 0 if ok else 1
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="picnn",
                                     description="physics-informed CNN solver for "
                                                 "elliptic PDEs on surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="run an N-sweep from flags")
    p.add_argument("--manifold", choices=sorted(_MANIFOLDS), default="hemisphere")
    p.add_argument("--bnd", choices=sorted(_MODES), default="sobolev")
    p.add_argument("--n", default="128,256,512", help="comma-separated interior sizes")
    p.add_argument("--m", type=int, default=256, help="boundary samples per component")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("rates", help="fit a convergence slope from cells.csv")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(fn=_cmd_rates)

    p = sub.add_parser("construct", help="verify the constructive blocks")
    p.add_argument("--check", default="all", choices=["all"])
    p.set_defaults(fn=_cmd_construct)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
