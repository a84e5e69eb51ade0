"""Train a physics-informed CNN on the upper hemisphere and score it.

The PDE is -div((2+z) grad u) + u = f with exact solution u* = xyz, so the
Dirichlet data on the equator vanishes. We use a small network and a short
schedule so the script finishes in under a minute; push epochs, channels and
sample counts toward the TrainConfig defaults for benchmark-scale accuracy.
"""
import numpy as np

from picnn import geometry as geo
from picnn.network import ConvSpec, MlpSpec, NetworkSpec
from picnn.training import (BoundaryMode, TrainConfig, build_problem,
                            rel_errors, train)


def main():
    m = geo.Manifold(geo.ManifoldKind.HEMISPHERE)
    rng = np.random.default_rng(0)
    data = build_problem(m, n_interior=256, M_boundary=64, rng=rng)

    spec = NetworkSpec(ConvSpec(layers=2, channels=24), MlpSpec(widths=(16, 8)))
    cfg = TrainConfig(epochs=120, lambda_bnd=10.0,
                      bnd_mode=BoundaryMode.SOBOLEV_FFT, batch_size=32, seed=0)

    print(f"training on {data.theta.size} interior / {data.m_total} boundary samples")
    result = train(data, cfg, spec)
    for row in result.trace[::10]:
        print(f"epoch {row.epoch:3d}  lr {row.lr:.2e}  loss {row.total_loss:.4e}  "
              f"rel_l2 {row.rel_l2:.4f}")

    test_theta, test_phi = geo.sample_interior_arrays(m, 2048, rng)
    rl2, rh2 = rel_errors(result.best_params, spec, m, test_theta, test_phi)
    print(f"\nbest loss {result.best_loss:.4e}")
    print(f"test rel_l2 {rl2:.4f}  rel_h2 {rh2:.4f}")


if __name__ == "__main__":
    main()
