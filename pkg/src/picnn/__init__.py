"""Physics-informed CNN solver for elliptic PDEs on embedded surfaces."""
from .geometry import Manifold, ManifoldKind
from .harness import ExperimentConfig, RunReport, run_cell, run_experiment, slope_fit
from .network import ConvSpec, MlpSpec, NetworkSpec, forward, init
from .training import BoundaryMode, TrainConfig, build_problem, rel_errors, train

__all__ = [
    "Manifold", "ManifoldKind", "ExperimentConfig", "RunReport", "run_cell",
    "run_experiment", "slope_fit", "ConvSpec", "MlpSpec", "NetworkSpec",
    "forward", "init", "BoundaryMode", "TrainConfig", "build_problem",
    "rel_errors", "train",
]

__version__ = "0.1.0"
