"""Loss assembly, Adam with step decay, best-parameter tracking, metrics.

A training run is full-batch and deterministic per seed: the physics residual
is the mean squared defect of the divergence-form operator over the interior
sample, the boundary term is (by mode) a plain mean-square residual, an
FFT-weighted Sobolev trace penalty per boundary component, or the eigenbasis
plug-in estimator. Parameter gradients come from the reverse tape wrapped
around the jet forward pass.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .jets import Jet2
from .network import NetworkParams, NetworkSpec, build_layout, forward, init
from .spectral import circle_eigenvalue, penalty_matrix, plugin_penalty
from .tape import Tape, grad_params

__all__ = [
    "BoundaryMode", "TrainConfig", "ProblemData", "BoundaryComponentData",
    "TrainingDivergedError", "build_problem", "physics_loss", "boundary_loss",
    "total_loss", "loss_and_grad", "AdamState", "adam_step", "adam_minimize",
    "train", "rel_errors", "step_lr", "TraceRow", "TrainResult",
]


class TrainingDivergedError(RuntimeError):
    pass


class BoundaryMode(enum.Enum):
    L2 = "l2"
    SOBOLEV_FFT = "sobolev"
    PLUGIN_EIGEN = "plugin"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    lr_eta: float = 1e-3
    steplr_gamma: float = 0.5
    steplr_period: int = 50
    lambda_bnd: float = 10.0
    bnd_mode: BoundaryMode = BoundaryMode.SOBOLEV_FFT
    s_order: float = 1.0
    K: int | None = None  # None = full spectrum M/2
    batch_size: int | None = None  # None = full batch, one step per epoch
    include_plain_l2_term: bool = False
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.lr_eta <= 0:
            raise ValueError("need epochs >= 1 and positive learning rate")
        if not 0.0 < self.steplr_gamma <= 1.0:
            raise ValueError("steplr_gamma must be in (0, 1]")
        if self.lambda_bnd < 0:
            raise ValueError("lambda_bnd must be nonnegative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 when set")


def step_lr(cfg: TrainConfig, epoch: int) -> float:
    return cfg.lr_eta * cfg.steplr_gamma ** (epoch // cfg.steplr_period)


@dataclass
class BoundaryComponentData:
    length_L: float
    points: np.ndarray  # (M, 3) ambient
    g: np.ndarray       # Dirichlet data at the samples


@dataclass
class ProblemData:
    manifold: geo.Manifold
    theta: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    coeffs: tuple          # elliptic operator coefficients at the samples
    input_jets: tuple      # ambient-coordinate jets at the samples
    boundary: list         # BoundaryComponentData per component
    eval_theta: np.ndarray  # fixed set for per-epoch trace metrics
    eval_phi: np.ndarray

    @property
    def m_total(self) -> int:
        return sum(b.points.shape[0] for b in self.boundary)


def build_problem(m: geo.Manifold, n_interior: int, M_boundary: int,
                  rng: np.random.Generator, n_eval: int = 512) -> ProblemData:
    theta, phi = geo.sample_interior_arrays(m, n_interior, rng)
    f = geo.source_term_arrays(m, theta, phi)
    coeffs = geo.elliptic_coeffs(m, theta)
    input_jets = geo.embed_jets(m, theta, phi)
    boundary = []
    for comp, tau, pts in geo.sample_boundary_arrays(m, M_boundary):
        g = pts[:, 0] * pts[:, 1] * pts[:, 2]  # u* on the boundary (== 0 here)
        boundary.append(BoundaryComponentData(comp.length_L, pts, g))
    ev_theta, ev_phi = geo.sample_interior_arrays(m, n_eval, rng)
    return ProblemData(m, theta, phi, f, coeffs, input_jets, boundary,
                       ev_theta, ev_phi)


# ---------------------------------------------------------------------------
# losses (generic over ndarray/Tensor parameter slices)


def _unpack(params, spec: NetworkSpec, tape: Tape | None):
    if isinstance(params, NetworkParams):
        arrays = params.slices()
    elif isinstance(params, np.ndarray):
        arrays = NetworkParams(params, build_layout(spec)).slices()
    else:
        return list(params), None
    if tape is None:
        return arrays, None
    leaves = [tape.leaf(a, name="param") for a in arrays]
    return leaves, leaves


def _interior_residual(slices, spec, data: ProblemData):
    jx, jy, jz = data.input_jets
    out = forward(slices, spec, [jx, jy, jz])
    c_t, c_tt, c_pp = data.coeffs
    lu = c_t * out.g0 + c_tt * out.h00 + c_pp * out.h11 + out.val
    return lu - data.f


def physics_loss(params, spec: NetworkSpec, data: ProblemData):
    """(1/n) sum |L u(x_i) - f(x_i)|^2 over the interior sample."""
    slices, _ = _unpack(params, spec, None)
    res = _interior_residual(slices, spec, data)
    return (res * res).mean()


def _boundary_residuals(slices, spec, data: ProblemData):
    out = []
    for comp in data.boundary:
        pts = comp.points
        e = forward(slices, spec, [pts[:, 0], pts[:, 1], pts[:, 2]]) - comp.g
        out.append(e)
    return out


def boundary_loss(params, spec: NetworkSpec, data: ProblemData, cfg: TrainConfig):
    slices, _ = _unpack(params, spec, None)
    return _boundary_term(slices, spec, data, cfg)


def _boundary_term(slices, spec, data, cfg: TrainConfig):
    residuals = _boundary_residuals(slices, spec, data)
    if cfg.bnd_mode is BoundaryMode.L2:
        acc = None
        for e in residuals:
            t = (e * e).sum()
            acc = t if acc is None else acc + t
        return acc * (1.0 / data.m_total)
    if cfg.bnd_mode is BoundaryMode.SOBOLEV_FFT:
        acc = None
        for comp, e in zip(data.boundary, residuals):
            M = comp.points.shape[0]
            K = M // 2 if cfg.K is None else cfg.K
            A = penalty_matrix(M, comp.length_L, cfg.s_order, K)
            t = (e * (A @ e)).sum()
            acc = t if acc is None else acc + t
        return acc
    # plug-in eigenbasis estimator with circle harmonics
    acc = None
    for comp, e in zip(data.boundary, residuals):
        M = comp.points.shape[0]
        K = M // 4 if cfg.K is None else cfg.K
        tau = np.arange(M) * comp.length_L / M
        psi = []
        lam = []
        for k in range(1, K + 1):
            ang = 2.0 * math.pi * k * tau / comp.length_L
            psi.append(math.sqrt(2.0) * np.cos(ang))
            psi.append(math.sqrt(2.0) * np.sin(ang))
            lam.extend([circle_eigenvalue(k, comp.length_L)] * 2)
        t = plugin_penalty(e, np.array(psi), np.array(lam), cfg.s_order)
        acc = t if acc is None else acc + t
    return acc


def _plain_l2_term(residuals, m_total):
    acc = None
    for e in residuals:
        t = (e * e).sum()
        acc = t if acc is None else acc + t
    return acc * (1.0 / m_total)


def total_loss(params, spec: NetworkSpec, data: ProblemData, cfg: TrainConfig):
    slices, _ = _unpack(params, spec, None)
    return _total_term(slices, spec, data, cfg)


def _total_term(slices, spec, data, cfg):
    loss = physics_loss(slices, spec, data)
    if cfg.lambda_bnd > 0:
        loss = loss + cfg.lambda_bnd * _boundary_term(slices, spec, data, cfg)
    if cfg.include_plain_l2_term and cfg.bnd_mode is not BoundaryMode.L2:
        residuals = _boundary_residuals(slices, spec, data)
        loss = loss + _plain_l2_term(residuals, data.m_total)
    return loss


def loss_and_grad(flat: np.ndarray, spec: NetworkSpec, data: ProblemData,
                  cfg: TrainConfig):
    """Total loss and its parameter gradient via the reverse tape."""
    tape = Tape()
    leaves, _ = _unpack(flat, spec, tape)
    loss = _total_term(leaves, spec, data, cfg)
    g = grad_params(loss, leaves)
    return float(loss.value), g


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, params: np.ndarray) -> "AdamState":
        return cls(params.copy(), np.zeros_like(params), np.zeros_like(params), 0)


def adam_step(state: AdamState, grad: np.ndarray, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    params = state.params - lr * mhat / (np.sqrt(vhat) + eps)
    return AdamState(params, m, v, t)


def adam_minimize(loss_and_grad_fn, x0: np.ndarray, cfg: TrainConfig):
    """Generic Adam loop with step decay; returns (best_x, loss history)."""
    state = AdamState.fresh(np.asarray(x0, dtype=float))
    best_x, best_loss = state.params.copy(), math.inf
    history = []
    for epoch in range(cfg.epochs):
        loss, grad = loss_and_grad_fn(state.params)
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        if loss < best_loss:
            best_loss, best_x = loss, state.params.copy()
        state = adam_step(state, grad, step_lr(cfg, epoch),
                          cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        history.append(loss)
    return best_x, history


# ---------------------------------------------------------------------------
# training loop and metrics


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    lr: float
    total_loss: float
    rel_l2: float
    rel_h2: float


@dataclass
class TrainResult:
    best_params: NetworkParams
    best_loss: float
    trace: list


def rel_errors(params, spec: NetworkSpec, m: geo.Manifold, theta, phi):
    """Relative L2 and H2 (Laplace-Beltrami image) errors over a test sample."""
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    if theta.size < 1:
        raise ValueError("need at least one test point")
    slices, _ = _unpack(params, spec, None)
    jets = geo.embed_jets(m, theta, phi)
    out = forward(slices, spec, list(jets))
    ju = geo.exact_solution_jets(m, theta, phi)
    c_t, c_tt, c_pp = geo.laplace_beltrami_coeffs(m, theta)

    def lap(j):
        return c_t * j.g0 + c_tt * j.h00 + c_pp * j.h11

    num_l2 = np.mean((out.val - ju.val) ** 2)
    den_l2 = np.mean(ju.val**2)
    num_h2 = np.mean((lap(out) - lap(ju)) ** 2)
    den_h2 = np.mean(lap(ju) ** 2)
    if den_l2 <= 0 or den_h2 <= 0:
        raise ZeroDivisionError("exact solution has zero norm on the test set")
    return float(np.sqrt(num_l2 / den_l2)), float(np.sqrt(num_h2 / den_h2))


def _interior_subset(data: ProblemData, idx: np.ndarray) -> ProblemData:
    """View of the problem restricted to an interior index subset."""
    jx, jy, jz = data.input_jets

    def pick(j: Jet2) -> Jet2:
        return Jet2(j.val[idx], j.g0[idx], j.g1[idx],
                    j.h00[idx], j.h01[idx], j.h11[idx])

    return ProblemData(data.manifold, data.theta[idx], data.phi[idx],
                       data.f[idx], tuple(c[idx] for c in data.coeffs),
                       (pick(jx), pick(jy), pick(jz)), data.boundary,
                       data.eval_theta, data.eval_phi)


def train(data: ProblemData, cfg: TrainConfig,
          spec: NetworkSpec = NetworkSpec()) -> TrainResult:
    """Adam training per the run protocol; returns the best parameters (by
    total training loss at the start of each epoch) and the per-epoch trace.

    With batch_size unset each epoch is one full-batch step. With it set,
    each epoch shuffles the interior sample into minibatches and takes one
    step per batch; the boundary penalty stays on the full equidistant grid
    (the FFT needs it) and best tracking still uses the full total loss.
    """
    rng = np.random.default_rng(cfg.seed)
    params = init(spec, rng)
    state = AdamState.fresh(params.flat)
    best_flat, best_loss = state.params.copy(), math.inf
    trace = []
    n = data.theta.size
    for epoch in range(cfg.epochs):
        lr = step_lr(cfg, epoch)
        if cfg.batch_size is None or cfg.batch_size >= n:
            loss, grad = loss_and_grad(state.params, spec, data, cfg)
            steps = [grad]
        else:
            loss = float(total_loss(state.params, spec, data, cfg))
            order = rng.permutation(n)
            steps = [order[i: i + cfg.batch_size]
                     for i in range(0, n, cfg.batch_size)]
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite total loss at epoch {epoch} (seed {cfg.seed})")
        if loss < best_loss:
            best_loss, best_flat = loss, state.params.copy()
        rl2, rh2 = rel_errors(state.params, spec, data.manifold,
                              data.eval_theta, data.eval_phi)
        for step in steps:
            if isinstance(step, np.ndarray) and step.dtype.kind == "i":
                _, grad = loss_and_grad(state.params, spec,
                                        _interior_subset(data, step), cfg)
            else:
                grad = step
            state = adam_step(state, grad, lr,
                              cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        trace.append(TraceRow(epoch, lr, loss, rl2, rh2))
    best = NetworkParams(best_flat, params.layout)
    return TrainResult(best, best_loss, trace)
