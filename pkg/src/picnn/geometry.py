"""Benchmark surfaces, sampling, and the elliptic operator of the test PDE.

Two embedded 2-manifolds with boundary are supported: the upper unit
hemisphere (equatorial boundary circle) and the upper half of a torus of
revolution (two boundary circles at z=0). The PDE solved on both is

    -div((2+z) grad u) + u = f,   u = g on the boundary,

with exact solution u*(x,y,z) = x*y*z, so g vanishes identically (both
boundaries lie in {z=0}) and f is obtained by exact jet differentiation of
the composition u* o embedding -- no hand algebra.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .jets import Jet2, jet_cos, jet_lift_chart, jet_sin

__all__ = [
    "ManifoldKind", "Manifold", "ChartPoint", "AmbientPoint", "BoundaryComponent",
    "ChartDomainError", "DegenerateMetricError",
    "chart_embed", "embed_arrays", "embed_jets", "metric", "metric_arrays",
    "sample_interior", "sample_interior_arrays", "sample_boundary",
    "sample_boundary_arrays", "boundary_components",
    "exact_solution", "exact_solution_jets", "apply_elliptic_operator",
    "elliptic_coeffs", "laplace_beltrami", "laplace_beltrami_coeffs",
    "source_term", "source_term_arrays", "boundary_data",
]


class ChartDomainError(ValueError):
    pass


class DegenerateMetricError(ValueError):
    pass


class ManifoldKind(enum.Enum):
    HEMISPHERE = "hemisphere"
    HALF_TORUS = "half_torus"


@dataclass(frozen=True)
class Manifold:
    kind: ManifoldKind
    torus_major_R: float = 2.0
    torus_minor_r: float = 1.0
    pole_exclusion_eps: float = 1e-3

    def __post_init__(self):
        if self.kind is ManifoldKind.HALF_TORUS:
            if not 0.0 < self.torus_minor_r < self.torus_major_R:
                raise ValueError("half torus requires 0 < r < R")
        if not 0.0 < self.pole_exclusion_eps <= math.pi / 8:
            raise ValueError("pole_exclusion_eps must lie in (0, pi/8]")


@dataclass(frozen=True)
class ChartPoint:
    theta: float
    phi: float


@dataclass(frozen=True)
class AmbientPoint:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


class BoundaryLabel(enum.Enum):
    EQUATOR = "equator"
    TORUS_OUTER = "torus_outer"
    TORUS_INNER = "torus_inner"


@dataclass(frozen=True)
class BoundaryComponent:
    length_L: float
    label: BoundaryLabel
    radius: float  # circle radius in the z=0 plane

    def parametrize(self, tau):
        """Unit-speed arclength parametrization tau in [0, L)."""
        ang = np.asarray(tau) / self.radius
        x = self.radius * np.cos(ang)
        y = self.radius * np.sin(ang)
        if np.ndim(tau) == 0:
            return AmbientPoint(float(x), float(y), 0.0)
        return np.stack([x, y, np.zeros_like(x)], axis=-1)


def _check_chart_domain(m: Manifold, theta, phi, interior: bool = False):
    th = np.asarray(theta, dtype=float)
    if m.kind is ManifoldKind.HEMISPHERE:
        lo = m.pole_exclusion_eps
        if np.any(th < lo - 1e-15) or np.any(th > math.pi / 2 + 1e-12):
            raise ChartDomainError("hemisphere chart requires theta in [eps, pi/2]")
    else:
        if np.any(th < -1e-12) or np.any(th > math.pi + 1e-12):
            raise ChartDomainError("half-torus chart requires theta in [0, pi]")


def embed_jets(m: Manifold, theta, phi) -> tuple[Jet2, Jet2, Jet2]:
    """Jets of the ambient coordinates w.r.t. (theta, phi)."""
    jt, jp = jet_lift_chart(theta, phi)
    st, ct = jet_sin(jt), jet_cos(jt)
    sp, cp = jet_sin(jp), jet_cos(jp)
    if m.kind is ManifoldKind.HEMISPHERE:
        return st * cp, st * sp, ct
    R, r = m.torus_major_R, m.torus_minor_r
    ring = ct * r + R
    return ring * cp, ring * sp, st * r


def embed_arrays(m: Manifold, theta, phi):
    jx, jy, jz = embed_jets(m, np.asarray(theta, float), np.asarray(phi, float))
    return jx.val, jy.val, jz.val


def chart_embed(m: Manifold, p: ChartPoint) -> AmbientPoint:
    _check_chart_domain(m, p.theta, p.phi)
    x, y, z = embed_arrays(m, p.theta, p.phi)
    return AmbientPoint(float(x), float(y), float(z))


def metric_arrays(m: Manifold, theta):
    """Diagonal first fundamental form entries (g11, g22)."""
    th = np.asarray(theta, dtype=float)
    if m.kind is ManifoldKind.HEMISPHERE:
        g11 = np.ones_like(th)
        g22 = np.sin(th) ** 2
    else:
        R, r = m.torus_major_R, m.torus_minor_r
        g11 = np.full_like(th, r**2)
        g22 = (R + r * np.cos(th)) ** 2
    if np.any(g11 * g22 < 1e-12):
        raise DegenerateMetricError("metric degenerate (pole approach)")
    return g11, g22


def metric(m: Manifold, p: ChartPoint) -> np.ndarray:
    _check_chart_domain(m, p.theta, p.phi)
    g11, g22 = metric_arrays(m, p.theta)
    return np.array([[float(g11), 0.0], [0.0, float(g22)]])


def boundary_components(m: Manifold) -> list[BoundaryComponent]:
    if m.kind is ManifoldKind.HEMISPHERE:
        return [BoundaryComponent(2 * math.pi, BoundaryLabel.EQUATOR, 1.0)]
    R, r = m.torus_major_R, m.torus_minor_r
    return [
        BoundaryComponent(2 * math.pi * (R + r), BoundaryLabel.TORUS_OUTER, R + r),
        BoundaryComponent(2 * math.pi * (R - r), BoundaryLabel.TORUS_INNER, R - r),
    ]


# ---------------------------------------------------------------------------
# sampling


def sample_interior_arrays(m: Manifold, n: int, rng: np.random.Generator):
    """Uniform-area interior samples; returns (theta, phi) arrays."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    phi = rng.uniform(0.0, 2 * math.pi, size=n)
    if m.kind is ManifoldKind.HEMISPHERE:
        # Archimedes: z uniform gives uniform area; cap excluded at the pole
        z = rng.uniform(0.0, math.cos(m.pole_exclusion_eps), size=n)
        theta = np.arccos(z)
        return theta, phi
    R, r = m.torus_major_R, m.torus_minor_r
    theta = np.empty(n)
    filled = 0
    draws = 0
    while filled < n:
        k = max(n - filled, 64)
        cand = rng.uniform(0.0, math.pi, size=k)
        acc = rng.uniform(0.0, 1.0, size=k) < (R + r * np.cos(cand)) / (R + r)
        take = cand[acc][: n - filled]
        theta[filled: filled + take.size] = take
        filled += take.size
        draws += k
        if draws > 10**6:
            raise RuntimeError("rejection sampler exceeded draw cap")
    return theta, phi


def sample_interior(m: Manifold, n: int, rng: np.random.Generator):
    theta, phi = sample_interior_arrays(m, n, rng)
    x, y, z = embed_arrays(m, theta, phi)
    return [
        (ChartPoint(float(t), float(p)), AmbientPoint(float(a), float(b), float(c)))
        for t, p, a, b, c in zip(theta, phi, x, y, z)
    ]


def _check_power_of_two(M: int):
    if M < 4 or (M & (M - 1)) != 0:
        raise ValueError(f"boundary sample count must be a power of two >= 4, got {M}")


def sample_boundary_arrays(m: Manifold, M_per_component: int):
    """Per component: (tau grid, ambient (M,3) array)."""
    _check_power_of_two(M_per_component)
    out = []
    for comp in boundary_components(m):
        tau = np.arange(M_per_component) * comp.length_L / M_per_component
        out.append((comp, tau, comp.parametrize(tau)))
    return out


def sample_boundary(m: Manifold, M_per_component: int):
    comps = sample_boundary_arrays(m, M_per_component)
    return [
        [AmbientPoint(*row) for row in pts]
        for _, _, pts in comps
    ]


# ---------------------------------------------------------------------------
# the PDE


def exact_solution(q: AmbientPoint) -> float:
    return q.x * q.y * q.z


def boundary_data(q: AmbientPoint) -> float:
    # u* restricted to either boundary; both lie in {z=0} so this is 0
    return exact_solution(q)


def exact_solution_jets(m: Manifold, theta, phi) -> Jet2:
    """Chart jet of u* o embedding, by exact jet arithmetic."""
    jx, jy, jz = embed_jets(m, theta, phi)
    return jx * jy * jz


def elliptic_coeffs(m: Manifold, theta):
    """Coefficients (c_t, c_tt, c_pp) with
    L u = c_t*du/dt + c_tt*d2u/dt2 + c_pp*d2u/dp2 + u
    for the divergence-form operator -div((2+z) grad u) + u.

    All metric and coefficient derivatives are closed-form; nothing in here
    depends on phi for either chart.
    """
    th = np.asarray(theta, dtype=float)
    g11, g22 = metric_arrays(m, th)
    if m.kind is ManifoldKind.HEMISPHERE:
        s, c = np.sin(th), np.cos(th)
        a = 2.0 + c          # 2 + z
        da = -s              # dz/dtheta
        # (1/sqrt g) d_theta(a*sqrt(g)*g^11) with sqrt(g)=sin, g^11=1
        c_t = (da * s + a * c) / s
        c_tt = a
        c_pp = a / s**2
    else:
        R, r = m.torus_major_R, m.torus_minor_r
        s, c = np.sin(th), np.cos(th)
        w = R + r * c
        a = 2.0 + r * s
        da = r * c
        dw = -r * s
        c_t = (da * w + a * dw) / (r**2 * w)
        c_tt = a / r**2
        c_pp = a / w**2
    return -c_t, -c_tt, -c_pp


def laplace_beltrami_coeffs(m: Manifold, theta):
    """Coefficients of the positive Laplace-Beltrami operator,
    Delta u = c_t*du/dt + c_tt*d2u/dt2 + c_pp*d2u/dp2."""
    th = np.asarray(theta, dtype=float)
    g11, g22 = metric_arrays(m, th)
    if m.kind is ManifoldKind.HEMISPHERE:
        s, c = np.sin(th), np.cos(th)
        c_t = c / s
        c_tt = np.ones_like(th)
        c_pp = 1.0 / s**2
    else:
        R, r = m.torus_major_R, m.torus_minor_r
        s, c = np.sin(th), np.cos(th)
        w = R + r * c
        c_t = -r * s / (r**2 * w)
        c_tt = np.full_like(th, 1.0 / r**2)
        c_pp = 1.0 / w**2
    return -c_t, -c_tt, -c_pp


def apply_elliptic_operator(u: Jet2, m: Manifold, p: ChartPoint):
    c_t, c_tt, c_pp = elliptic_coeffs(m, p.theta)
    return c_t * u.g0 + c_tt * u.h00 + c_pp * u.h11 + u.val


def laplace_beltrami(u: Jet2, m: Manifold, p: ChartPoint):
    c_t, c_tt, c_pp = laplace_beltrami_coeffs(m, p.theta)
    return c_t * u.g0 + c_tt * u.h00 + c_pp * u.h11


def source_term_arrays(m: Manifold, theta, phi):
    ju = exact_solution_jets(m, np.asarray(theta, float), np.asarray(phi, float))
    c_t, c_tt, c_pp = elliptic_coeffs(m, theta)
    return c_t * ju.g0 + c_tt * ju.h00 + c_pp * ju.h11 + ju.val


def source_term(m: Manifold, p: ChartPoint) -> float:
    _check_chart_domain(m, p.theta, p.phi)
    return float(source_term_arrays(m, p.theta, p.phi))
