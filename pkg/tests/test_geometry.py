"""Surfaces, sampling, and the elliptic operator against independent oracles."""
import math

import numpy as np
import pytest

from picnn import geometry as geo

HEMI = geo.Manifold(geo.ManifoldKind.HEMISPHERE)
TORUS = geo.Manifold(geo.ManifoldKind.HALF_TORUS)


def test_embedding_values():
    p = geo.ChartPoint(math.pi / 2, 0.0)
    q = geo.chart_embed(HEMI, p)
    assert abs(q.x - 1.0) < 1e-15 and abs(q.y) < 1e-15 and abs(q.z) < 1e-15
    q = geo.chart_embed(HEMI, geo.ChartPoint(math.pi / 4, math.pi / 2))
    s = math.sqrt(0.5)
    assert abs(q.x) < 1e-15 and abs(q.y - s) < 1e-15 and abs(q.z - s) < 1e-15
    # torus: theta=0 is the outer equator circle
    q = geo.chart_embed(TORUS, geo.ChartPoint(0.0, 0.0))
    assert abs(q.x - 3.0) < 1e-15 and abs(q.z) < 1e-15
    q = geo.chart_embed(TORUS, geo.ChartPoint(math.pi / 2, math.pi))
    assert abs(q.x + 2.0) < 1e-15 and abs(q.z - 1.0) < 1e-15


def test_embedding_stays_on_surface():
    rng = np.random.default_rng(3)
    th, ph = geo.sample_interior_arrays(HEMI, 200, rng)
    x, y, z = geo.embed_arrays(HEMI, th, ph)
    assert np.max(np.abs(x**2 + y**2 + z**2 - 1.0)) < 1e-12
    assert np.min(z) > 0.0
    th, ph = geo.sample_interior_arrays(TORUS, 200, rng)
    x, y, z = geo.embed_arrays(TORUS, th, ph)
    rho = np.sqrt(x**2 + y**2)
    assert np.max(np.abs((rho - 2.0) ** 2 + z**2 - 1.0)) < 1e-12
    assert np.min(z) >= 0.0


def test_chart_domain_enforced():
    with pytest.raises(geo.ChartDomainError):
        geo.chart_embed(HEMI, geo.ChartPoint(1e-9, 0.0))
    with pytest.raises(geo.ChartDomainError):
        geo.chart_embed(TORUS, geo.ChartPoint(-0.5, 0.0))
    with pytest.raises(ValueError):
        geo.Manifold(geo.ManifoldKind.HALF_TORUS, torus_major_R=1.0, torus_minor_r=2.0)


def test_metric_against_fd_of_embedding():
    h = 1e-6
    for m in (HEMI, TORUS):
        for th0, ph0 in [(0.6, 1.1), (1.2, 4.0)]:
            g = geo.metric(m, geo.ChartPoint(th0, ph0))
            xp = np.array(geo.embed_arrays(m, th0 + h, ph0))
            xm = np.array(geo.embed_arrays(m, th0 - h, ph0))
            dth = (xp - xm) / (2 * h)
            yp = np.array(geo.embed_arrays(m, th0, ph0 + h))
            ym = np.array(geo.embed_arrays(m, th0, ph0 - h))
            dph = (yp - ym) / (2 * h)
            assert abs(g[0, 0] - dth @ dth) < 1e-8
            assert abs(g[1, 1] - dph @ dph) < 1e-8
            assert abs(dth @ dph) < 1e-8  # chart is orthogonal


def test_metric_degeneracy_guard():
    with pytest.raises(geo.DegenerateMetricError):
        geo.metric_arrays(HEMI, np.array([1e-9]))


def test_boundary_components_and_lengths():
    comps = geo.boundary_components(HEMI)
    assert len(comps) == 1 and abs(comps[0].length_L - 2 * math.pi) < 1e-15
    comps = geo.boundary_components(TORUS)
    assert [c.label.value for c in comps] == ["torus_outer", "torus_inner"]
    assert abs(comps[0].length_L - 6 * math.pi) < 1e-14
    assert abs(comps[1].length_L - 2 * math.pi) < 1e-14
    # unit-speed parametrization
    c = comps[0]
    h = 1e-6
    a = c.parametrize(np.array([1.0 + h]))[0]
    b = c.parametrize(np.array([1.0 - h]))[0]
    assert abs(np.linalg.norm((a - b) / (2 * h)) - 1.0) < 1e-8


def test_sample_boundary_power_of_two():
    with pytest.raises(ValueError):
        geo.sample_boundary_arrays(HEMI, 12)
    comps = geo.sample_boundary_arrays(TORUS, 8)
    for comp, tau, pts in comps:
        assert tau.shape == (8,) and pts.shape == (8, 3)
        assert np.max(np.abs(pts[:, 2])) == 0.0
        assert abs(tau[1] - comp.length_L / 8) < 1e-15


def test_interior_sampling_uniform_in_area():
    # Archimedes: z of hemisphere samples should be uniform on (0, cos eps)
    rng = np.random.default_rng(11)
    th, ph = geo.sample_interior_arrays(HEMI, 40000, rng)
    z = np.cos(th)
    hist, _ = np.histogram(z, bins=10, range=(0.0, math.cos(HEMI.pole_exclusion_eps)))
    assert np.max(np.abs(hist / 4000.0 - 1.0)) < 0.06
    # torus: theta density proportional to R + r cos(theta)
    th, _ = geo.sample_interior_arrays(TORUS, 60000, rng)
    hist, edges = np.histogram(th, bins=12, range=(0.0, math.pi))
    mids = 0.5 * (edges[:-1] + edges[1:])
    expect = 2.0 + np.cos(mids)
    ratio = hist / hist.sum() / (expect / expect.sum())
    assert np.max(np.abs(ratio - 1.0)) < 0.08


def test_exact_solution_and_boundary_data():
    q = geo.AmbientPoint(0.2, -0.3, 0.5)
    assert geo.exact_solution(q) == 0.2 * -0.3 * 0.5
    for pts in geo.sample_boundary(TORUS, 16):
        for q in pts:
            assert geo.boundary_data(q) == 0.0


def test_laplace_beltrami_eigenfunction():
    # positive operator: -Delta_S(xyz) = 12xyz on the sphere (l(l+1) = 12)
    rng = np.random.default_rng(5)
    th, ph = geo.sample_interior_arrays(HEMI, 500, rng)
    for t, p in zip(th[:50], ph[:50]):
        u = geo.exact_solution_jets(HEMI, t, p)
        lap = geo.laplace_beltrami(u, HEMI, geo.ChartPoint(t, p))
        assert abs(lap - 12.0 * u.val) < 1e-10


def _fd_source(m, t0, p0, h=1e-5):
    """Divergence-form operator on u* by second-order central differences."""
    def uval(t, p):
        x, y, z = geo.embed_arrays(m, t, p)
        return float(x * y * z)

    g11, g22 = geo.metric_arrays(m, np.array([t0]))
    sg = math.sqrt(float(g11[0] * g22[0]))

    def flux_t(t):
        gg11, gg22 = geo.metric_arrays(m, np.array([t]))
        s = math.sqrt(float(gg11[0] * gg22[0]))
        _, _, z = geo.embed_arrays(m, t, p0)
        du = (uval(t + h, p0) - uval(t - h, p0)) / (2 * h)
        return (2.0 + float(z)) * s / float(gg11[0]) * du

    def flux_p(p):
        _, _, z = geo.embed_arrays(m, t0, p)
        du = (uval(t0, p + h) - uval(t0, p - h)) / (2 * h)
        return (2.0 + float(z)) * sg / float(g22[0]) * du

    div = ((flux_t(t0 + h) - flux_t(t0 - h)) / (2 * h)
           + (flux_p(p0 + h) - flux_p(p0 - h)) / (2 * h)) / sg
    return -div + uval(t0, p0)


@pytest.mark.parametrize("m", [HEMI, TORUS], ids=["hemisphere", "half_torus"])
def test_source_term_against_fd_oracle(m):
    rng = np.random.default_rng(17)
    th, ph = geo.sample_interior_arrays(m, 20, rng)
    for t, p in zip(th, ph):
        f = geo.source_term(m, geo.ChartPoint(float(t), float(p)))
        assert abs(f - _fd_source(m, float(t), float(p))) < 1e-5


@pytest.mark.parametrize("m", [HEMI, TORUS], ids=["hemisphere", "half_torus"])
def test_operator_residual_on_exact_solution(m):
    # L u* computed by jets must match the jet-built source identically
    rng = np.random.default_rng(23)
    th, ph = geo.sample_interior_arrays(m, 1000, rng)
    u = geo.exact_solution_jets(m, th, ph)
    c_t, c_tt, c_pp = geo.elliptic_coeffs(m, th)
    lhs = c_t * u.g0 + c_tt * u.h00 + c_pp * u.h11 + u.val
    f = geo.source_term_arrays(m, th, ph)
    assert np.max(np.abs(lhs - f)) < 1e-14


def test_sampling_determinism():
    a = geo.sample_interior_arrays(TORUS, 100, np.random.default_rng(9))
    b = geo.sample_interior_arrays(TORUS, 100, np.random.default_rng(9))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
