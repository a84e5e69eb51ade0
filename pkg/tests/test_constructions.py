"""Constructive blocks: exactness checks and closed-form kernel oracles."""
import math

import numpy as np
import pytest
from scipy.special import gamma as sp_gamma

from picnn import constructions as cons


def test_requ_basics():
    assert cons.requ(2.0) == 4.0
    assert cons.requ(-3.0) == 0.0
    assert np.array_equal(cons.requ(np.array([-1.0, 0.5])), [0.0, 0.25])


def test_requ_product_exact():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        for _ in range(50):
            xs = rng.uniform(-10, 10, n)
            assert abs(cons.requ_product(xs) - np.prod(xs)) < 1e-10
    # deeper trees: roundoff scales with the squared intermediates
    for n in (4, 7):
        for _ in range(50):
            xs = rng.uniform(-2, 2, n)
            assert abs(cons.requ_product(xs) - np.prod(xs)) < 1e-10
    with pytest.raises(ValueError):
        cons.requ_product([1.0])


def test_bspline_cutoff_plateaus_and_midpoint():
    spec = cons.CutoffSpec(2)
    assert cons.bspline_cutoff(spec, 0.3) == 1.0
    assert cons.bspline_cutoff(spec, 1.0) == 1.0
    assert cons.bspline_cutoff(spec, 2.0) == 0.0
    assert cons.bspline_cutoff(spec, 57.0) == 0.0
    # odd-order B-spline symmetry: chi at the window midpoint is exactly 1/2
    assert abs(cons.bspline_cutoff(spec, 1.5) - 0.5) < 1e-14
    with pytest.raises(ValueError):
        cons.CutoffSpec(0)


def test_bspline_cutoff_monotone_and_smooth():
    spec = cons.CutoffSpec(3)
    t = np.linspace(0.5, 2.5, 401)
    v = cons.bspline_cutoff(spec, t)
    assert np.all(np.diff(v) <= 1e-15)
    # C^p smoothness at the seams: FD first derivative is continuous
    h = 1e-5
    for seam in (1.0, 2.0):
        din = (cons.bspline_cutoff(spec, seam + h) - cons.bspline_cutoff(spec, seam - h)) / (2 * h)
        assert abs(din) < 1e-3


def test_matern_closed_forms():
    r = np.linspace(0.0, 4.0, 50)
    # nu = 1/2 (tau = 2): phi = scale * sqrt(pi/2) e^-r
    k = cons.MaternKernel(2.0)
    scale = 2.0 ** (1.0 - 2.0) / sp_gamma(2.0)
    assert np.max(np.abs(cons.matern_eval(k, r)
                         - scale * math.sqrt(math.pi / 2) * np.exp(-r))) < 1e-14
    # nu = 3/2 (tau = 3)
    k = cons.MaternKernel(3.0)
    scale = 2.0 ** (1.0 - 3.0) / sp_gamma(3.0)
    assert np.max(np.abs(cons.matern_eval(k, r)
                         - scale * math.sqrt(math.pi / 2) * np.exp(-r) * (1 + r))) < 1e-14
    # general nu via Bessel agrees with the closed form at nu = 5/2
    k1, k2 = cons.MaternKernel(3.5), cons.MaternKernel(3.5 + 1e-12)
    rr = np.linspace(0.1, 3.0, 20)
    assert np.max(np.abs(cons.matern_eval(k1, rr) - cons.matern_eval(k2, rr))) < 1e-9


def test_matern_value_at_zero():
    # phi(0) = (2^(1-tau)/Gamma(tau)) 2^(nu-1) Gamma(nu); tau=2 -> nu=1/2
    k = cons.MaternKernel(2.0)
    expect = 0.5 * 2.0 ** (-0.5) * sp_gamma(0.5)
    assert abs(cons.matern_eval(k, 0.0) - expect) < 1e-14
    assert abs(2.0 ** (0.5 - 1.0) * sp_gamma(0.5) - 1.2533141373155) < 1e-12
    with pytest.raises(ValueError):
        cons.matern_eval(k, -0.1)
    with pytest.raises(ValueError):
        cons.MaternKernel(1.0)  # nu would be -1/2


def test_matern_decomposition_reconstructs():
    k = cons.MaternKernel(2.0)  # nu = 1/2
    r = np.linspace(0.05, 3.0, 60)
    a, b = cons.matern_decompose(k, r**2, 30)
    recon = a + r * b
    exact = math.sqrt(math.pi / 2) * np.exp(-r)
    assert np.max(np.abs(recon - exact)) < 1e-10
    # A_N(0) equals the r=0 limit of r^nu K_nu
    a0, _ = cons.matern_decompose(k, 0.0, 10)
    assert abs(a0 - 2.0 ** (0.5 - 1.0) * sp_gamma(0.5)) < 1e-12


def test_matern_decomposition_guards():
    with pytest.raises(ValueError):
        cons.matern_decompose(cons.MaternKernel(2.5), 1.0, 10)  # nu = 1 integer
    with pytest.raises(ValueError):
        cons.matern_decompose(cons.MaternKernel(2.0), 1.0, 61)


def test_truncated_kernel_uniform_error():
    k = cons.MaternKernel(2.0)
    t = cons.TruncatedApproximant(eta=0.04, N=40)
    r = np.linspace(0.0, 2.0, 600)
    approx = cons.truncated_kernel(t, k, r**2)
    exact = cons.matern_eval(k, r)
    # away from the patch window the blend is the plain series
    far = r**2 > 2 * t.eta
    assert np.max(np.abs(approx[far] - exact[far])) < 1e-10
    # inside the window the patch error is controlled by eta^nu
    assert np.max(np.abs(approx - exact)) < 2.0 * t.eta**k.nu
    # and shrinks with eta at that rate
    small = cons.TruncatedApproximant(eta=0.0025, N=40)
    approx2 = cons.truncated_kernel(small, k, r**2)
    assert np.max(np.abs(approx2 - exact)) < 0.3 * np.max(np.abs(approx - exact))
    with pytest.raises(ValueError):
        cons.TruncatedApproximant(eta=1.5, N=10)


def test_ridge_decomposition_exact():
    rng = np.random.default_rng(4)
    for _ in range(20):
        y = rng.standard_normal(3)
        bank, co = cons.ridge_decompose_sqdist(y)
        assert bank.count == 6
        assert np.all(co[3:] == 0.0)  # cross features unused
        x = rng.standard_normal(3)
        assert abs(cons.ridge_eval(bank, co, x) - np.sum((x - y) ** 2)) < 1e-12


def test_standard_bank_unit_rows():
    bank = cons.standard_bank(4)
    assert bank.count == 4 + 6
    assert np.max(np.abs(np.linalg.norm(bank.xi, axis=1) - 1.0)) < 1e-14
    with pytest.raises(ValueError):
        cons.FeatureBank(np.array([[1.0, 1.0]]))


@pytest.mark.parametrize("D,S", [(3, 2), (3, 3), (5, 2), (5, 3), (6, 4)])
def test_multichannel_net_exact(D, S):
    rng = np.random.default_rng(D * 10 + S)
    bank = cons.standard_bank(D)
    net = cons.multichannel_inner_product_net(bank, D, S)
    assert net.depth == math.ceil((D - 1) / (S - 1))
    for _ in range(20):
        v = rng.uniform(-10, 10, D)
        assert np.max(np.abs(net.evaluate(v) - bank.xi @ v)) < 1e-12
    with pytest.raises(ValueError):
        net.evaluate(np.full(D, 40.0))  # exceeds the positivity shift
    with pytest.raises(ValueError):
        cons.multichannel_inner_product_net(bank, D, 1)


def test_multichannel_net_is_sparse():
    bank = cons.standard_bank(3)
    net = cons.multichannel_inner_product_net(bank, 3, 2)
    total = sum(int(np.prod(w.shape)) for w in net.filters)
    assert net.nonzero_filter_entries() < total / 4


def test_fibonacci_sphere():
    X = cons.fibonacci_sphere(500)
    assert X.shape == (500, 3)
    assert np.max(np.abs(np.linalg.norm(X, axis=1) - 1.0)) < 1e-12
    # quasi-uniform: nearest-neighbor distances concentrate
    d = np.linalg.norm(X[:, None] - X[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    nn = d.min(axis=1)
    assert nn.max() / nn.min() < 3.0
    with pytest.raises(ValueError):
        cons.fibonacci_sphere(0)


def test_kernel_interpolation_reproduces_nodes():
    k = cons.MaternKernel(2.5)
    X = cons.fibonacci_sphere(80)
    f = X[:, 0] * X[:, 1] * X[:, 2]
    c = cons.kernel_interpolate(X, f, k)
    at_nodes = cons.interpolant_eval(X, X, c, k)
    assert np.max(np.abs(at_nodes - f)) < 1e-8
    with pytest.raises(ValueError):
        cons.kernel_interpolate(X, f[:-1], k)


def test_rate_study_csv_and_slope_sign():
    res = cons.RateStudyResult((10, 20), (0.5, 0.25), -1.0, 0.0)
    csv = res.to_csv()
    assert csv.splitlines()[0] == "N,error,slope"
    assert "10,0.5" in csv

    k = cons.MaternKernel(2.5)
    study = cons.interpolation_rate_study(
        k, lambda p: p[0] * p[1] * p[2], (50, 100, 200), n_test=500)
    assert study.slope < -0.5
    assert study.errors[0] > study.errors[-1]
