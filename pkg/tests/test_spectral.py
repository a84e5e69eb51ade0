"""Spectral boundary penalty: FFT, weights, matrix form, and oracles."""
import math

import numpy as np
import pytest

from picnn import spectral as sp


def test_fft_matches_dense_dft():
    rng = np.random.default_rng(0)
    for M in (4, 8, 64, 256):
        e = rng.standard_normal(M)
        j = np.arange(M)
        F = np.exp(-2j * math.pi * np.outer(j, j) / M) / M
        dense = F @ e
        got = sp.fft_real(e).coeffs
        assert np.max(np.abs(got - dense)) < 1e-12


def test_fft_requires_power_of_two():
    with pytest.raises(ValueError):
        sp.fft_real(np.zeros(12))
    with pytest.raises(ValueError):
        sp.fft_real(np.zeros(2))


def test_spectrum_accessors():
    e = np.array([1.0, 2.0, 3.0, 4.0])
    spec = sp.fft_real(e)
    assert spec.M == 4
    assert abs(spec.coeff(0) - 2.5) < 1e-14
    assert spec.coeff(-1) == spec.coeffs[3]
    with pytest.raises(IndexError):
        spec.coeff(3)


def test_weights_formula():
    L = 2 * math.pi
    table = sp.spectral_weights(L, 1.5, 8)
    for k in range(9):
        lam = (2 * math.pi * k / L) ** 2
        assert abs(table.weight(k) - (1 + lam) ** 1.5) < 1e-14
    assert table.weight(-3) == table.weight(3)
    assert abs(sp.circle_eigenvalue(2, 4 * math.pi) - 1.0) < 1e-15


def test_penalty_single_cosine_modes():
    # e = cos(2 pi k0 t / L) has hat(e)_{+-k0} = 1/2, penalty (1+lam)^(2s-1/2)/2
    M, L, s = 256, 2 * math.pi, 1.0
    tau = np.arange(M) * L / M
    for k0, expect in [(1, 1.4142135623730951),
                       (2, 5.5901699437494745),
                       (4, 35.04639781775011)]:
        e = np.cos(2 * math.pi * k0 * tau / L)
        assert abs(sp.sobolev_penalty(e, L, s) - expect) < 1e-10
    # constant residual: only the DC weight 1
    assert abs(sp.sobolev_penalty(np.full(M, 2.0), L, s) - 4.0) < 1e-12


def test_penalty_truncation():
    M, L, s = 64, 2 * math.pi, 1.0
    tau = np.arange(M) * L / M
    e = np.cos(5 * tau)
    assert sp.sobolev_penalty(e, L, s, K=4) < 1e-25
    assert sp.sobolev_penalty(e, L, s, K=5) > 1.0
    with pytest.raises(ValueError):
        sp.sobolev_penalty(e, L, s, K=33)


def test_penalty_matrix_quadratic_form():
    rng = np.random.default_rng(2)
    M, L, s = 32, 3.0, 0.75
    A = sp.penalty_matrix(M, L, s)
    assert np.array_equal(A, A.T)
    assert not A.flags.writeable
    for _ in range(5):
        e = rng.standard_normal(M)
        assert abs(e @ A @ e - sp.sobolev_penalty(e, L, s)) < 1e-10
    # truncated variant
    A4 = sp.penalty_matrix(M, L, s, K=4)
    e = rng.standard_normal(M)
    assert abs(e @ A4 @ e - sp.sobolev_penalty(e, L, s, K=4)) < 1e-10
    # PSD
    w = np.linalg.eigvalsh(A)
    assert w.min() > -1e-12


def test_penalty_matrix_cache_returns_same_object():
    A = sp.penalty_matrix(16, 2 * math.pi, 1.0)
    B = sp.penalty_matrix(16, 2 * math.pi, 1.0)
    assert A is B


def test_plugin_penalty_formula():
    # hand-checkable: one eigenpair, constant residual
    m = 8
    psi = np.ones((1, m))
    lam = np.array([4.0])
    r = np.full(m, 3.0)
    # proj = 3, weight = 4^(2s-1/2) with s=1 -> 4^1.5 = 8
    assert abs(sp.plugin_penalty(r, psi, lam, 1.0) - 72.0) < 1e-12
    with pytest.raises(ValueError):
        sp.plugin_penalty(r, np.ones((2, m)), lam, 1.0)


def test_slobodeckij_oracle_norm_equivalence():
    # oracle and spectral estimate must scale together across frequencies
    M, L, s = 256, 2 * math.pi, 0.75
    tau = np.arange(M) * L / M
    ratios = []
    for k0 in (1, 2, 4, 8):
        e = np.cos(k0 * tau)
        ratios.append(sp.slobodeckij_oracle(e, L, s - 0.5)
                      / sp.sobolev_penalty(e, L, s))
    ratios = np.array(ratios)
    assert ratios.min() > 0
    assert ratios.max() / ratios.min() < 10.0
    with pytest.raises(ValueError):
        sp.slobodeckij_oracle(np.zeros(8), L, 1.5)


def test_parseval_energy():
    rng = np.random.default_rng(7)
    e = rng.standard_normal(128)
    spec = sp.fft_real(e)
    assert abs(np.sum(np.abs(spec.coeffs) ** 2) * 128 - np.sum(e**2)) < 1e-9


def test_fft_speed():
    import time
    rng = np.random.default_rng(1)
    e = rng.standard_normal(4096)
    t0 = time.perf_counter()
    for _ in range(20):
        sp.fft_real(e)
    assert time.perf_counter() - t0 < 1.0
