"""FFT-based fractional Sobolev boundary penalties on circle boundaries.

The boundary residual sampled at M equidistant arclength points is mapped to
Fourier coefficients by a radix-2 transform (1/M forward normalization, so a
constant residual c has DC coefficient c), then weighted by
(1 + lambda_k)^(2s-1/2) with lambda_k = (2 pi k / L)^2 and summed over
|k| <= K. A dense circulant quadratic-form matrix A with e^T A e equal to the
same penalty is available for optimizers that want a fixed bilinear form, and
a Slobodeckij double-integral discretization serves as a norm-equivalence
oracle for validation only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SpectralWeightTable", "BoundarySpectrum", "spectral_weights", "fft_real",
    "sobolev_penalty", "penalty_matrix", "plugin_penalty", "slobodeckij_oracle",
    "circle_eigenvalue",
]


def _check_power_of_two(M: int):
    if M < 4 or (M & (M - 1)) != 0:
        raise ValueError(f"FFT length must be a power of two >= 4, got {M}")


def circle_eigenvalue(k: int, L: float) -> float:
    """Boundary Laplace-Beltrami eigenvalue for mode k on a circle of length L."""
    return (2.0 * math.pi * k / L) ** 2


@dataclass(frozen=True)
class SpectralWeightTable:
    length_L: float
    order_sigma: float
    truncation_K: int
    weights: np.ndarray  # w[k] for k = 0..K

    def weight(self, k: int) -> float:
        return float(self.weights[abs(k)])


def spectral_weights(L: float, sigma: float, K: int) -> SpectralWeightTable:
    """w_k = (1 + lambda_k)^sigma for |k| <= K."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    ks = np.arange(K + 1)
    lam = (2.0 * math.pi * ks / L) ** 2
    return SpectralWeightTable(L, sigma, K, (1.0 + lam) ** sigma)


@dataclass(frozen=True)
class BoundarySpectrum:
    coeffs: np.ndarray  # complex, bins 0..M-1 in standard DFT order

    @property
    def M(self) -> int:
        return self.coeffs.size

    def coeff(self, k: int) -> complex:
        """Coefficient for signed frequency k, |k| <= M/2."""
        if abs(k) > self.M // 2:
            raise IndexError("frequency beyond Nyquist")
        return complex(self.coeffs[k % self.M])


def _fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time radix-2 FFT, unnormalized."""
    n = x.size
    levels = n.bit_length() - 1
    # bit-reversal permutation
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for _ in range(levels):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    a = np.asarray(x, dtype=complex)[rev]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * math.pi * np.arange(half) / size)
        blocks = a.reshape(-1, size)
        even = blocks[:, :half]
        odd = blocks[:, half:] * tw
        a = np.concatenate([even + odd, even - odd], axis=1).reshape(-1)
        size *= 2
    return a


def fft_real(e: np.ndarray) -> BoundarySpectrum:
    """Forward transform with 1/M normalization: e_hat_k = (1/M) sum e_j w^(-jk)."""
    e = np.asarray(e, dtype=float)
    _check_power_of_two(e.size)
    return BoundarySpectrum(_fft_radix2(e) / e.size)


def _signed_freqs(M: int) -> np.ndarray:
    """Signed frequency of each DFT bin; the Nyquist bin maps to +M/2."""
    k = np.arange(M)
    return np.where(k <= M // 2, k, k - M)


def sobolev_penalty(e: np.ndarray, L: float, s: float, K: int | None = None) -> float:
    """Truncated spectral trace-norm estimate sum_{|k|<=K} w_k |e_hat_k|^2.

    The Nyquist bin is counted once. K defaults to the full spectrum M/2.
    """
    e = np.asarray(e, dtype=float)
    M = e.size
    if K is None:
        K = M // 2
    if K > M // 2:
        raise ValueError("truncation K exceeds Nyquist M/2")
    spec = fft_real(e)
    kk = np.abs(_signed_freqs(M))
    table = spectral_weights(L, 2.0 * s - 0.5, M // 2)
    mask = kk <= K
    return float(np.sum(table.weights[kk[mask]] * np.abs(spec.coeffs[mask]) ** 2))


@lru_cache(maxsize=32)
def _penalty_matrix_cached(M: int, L: float, s: float, K: int) -> np.ndarray:
    j = np.arange(M)
    F = np.exp(-2j * math.pi * np.outer(j, j) / M) / M
    kk = np.abs(_signed_freqs(M))
    table = spectral_weights(L, 2.0 * s - 0.5, M // 2)
    w = np.where(kk <= K, table.weights[kk], 0.0)
    A = (F.conj().T * w) @ F
    A = np.real(A)
    A = 0.5 * (A + A.T)  # exact symmetry against roundoff
    A.setflags(write=False)
    return A


def penalty_matrix(M: int, L: float, s: float, K: int | None = None) -> np.ndarray:
    """Real symmetric PSD circulant A with e^T A e == sobolev_penalty(e, L, s, K)."""
    _check_power_of_two(M)
    if K is None:
        K = M // 2
    if K > M // 2:
        raise ValueError("truncation K exceeds Nyquist M/2")
    return _penalty_matrix_cached(M, float(L), float(s), int(K))


def plugin_penalty(residuals, psi, lambdas, s: float):
    """Eigenbasis plug-in estimator:
    sum_k lambda_k^(2s-1/2) | (1/m) sum_j r_j psi_k(y_j) |^2.

    Works for numpy residuals and for tape Tensors (psi and lambdas are
    constants), so it can sit inside a training loss.
    """
    psi = np.asarray(psi, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != lambdas.size:
        raise ValueError("psi must be (K, m) matching lambdas")
    m = psi.shape[1]
    proj = (psi @ residuals) * (1.0 / m)
    w = lambdas ** (2.0 * s - 0.5)
    return ((proj * proj) * w).sum()


def slobodeckij_oracle(e: np.ndarray, L: float, sigma: float) -> float:
    """Double-integral H^sigma energy on the circle (validation oracle only).

    Trapezoidal discretization of the seminorm
    integral |e(t)-e(t')|^2 / rho(t,t')^(1+2 sigma) dt dt' with rho the
    wrap-around arc distance, plus the L^2 term.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must be in (0,1)")
    e = np.asarray(e, dtype=float)
    M = e.size
    h = L / M
    tau = np.arange(M) * h
    diff = np.abs(tau[:, None] - tau[None, :])
    rho = np.minimum(diff, L - diff)
    np.fill_diagonal(rho, 1.0)  # diagonal cells excluded below
    kernel = (e[:, None] - e[None, :]) ** 2 / rho ** (1.0 + 2.0 * sigma)
    np.fill_diagonal(kernel, 0.0)
    seminorm = kernel.sum() * h * h
    l2 = float(np.sum(e**2) * h)
    return seminorm + l2
