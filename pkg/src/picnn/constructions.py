"""Executable versions of the approximation-theory building blocks.

Exact ReQU product trees, B-spline cutoffs, Matern kernels with their
singular/analytic series decomposition and truncated approximants, degree-2
ridge decompositions of the squared distance, the exact multichannel
inner-product CNN, and Matern kernel interpolation on the sphere with an
empirical convergence-rate study.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gamma as sp_gamma
from scipy.special import kv as bessel_kv

__all__ = [
    "CutoffSpec", "MaternKernel", "TruncatedApproximant", "FeatureBank",
    "MultichannelNet", "RateStudyResult",
    "requ", "requ_product", "bspline_cutoff", "matern_eval", "matern_decompose",
    "truncated_kernel", "ridge_decompose_sqdist", "ridge_eval", "standard_bank",
    "multichannel_inner_product_net", "kernel_interpolate", "interpolant_eval",
    "fibonacci_sphere", "interpolation_rate_study",
]


def requ(t):
    """Squared rectifier sigma_2(t) = (t_+)^2."""
    return np.maximum(t, 0.0) ** 2


def _requ_pair_product(a, b):
    # xy = (s2(x+y) + s2(-x-y) - s2(x-y) - s2(-x+y)) / 4
    return (requ(a + b) + requ(-a - b) - requ(a - b) - requ(-a + b)) / 4.0


def requ_product(xs) -> float:
    """Product of n >= 2 reals computed by a binary tree of ReQU pair gadgets."""
    vals = [float(v) for v in xs]
    if len(vals) < 2:
        raise ValueError("product tree needs at least two inputs")
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(_requ_pair_product(vals[i], vals[i + 1]))
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return float(vals[0])


# ---------------------------------------------------------------------------
# B-spline cutoffs


@dataclass(frozen=True)
class CutoffSpec:
    p: int = 2

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("cutoff order p must be >= 1")


def _bspline_antiderivative(p: int, t):
    """beta_p(t) = (1/(p+1)!) sum_j (-1)^j C(p+1,j) (t-j)_+^(p+1)."""
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(t)
    for j in range(p + 2):
        acc += (-1.0) ** j * math.comb(p + 1, j) * np.maximum(t - j, 0.0) ** (p + 1)
    return acc / math.factorial(p + 1)


def bspline_cutoff(spec: CutoffSpec, t):
    """C^p cutoff: 1 on t <= 1, 0 on t >= 2, monotone transition between."""
    ta = np.asarray(t, dtype=float)
    val = 1.0 - _bspline_antiderivative(spec.p, (spec.p + 1) * (ta - 1.0))
    # the plateaus are exact; evaluating the truncated-power sum far out of
    # the window loses them to cancellation
    val = np.where(ta <= 1.0, 1.0, np.where(ta >= 2.0, 0.0, val))
    return float(val) if np.ndim(t) == 0 else val


# ---------------------------------------------------------------------------
# Matern kernels


@dataclass(frozen=True)
class MaternKernel:
    tau: float
    ambient_D: int = 3

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("Matern requires tau > D/2")

    @property
    def nu(self) -> float:
        return self.tau - self.ambient_D / 2.0


def _rnu_knu(nu: float, r):
    """r^nu K_nu(r) with the r=0 limit 2^(nu-1) Gamma(nu)."""
    r = np.asarray(r, dtype=float)
    out = np.full_like(r, 2.0 ** (nu - 1.0) * sp_gamma(nu))
    pos = r > 0
    if nu == 0.5:
        out[pos] = math.sqrt(math.pi / 2.0) * np.exp(-r[pos])
    elif nu == 1.5:
        out[pos] = math.sqrt(math.pi / 2.0) * np.exp(-r[pos]) * (1.0 + r[pos])
    elif nu == 2.5:
        out[pos] = math.sqrt(math.pi / 2.0) * np.exp(-r[pos]) * (3.0 + 3.0 * r[pos] + r[pos] ** 2)
    else:
        out[pos] = r[pos] ** nu * bessel_kv(nu, r[pos])
    return out


def matern_eval(k: MaternKernel, r):
    """phi(r) = (2^(1-tau)/Gamma(tau)) r^nu K_nu(r), phi(0) by the limit."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    scale = 2.0 ** (1.0 - k.tau) / sp_gamma(k.tau)
    val = scale * _rnu_knu(k.nu, r)
    return float(val) if np.ndim(r) == 0 else val


def matern_decompose(k: MaternKernel, u, N: int):
    """Truncated series of the decomposition r^nu K_nu(r) = A(r^2) + r^(2 nu) B(r^2).

    Valid for non-integer nu only (reflection-formula blowup otherwise).
    """
    nu = k.nu
    if abs(nu - round(nu)) < 1e-3:
        raise ValueError("decomposition requires nu at least 1e-3 away from integers")
    if N > 60:
        raise ValueError("series degree capped at 60 (factorial overflow)")
    u = np.asarray(u, dtype=float)
    pref = math.pi / (2.0 * math.sin(math.pi * nu))
    a = np.zeros_like(u)
    b = np.zeros_like(u)
    for m in range(N + 1):
        um = u ** m
        a += um / (math.factorial(m) * sp_gamma(m - nu + 1.0) * 2.0 ** (2 * m - nu))
        b += um / (math.factorial(m) * sp_gamma(m + nu + 1.0) * 2.0 ** (2 * m + nu))
    a *= pref
    b *= -pref
    if np.ndim(u) == 0:
        return float(a), float(b)
    return a, b


@dataclass(frozen=True)
class TruncatedApproximant:
    eta: float
    N: int
    p: int = 2
    m: int = 4

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0,1)")


def _taylor_power(nu: float, eta: float, m: int, u):
    """Degree-m Taylor polynomial of u^nu about u = eta."""
    u = np.asarray(u, dtype=float)
    acc = np.zeros_like(u)
    coeff = 1.0
    for i in range(m + 1):
        if i > 0:
            coeff *= (nu - (i - 1)) / i
        acc += coeff * eta ** (nu - i) * (u - eta) ** i
    return acc


def truncated_kernel(t: TruncatedApproximant, k: MaternKernel, u):
    """Blended approximant phi~(u) = A_N(u) + u^nu~(u) B_N(u).

    The singular factor u^nu is replaced near the origin by its Taylor patch
    Q_{eta,m}, glued with the B-spline cutoff on the window [eta, 2 eta].
    """
    u = np.asarray(u, dtype=float)
    nu = k.nu
    a, b = matern_decompose(k, u, t.N)
    chi = bspline_cutoff(CutoffSpec(t.p), u / t.eta)
    power = np.where(u > 0, np.maximum(u, 1e-300) ** nu, 0.0)
    u_nu = chi * _taylor_power(nu, t.eta, t.m, u) + (1.0 - chi) * power
    scale = 2.0 ** (1.0 - k.tau) / sp_gamma(k.tau)
    val = scale * (a + u_nu * b)
    return float(val) if np.ndim(u) == 0 else val


# ---------------------------------------------------------------------------
# ridge decomposition and the multichannel inner-product network


@dataclass(frozen=True)
class FeatureBank:
    xi: np.ndarray  # (m, D) unit rows

    def __post_init__(self):
        norms = np.linalg.norm(self.xi, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("feature directions must be unit vectors")

    @property
    def count(self) -> int:
        return self.xi.shape[0]


def standard_bank(D: int = 3) -> FeatureBank:
    """Axes plus normalized pairwise sums: {e_i} and {(e_i+e_j)/sqrt(2)}."""
    rows = list(np.eye(D))
    for i in range(D):
        for j in range(i + 1, D):
            v = np.zeros(D)
            v[i] = v[j] = 1.0
            rows.append(v / math.sqrt(2.0))
    return FeatureBank(np.array(rows))


def ridge_decompose_sqdist(y):
    """Quadratic ridge coefficients with sum_i p_i(xi_i . x) = ||x - y||^2.

    Returns (bank, coeffs) with coeffs[i] = (a_i, b_i, c_i) for
    p_i(s) = a_i s^2 + b_i s + c_i. Only the axis features are needed for the
    squared distance; cross features carry zero coefficients.
    """
    y = np.asarray(y, dtype=float)
    D = y.size
    bank = standard_bank(D)
    coeffs = np.zeros((bank.count, 3))
    for i in range(D):
        coeffs[i] = (1.0, -2.0 * y[i], 0.0)
    coeffs[0, 2] = float(y @ y)
    return bank, coeffs


def ridge_eval(bank: FeatureBank, coeffs: np.ndarray, x):
    x = np.asarray(x, dtype=float)
    s = bank.xi @ x
    return float(np.sum(coeffs[:, 0] * s**2 + coeffs[:, 1] * s + coeffs[:, 2]))


@dataclass
class MultichannelNet:
    """One-sided conv net computing (<xi_1,x>, ..., <xi_m,x>) exactly.

    Three channels per feature: positive and negative running sums of the
    inner product (via t = relu(t) - relu(-t)) and a shifted copy of the
    input carried forward by the e_S filter tap; the shift constant keeps the
    carried values positive so ReLU acts as the identity.
    """
    filters: list  # per layer, (S, C_out, C_in)
    biases: list
    bank: FeatureBank
    D: int
    S: int
    shift: float

    @property
    def depth(self) -> int:
        return len(self.filters)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        if x.shape[0] != self.D:
            raise ValueError(f"input length must be {self.D}")
        if np.max(np.abs(x)) >= self.shift:
            raise ValueError("input exceeds the positivity shift bound")
        h = x
        from .network import conv1d_onesided
        for w, b in zip(self.filters, self.biases):
            h = np.maximum(conv1d_onesided(h, w, b), 0.0)
        m = self.bank.count
        return np.array([h[0, 3 * r] - h[0, 3 * r + 1] for r in range(m)])

    def nonzero_filter_entries(self) -> int:
        return sum(int(np.count_nonzero(w)) for w in self.filters)


def multichannel_inner_product_net(bank: FeatureBank, D: int, S: int,
                                   shift: float = 32.0) -> MultichannelNet:
    """Exact inner-product CNN: depth ceil((D-1)/(S-1)), 3 channels/feature.

    Layer ell extends each feature's running window to q_ell = min(ell(S-1)+1, D)
    input positions; position 0 of the last layer holds the full inner product
    split into positive/negative parts.
    """
    if not 2 <= S <= D:
        raise ValueError("filter size S must lie in [2, D]")
    m = bank.count
    L = math.ceil((D - 1) / (S - 1))
    xi = bank.xi  # (m, D)
    filters, biases = [], []

    # layer 1: 1 input channel -> 3m channels; window q_1 = S
    w = np.zeros((S, 3 * m, 1))
    b = np.zeros(3 * m)
    for r in range(m):
        for k in range(S):
            w[k, 3 * r, 0] = xi[r, k]
            w[k, 3 * r + 1, 0] = -xi[r, k]
        w[S - 1, 3 * r + 2, 0] = 1.0
        b[3 * r + 2] = shift
    filters.append(w)
    biases.append(b)

    for ell in range(2, L + 1):
        q_prev = (ell - 1) * (S - 1) + 1
        w = np.zeros((S, 3 * m, 3 * m))
        b = np.zeros(3 * m)
        for r in range(m):
            p, n, t = 3 * r, 3 * r + 1, 3 * r + 2
            # running sum: previous P - N plus tail contributions
            w[0, p, p], w[0, p, n] = 1.0, -1.0
            w[0, n, p], w[0, n, n] = -1.0, 1.0
            for kp in range(1, S):
                j = q_prev - 1 + kp
                if j < D:
                    w[kp, p, t] = xi[r, j]
                    w[kp, n, t] = -xi[r, j]
                    b[p] -= shift * xi[r, j]
                    b[n] += shift * xi[r, j]
            # carry the shifted input forward
            w[S - 1, t, t] = 1.0
        filters.append(w)
        biases.append(b)
    return MultichannelNet(filters, biases, bank, D, S, shift)


# ---------------------------------------------------------------------------
# kernel interpolation on the sphere


def kernel_interpolate(X: np.ndarray, fvals: np.ndarray, k: MaternKernel) -> np.ndarray:
    """Solve the Gram system K c = f for the kernel interpolant coefficients."""
    X = np.asarray(X, dtype=float)
    fvals = np.asarray(fvals, dtype=float)
    if X.shape[0] != fvals.size:
        raise ValueError("need one value per node")
    dists = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    G = matern_eval(k, dists)
    try:
        c = cho_solve(cho_factor(G), fvals)
    except np.linalg.LinAlgError as ex:
        raise np.linalg.LinAlgError(f"Gram matrix not positive definite: {ex}")
    resid = np.max(np.abs(G @ c - fvals))
    if resid > 1e-8 * max(1.0, np.max(np.abs(fvals))):
        raise RuntimeError(f"interpolation residual too large: {resid:.3e}")
    return c


def interpolant_eval(x, X, c, k: MaternKernel):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.linalg.norm(x[:, None, :] - X[None, :, :], axis=-1)
    return matern_eval(k, d) @ c


def fibonacci_sphere(N: int) -> np.ndarray:
    """Quasi-uniform spiral lattice of N points on the unit 2-sphere."""
    if N < 1:
        raise ValueError("need N >= 1 nodes")
    i = np.arange(N)
    z = 1.0 - (2.0 * i + 1.0) / N
    phi = 2.0 * math.pi * i / ((1.0 + math.sqrt(5.0)) / 2.0)
    rho = np.sqrt(np.maximum(1.0 - z**2, 0.0))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


@dataclass(frozen=True)
class RateStudyResult:
    Ns: tuple
    errors: tuple
    slope: float
    intercept: float

    def to_csv(self) -> str:
        lines = ["N,error,slope"]
        for n, e in zip(self.Ns, self.errors):
            lines.append(f"{n},{e!r},{self.slope!r}")
        return "\n".join(lines) + "\n"


def interpolation_rate_study(k: MaternKernel, f, Ns, n_test: int = 4000,
                             seed: int = 0) -> RateStudyResult:
    """Monte-Carlo L2 interpolation error on the sphere vs node count.

    Nodes are Fibonacci lattices; the fitted slope of log(error) against
    log(N) estimates the Sobolev convergence rate -(k-s)/d at s=0.
    """
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_test, 3))
    test = g / np.linalg.norm(g, axis=1, keepdims=True)
    ftest = np.array([f(p) for p in test])
    errors = []
    for N in Ns:
        X = fibonacci_sphere(int(N))
        fvals = np.array([f(p) for p in X])
        c = kernel_interpolate(X, fvals, k)
        approx = interpolant_eval(test, X, c, k)
        errors.append(float(np.sqrt(np.mean((approx - ftest) ** 2))))
    logn = np.log(np.asarray(Ns, dtype=float))
    loge = np.log(np.asarray(errors))
    slope, intercept = np.polyfit(logn, loge, 1)
    return RateStudyResult(tuple(int(n) for n in Ns), tuple(errors),
                           float(slope), float(intercept))
