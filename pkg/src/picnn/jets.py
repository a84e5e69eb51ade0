"""Second-order truncated Taylor arithmetic in two chart directions.

A Jet2 carries value, 2-gradient and symmetric 2x2 Hessian (the off-diagonal
entry stored once). Payloads may be floats, numpy arrays, or Tensors from the
reverse-mode tape; the arithmetic is identical, which is what makes the nested
derivative computation (parameter gradients of losses containing second chart
derivatives) exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf as _sp_erf

from .tape import Tensor

__all__ = ["Jet2", "jet_lift_chart", "jet_apply", "jet_const"]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# payload-dispatched elementary functions
def _exp(x):
    return x.exp() if isinstance(x, Tensor) else np.exp(x)


def _log(x):
    if isinstance(x, Tensor):
        return x.log()
    if np.any(np.asarray(x) < 1e-300):
        raise ValueError("log of nonpositive argument")
    return np.log(x)


def _sin(x):
    return x.sin() if isinstance(x, Tensor) else np.sin(x)


def _cos(x):
    return x.cos() if isinstance(x, Tensor) else np.cos(x)


def _sqrt(x):
    return x.sqrt() if isinstance(x, Tensor) else np.sqrt(x)


def _erf(x):
    return x.erf() if isinstance(x, Tensor) else _sp_erf(x)


def _relu(x):
    return x.relu() if isinstance(x, Tensor) else np.maximum(x, 0.0)


def _pos_mask(x):
    v = x.value if isinstance(x, Tensor) else np.asarray(x)
    return (v > 0).astype(float)


@dataclass
class Jet2:
    """val + grad.dx + 1/2 dx.hess.dx, truncated at second order."""
    val: object
    g0: object
    g1: object
    h00: object
    h01: object
    h11: object

    # hess is stored as (h00, h01, h11); h01 doubles as h10 by construction.

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.val + other.val, self.g0 + other.g0, self.g1 + other.g1,
                        self.h00 + other.h00, self.h01 + other.h01, self.h11 + other.h11)
        return Jet2(self.val + other, self.g0, self.g1, self.h00, self.h01, self.h11)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.val, -self.g0, -self.g1, -self.h00, -self.h01, -self.h11)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet2) else -1.0 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.val * other, self.g0 * other, self.g1 * other,
                        self.h00 * other, self.h01 * other, self.h11 * other)
        a, b = self, other
        return Jet2(
            a.val * b.val,
            a.val * b.g0 + b.val * a.g0,
            a.val * b.g1 + b.val * a.g1,
            a.val * b.h00 + b.val * a.h00 + 2.0 * a.g0 * b.g0,
            a.val * b.h01 + b.val * a.h01 + a.g0 * b.g1 + a.g1 * b.g0,
            a.val * b.h11 + b.val * a.h11 + 2.0 * a.g1 * b.g1,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * _unary(other, lambda v: 1.0 / v,
                                 lambda v: -1.0 / v**2, lambda v: 2.0 / v**3)
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return _unary(self, lambda v: 1.0 / v,
                      lambda v: -1.0 / v**2, lambda v: 2.0 / v**3) * other

    def map_linear(self, fn):
        """Apply a linear map componentwise (e.g. matmul by a constant)."""
        return Jet2(fn(self.val), fn(self.g0), fn(self.g1),
                    fn(self.h00), fn(self.h01), fn(self.h11))

    def hess(self):
        return np.array([[self.h00, self.h01], [self.h01, self.h11]])


def jet_const(c) -> Jet2:
    z = 0.0 * c if hasattr(c, "shape") else 0.0
    return Jet2(c, z, z, z, z, z)


def jet_lift_chart(theta, phi) -> tuple[Jet2, Jet2]:
    """Coordinate jets: theta seeds direction 0, phi direction 1."""
    zt = 0.0 * theta if hasattr(theta, "shape") else 0.0
    zp = 0.0 * phi if hasattr(phi, "shape") else 0.0
    one_t = zt + 1.0
    one_p = zp + 1.0
    jt = Jet2(theta, one_t, zt, zt, zt, zt)
    jp = Jet2(phi, zp, one_p, zp, zp, zp)
    return jt, jp


def _unary(j: Jet2, f, df, d2f) -> Jet2:
    """Faa di Bruno to order 2: f(j) from f, f', f'' evaluated at j.val."""
    v, d1, d2 = f(j.val), df(j.val), d2f(j.val)
    return Jet2(
        v,
        d1 * j.g0,
        d1 * j.g1,
        d1 * j.h00 + d2 * j.g0 * j.g0,
        d1 * j.h01 + d2 * j.g0 * j.g1,
        d1 * j.h11 + d2 * j.g1 * j.g1,
    )


def jet_exp(j):
    return _unary(j, _exp, _exp, _exp)


def jet_log(j):
    return _unary(j, _log, lambda v: 1.0 / v, lambda v: -1.0 / v**2)


def jet_sin(j):
    return _unary(j, _sin, _cos, lambda v: -_sin(v))


def jet_cos(j):
    return _unary(j, _cos, lambda v: -_sin(v), lambda v: -_cos(v))


def jet_sqrt(j):
    return _unary(j, _sqrt, lambda v: 0.5 / _sqrt(v), lambda v: -0.25 / _sqrt(v) ** 3)


def jet_erf(j):
    c = 2.0 / math.sqrt(math.pi)
    return _unary(j, _erf,
                  lambda v: c * _exp(-1.0 * v * v),
                  lambda v: -2.0 * c * v * _exp(-1.0 * v * v))


def jet_pow_const(j, c: float):
    return _unary(j, lambda v: v**c,
                  lambda v: c * v**(c - 1.0),
                  lambda v: c * (c - 1.0) * v**(c - 2.0))


def jet_relu(j):
    # subgradient 0 at the kink; second derivative 0 a.e.
    m = _pos_mask(j.val)
    return Jet2(_relu(j.val), m * j.g0, m * j.g1, m * j.h00, m * j.h01, m * j.h11)


def jet_requ(j):
    # (t_+)^2: value 0 at 0, first derivative 2 t_+, second 2*1{t>0}
    r = jet_relu(j)
    return r * r


def _norm_cdf(v):
    return 0.5 * (_erf(v * (1.0 / _SQRT2)) + 1.0)


def _norm_pdf(v):
    return _INV_SQRT_2PI * _exp(-0.5 * v * v)


def jet_gelu(j):
    # GeLU(t) = t*Phi(t); GeLU' = Phi + t*phi; GeLU'' = (2 - t^2)*phi
    return _unary(
        j,
        lambda v: v * _norm_cdf(v),
        lambda v: _norm_cdf(v) + v * _norm_pdf(v),
        lambda v: (2.0 - v * v) * _norm_pdf(v),
    )


def jet_gelu_sq(j):
    g = jet_gelu(j)
    return g * g


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}

_UNARY = {
    "exp": jet_exp,
    "ln": jet_log,
    "sin": jet_sin,
    "cos": jet_cos,
    "sqrt": jet_sqrt,
    "erf": jet_erf,
    "relu": jet_relu,
    "requ": jet_requ,
    "gelu": jet_gelu,
    "gelu2": jet_gelu_sq,
}


def jet_apply(f: str, *args) -> Jet2:
    """Apply a named elementary function to Jet2 arguments."""
    if f in _BINARY:
        a, b = args
        if not isinstance(a, Jet2):
            a = jet_const(a)
        if not isinstance(b, Jet2):
            b = jet_const(b)
        return _BINARY[f](a, b)
    if f == "pow_const":
        return jet_pow_const(args[0], args[1])
    if f in _UNARY:
        return _UNARY[f](args[0])
    raise KeyError(f"unknown elementary function {f!r}")
