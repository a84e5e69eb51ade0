"""Second-order jet arithmetic against central finite differences."""
import math

import numpy as np
import pytest

from picnn.jets import (Jet2, jet_apply, jet_const, jet_lift_chart, jet_gelu,
                        jet_gelu_sq, jet_relu, jet_requ)

H = 1e-4


def _fd_jet(f, t0, p0):
    """Value, gradient and Hessian of a scalar chart function by central FD."""
    val = f(t0, p0)
    g0 = (f(t0 + H, p0) - f(t0 - H, p0)) / (2 * H)
    g1 = (f(t0, p0 + H) - f(t0, p0 - H)) / (2 * H)
    h00 = (f(t0 + H, p0) - 2 * val + f(t0 - H, p0)) / H**2
    h11 = (f(t0, p0 + H) - 2 * val + f(t0, p0 - H)) / H**2
    h01 = (f(t0 + H, p0 + H) - f(t0 + H, p0 - H)
           - f(t0 - H, p0 + H) + f(t0 - H, p0 - H)) / (4 * H**2)
    return val, g0, g1, h00, h01, h11


def _assert_matches(jet, f, t0, p0, tol=2e-5):
    ref = _fd_jet(f, t0, p0)
    got = (jet.val, jet.g0, jet.g1, jet.h00, jet.h01, jet.h11)
    for a, b in zip(got, ref):
        assert abs(a - b) < tol, f"{got} vs {ref}"


@pytest.mark.parametrize("name,fn", [
    ("exp", np.exp),
    ("sin", np.sin),
    ("cos", np.cos),
    ("erf", lambda x: math.erf(x)),
])
def test_unary_smooth(name, fn):
    t0, p0 = 0.4, -0.3
    jt, jp = jet_lift_chart(t0, p0)
    expr = jt * jp + jt * 2.0
    _assert_matches(jet_apply(name, expr), lambda t, p: fn(t * p + 2 * t), t0, p0)


def test_log_sqrt_pow():
    t0, p0 = 0.7, 0.9
    jt, jp = jet_lift_chart(t0, p0)
    arg = jt * jt + jp + 1.0
    _assert_matches(jet_apply("ln", arg), lambda t, p: np.log(t * t + p + 1), t0, p0)
    _assert_matches(jet_apply("sqrt", arg), lambda t, p: np.sqrt(t * t + p + 1), t0, p0)
    _assert_matches(jet_apply("pow_const", arg, 1.7),
                    lambda t, p: (t * t + p + 1) ** 1.7, t0, p0)


def test_product_quotient_rules():
    t0, p0 = 1.1, 0.6
    jt, jp = jet_lift_chart(t0, p0)
    _assert_matches(jt * jt * jp, lambda t, p: t * t * p, t0, p0)
    _assert_matches(jt / (jp + 2.0), lambda t, p: t / (p + 2), t0, p0)
    _assert_matches(3.0 / (jt + jp), lambda t, p: 3.0 / (t + p), t0, p0)
    _assert_matches(jt - jp * 0.5 + 1.0, lambda t, p: t - 0.5 * p + 1, t0, p0)


def test_gelu_jet_values_at_zero():
    jt, _ = jet_lift_chart(0.0, 0.0)
    g = jet_gelu(jt)
    assert abs(g.val - 0.0) < 1e-15
    assert abs(g.g0 - 0.5) < 1e-15
    assert abs(g.h00 - 0.7978845608028654) < 1e-14


def test_gelu_and_square_fd():
    t0, p0 = 0.35, -0.8
    jt, jp = jet_lift_chart(t0, p0)
    arg = jt + jp * jp

    def gelu(x):
        return x * 0.5 * (1 + math.erf(x / math.sqrt(2)))

    _assert_matches(jet_gelu(arg), lambda t, p: gelu(t + p * p), t0, p0)
    _assert_matches(jet_gelu_sq(arg), lambda t, p: gelu(t + p * p) ** 2, t0, p0)


def test_relu_requ_away_from_kink():
    t0, p0 = 0.9, 0.2
    jt, jp = jet_lift_chart(t0, p0)
    arg = jt * jp - 0.05
    _assert_matches(jet_relu(arg), lambda t, p: max(t * p - 0.05, 0.0), t0, p0)
    _assert_matches(jet_requ(arg), lambda t, p: max(t * p - 0.05, 0.0) ** 2, t0, p0)
    neg = jet_relu(jet_const(-2.0) + jt * 0.0)
    assert neg.val == 0.0 and neg.g0 == 0.0


def test_requ_second_derivative_constant():
    # (t_+)^2 has second derivative exactly 2 on the positive side
    for t0 in (0.1, 1.0, 5.0):
        jt, _ = jet_lift_chart(t0, 0.0)
        r = jet_requ(jt)
        assert abs(r.h00 - 2.0) < 1e-14
        assert abs(r.g0 - 2.0 * t0) < 1e-14


def test_array_payload():
    theta = np.linspace(0.2, 1.2, 7)
    phi = np.linspace(-1.0, 1.0, 7)
    jt, jp = jet_lift_chart(theta, phi)
    out = jet_apply("exp", jt * jp)
    for i in range(7):
        st, sp = jet_lift_chart(theta[i], phi[i])
        scalar = jet_apply("exp", st * sp)
        assert abs(out.val[i] - scalar.val) < 1e-15
        assert abs(out.h01[i] - scalar.h01) < 1e-15


def test_const_has_zero_derivatives():
    c = jet_const(3.5)
    assert c.val == 3.5 and c.g0 == 0.0 and c.h01 == 0.0
    jt, _ = jet_lift_chart(1.0, 2.0)
    s = jt + c
    assert s.val == 4.5 and s.g0 == 1.0 and s.h00 == 0.0


def test_unknown_elementary_raises():
    jt, _ = jet_lift_chart(0.0, 0.0)
    with pytest.raises(KeyError):
        jet_apply("tanh", jt)


def test_hess_symmetry_container():
    jt, jp = jet_lift_chart(0.3, 0.4)
    h = (jt * jp * jp).hess()
    assert h.shape == (2, 2)
    assert h[0, 1] == h[1, 0]
