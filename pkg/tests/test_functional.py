import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singular_nls.errors import NumericError
from singular_nls.functional import (adversarial_directions, dJ, derivative_covector, eval_J, f1, f1_hat,
                                     f1_prime, f2, f2_prime, grad_J, grad_norm, j3, radius_from,
                                     remainder_coefficient, sphere_check)

taus = st.floats(-50.0, 50.0, allow_nan=False)
exponents = st.floats(2.05, 5.0)


def f1_reference(s, u0, p, positive=False):
    mpmath.mp.dps = 60
    s, u0, p = mpmath.mpf(s), mpmath.mpf(u0), mpmath.mpf(p)
    x = s + u0
    top = (max(x, 0) if positive else abs(x)) ** (p + 1)
    return float((top - u0 ** (p + 1) - (p + 1) * u0**p * s) / (p + 1))


@pytest.mark.parametrize("tau", [1e-9, -3e-6, 1e-3, 0.2, -0.7, -1.0, -2.5, 40.0, 5e4])
@pytest.mark.parametrize("positive", [False, True])
def test_f1_against_high_precision(tau, positive):
    u0, p = 0.37, 3.05
    ours = float(f1(tau * u0, u0, p, positive))
    ref = f1_reference(tau * u0, u0, p, positive)
    assert ours == pytest.approx(ref, rel=1e-12, abs=1e-300)


@given(taus, st.floats(1e-3, 10.0), exponents)
def test_f1_is_nonnegative_and_positive_part_is_smaller(tau, u0, p):
    s = tau * u0
    a = float(f1(s, u0, p))
    b = float(f1_hat(s, u0, p))
    assert a >= 0.0
    assert b <= a * (1 + 1e-12) + 1e-300


@given(st.floats(-5.0, 5.0), st.floats(0.05, 3.0), exponents)
def test_f1_prime_matches_a_difference_quotient(tau, u0, p):
    s = tau * u0
    h = 1e-6 * max(u0, abs(s))
    fd = (float(f1(s + h, u0, p)) - float(f1(s - h, u0, p))) / (2 * h)
    scale = max(abs(fd), u0**p)
    assert abs(float(f1_prime(s, u0, p)) - fd) <= 1e-5 * scale


@given(st.floats(-5.0, 5.0), st.floats(0.05, 3.0), st.floats(0.0, 2.0), exponents)
def test_f2_prime_matches_a_difference_quotient(tau, u0, gamma, p):
    s = tau * u0
    h = 1e-6 * max(u0, abs(s))
    fd = (float(f2(s + h, u0, gamma, p)) - float(f2(s - h, u0, gamma, p))) / (2 * h)
    scale = max(abs(fd), u0**p)
    assert abs(float(f2_prime(s, u0, gamma, p)) - fd) <= 1e-5 * scale


@settings(max_examples=30)
@given(exponents, st.floats(1.2, 4.0), st.booleans())
def test_remainder_coefficient_bounds_f1(p, excess, positive):
    a = p / 2 * excess
    b = remainder_coefficient(p, a, positive)
    tau = np.concatenate([-np.geomspace(1e-6, 1e6, 3000), np.geomspace(1e-6, 1e6, 3000)])
    lhs = f1(tau, 1.0, p, positive)
    assert np.all(lhs <= (a * tau**2 + b * np.abs(tau) ** (p + 1)) * (1 + 1e-9) + 1e-300)


def test_remainder_coefficient_needs_the_taylor_margin():
    assert math.isinf(remainder_coefficient(3.05, 1.5))


def test_radius_from_picks_the_smaller_power():
    n = 3
    base = 0.5 / (8 * 0.01)
    # q - 1 is 2 and 4 for n = 3
    assert radius_from(0.5, 0.01, n) == pytest.approx(min(base ** 0.5, base ** 0.25))
    assert math.isinf(radius_from(0.5, 0.0, n))


def test_j_vanishes_at_zero(ctx3):
    assert eval_J(np.zeros(ctx3.grid.size), ctx3) == 0.0


def test_j3_is_linear(ctx3):
    rng = np.random.default_rng(3)
    r = ctx3.grid.nodes
    a, b = (rng.normal(size=r.size) * np.exp(-r) for _ in range(2))
    lhs = j3(0.7 * a + 2.0 * b, ctx3)
    assert lhs == pytest.approx(0.7 * j3(a, ctx3) + 2.0 * j3(b, ctx3), rel=1e-12)


def test_gradient_is_the_riesz_representer(ctx3):
    r = ctx3.grid.nodes
    u = 0.2 * np.exp(-r)
    phi = np.exp(-((r - 2) ** 2))
    g = grad_J(u, ctx3)
    gram_pairing = float(np.dot(derivative_covector(u, ctx3), phi))
    assert dJ(u, phi, ctx3) == pytest.approx(gram_pairing, rel=1e-13)
    assert grad_norm(u, ctx3) == pytest.approx(ctx3.h1_norm(g.values), rel=1e-10)


def test_landscape_constants(landscape3):
    lc = landscape3
    assert lc.A == pytest.approx(0.5, abs=1e-6)
    assert lc.A_p >= lc.A / 2 - 1e-12
    assert lc.r0 > 0 and lc.m == pytest.approx(lc.A * lc.r0**2 / 4)
    assert lc.quad_coef > 3.05 / 2


def test_sphere_check_is_deterministic_and_covers_adversarial_directions(ctx3, landscape3):
    a = sphere_check(ctx3, landscape3, directions=40, seed=5)
    b = sphere_check(ctx3, landscape3, directions=40, seed=5)
    assert a == b
    assert set(a.adversarial) == set(adversarial_directions(ctx3))
    assert len(a.adversarial) == 10


def test_eval_j_reports_overflow(ctx3):
    with pytest.raises(NumericError):
        eval_J(np.full(ctx3.grid.size, 1e200), ctx3)
