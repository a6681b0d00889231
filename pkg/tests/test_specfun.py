import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from singular_nls.errors import DomainError
from singular_nls.specfun import (KernelParams, bessel_j, bessel_k, decaying_log_derivative, first_zero,
                                  green_kernel, green_kernel_gradient, kernel_lq_norm, sphere_area)

orders = st.floats(0.0, 6.0)
arguments = st.floats(1e-3, 60.0)


@pytest.mark.parametrize("nu", [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.7, 5.0])
def test_bessel_k_matches_scipy(nu):
    x = np.geomspace(1e-4, 80.0, 400)
    ours = bessel_k(nu, x)
    ref = special.kv(nu, x)
    assert np.max(np.abs(ours / ref - 1.0)) < 1e-13


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.5])
def test_bessel_k_branches_agree_at_the_seam(nu):
    for x in (1.5, 2.0, 2.5):
        a = bessel_k(nu, x, branch="series")
        b = bessel_k(nu, x, branch="fraction")
        assert abs(a / b - 1.0) < 1e-13


def test_bessel_k_half_order_closed_form():
    x = np.geomspace(1e-3, 50.0, 50)
    assert np.allclose(bessel_k(0.5, x), np.sqrt(np.pi / (2 * x)) * np.exp(-x), rtol=1e-14, atol=0)


@given(orders, arguments)
def test_bessel_k_recurrence(nu, x):
    # K_{nu+1} - K_{nu-1} = (2 nu / x) K_nu
    lhs = bessel_k(nu + 1.0, x) - bessel_k(nu - 1.0, x)
    rhs = 2.0 * nu / x * bessel_k(nu, x)
    assert math.isclose(lhs, rhs, rel_tol=1e-11, abs_tol=1e-300 + 1e-13 * bessel_k(nu + 1.0, x))


@given(orders, arguments)
def test_bessel_k_is_even_in_order_and_positive(nu, x):
    assert bessel_k(-nu, x) == bessel_k(nu, x)
    assert bessel_k(nu, x) > 0.0


@given(orders, st.floats(1e-2, 40.0), st.floats(1e-3, 0.5))
def test_bessel_k_decreasing_in_x(nu, x, dx):
    assert bessel_k(nu, x + dx) < bessel_k(nu, x)


def test_bessel_k_rejects_nonpositive_argument():
    with pytest.raises(DomainError):
        bessel_k(1.0, 0.0)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.0, 3.5])
def test_bessel_j_matches_scipy(nu):
    x = np.linspace(0.01, 40.0, 500)
    ours = bessel_j(nu, x)
    ref = special.jv(nu, x)
    assert np.max(np.abs(ours - ref)) < 1e-12


def test_first_zero_of_bessel_j():
    for nu, ref in ((0.0, special.jn_zeros(0, 1)[0]), (1.0, special.jn_zeros(1, 1)[0])):
        assert abs(first_zero(lambda x: bessel_j(nu, x), start=0.1) - ref) < 1e-12


def test_sphere_area_low_dimensions():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@given(st.integers(1, 7), st.floats(0.1, 10.0), st.floats(1e-3, 20.0))
def test_kernel_scaling(n, omega, r):
    k = math.sqrt(omega)
    lhs = green_kernel(KernelParams(n, omega), r)
    rhs = omega ** ((n - 2) / 2) * green_kernel(KernelParams(n, 1.0), k * r)
    assert math.isclose(lhs, rhs, rel_tol=1e-12)


@given(st.integers(1, 6), st.floats(0.1, 10.0), st.floats(1e-3, 20.0))
def test_kernel_gradient_matches_difference_quotient(n, omega, r):
    p = KernelParams(n, omega)
    h = 1e-6 * r
    fd = -(green_kernel(p, r + h) - green_kernel(p, r - h)) / (2 * h)
    assert math.isclose(green_kernel_gradient(p, r), fd, rel_tol=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("omega", [0.5, 2.0])
def test_kernel_has_unit_mass_over_omega(n, omega):
    assert kernel_lq_norm(KernelParams(n, omega), 1.0) == pytest.approx(1.0 / omega, rel=1e-9)


def test_kernel_lq_norm_against_quadrature_and_divergence():
    p = KernelParams(3, 1.0)
    ref = integrate.quad(lambda r: (np.exp(-r) / (4 * np.pi * r)) ** 2 * 4 * np.pi * r**2, 0, np.inf)[0] ** 0.5
    assert kernel_lq_norm(p, 2.0) == pytest.approx(ref, rel=1e-9)
    # near the origin G ~ r^(2-n) is in L^s only for s < n/(n-2)
    assert math.isinf(kernel_lq_norm(p, 3.0))
    assert math.isinf(kernel_lq_norm(p, 1.5, derivative=1))


def test_decaying_log_derivative_three_dimensions():
    # w = e^{-k r}/r
    for omega, r in ((1.0, 5.0), (4.0, 0.3)):
        k = math.sqrt(omega)
        assert decaying_log_derivative(3, omega, r) == pytest.approx(-k - 1.0 / r, rel=1e-13)


@settings(max_examples=25)
@given(st.integers(1, 6), st.floats(-5.0, 0.0))
def test_kernel_params_validation(n, omega):
    with pytest.raises(DomainError):
        KernelParams(n, omega)
    with pytest.raises(DomainError):
        KernelParams(0, 1.0)
