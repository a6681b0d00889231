"""Bessel functions and the Helmholtz resolvent kernel.

``bessel_k`` uses Temme's series for x <= 2 and Steed's continued fraction
above, both evaluated at a reduced order |mu| <= 1/2 and lifted to the
requested order by forward recurrence (stable for K).  ``bessel_j`` uses the
ascending series for small x and Miller's backward recurrence, normalised by
the Neumann-type sum, for larger x.

The kernel ``green_kernel`` is the fundamental solution of -Laplace + omega in
R^n written through K_{(n-2)/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError

_EPS = 1e-16
_MAXIT = 10000
_TEMME_SEAM = 2.0

# Taylor coefficients of 1/Gamma(z) about 0, index k multiplies z**k.
_RGAMMA_TAYLOR = (
    0.0,
    1.0,
    0.57721566490153286,
    -0.65587807152025388,
    -0.042002635034095236,
    0.16653861138229149,
    -0.042197734555544337,
    -0.0096219715278769736,
    0.0072189432466630995,
    -0.0011651675918590651,
    -0.00021524167411495097,
    0.00012805028238811619,
    -2.0134854780788239e-5,
    -1.2504934821426707e-6,
    1.1330272319816959e-6,
    -2.0563384169776071e-7,
    6.1160951044814158e-9,
    5.0020076444692229e-9,
    -1.1812745704870201e-9,
    1.0434267116911005e-10,
    7.7822634399050713e-12,
    -3.6968056186422057e-12,
    5.100370287454476e-13,
    -2.0583260535665068e-14,
    -5.348122539423018e-15,
    1.2267786282382608e-15,
    -1.1812593016974588e-16,
)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _temme_gammas(mu):
    """Return gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu) for |mu| <= 1/2."""
    mu2 = mu * mu
    gam1 = 0.0
    gam2 = 0.0
    power = 1.0
    for k in range(1, len(_RGAMMA_TAYLOR) - 1, 2):
        gam2 += _RGAMMA_TAYLOR[k] * power
        gam1 -= _RGAMMA_TAYLOR[k + 1] * power
        power *= mu2
    return gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1


def _k_pair_temme(mu, x):
    """K_mu(x), K_{mu+1}(x) from Temme's series, x <= 2."""
    half = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -math.log(half)
    e = mu * d
    fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _temme_gammas(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = half * half
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= d / i
        p /= i - mu
        q /= i + mu
        term = c * ff
        total += term
        total1 += c * (p - i * ff)
        if abs(term) < abs(total) * _EPS:
            break
    return total, total1 * 2.0 / x


def _k_pair_steed(mu, x):
    """K_mu(x), K_{mu+1}(x) from Steed's continued fraction, x > 2."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    return kmu, kmu * (mu + x + 0.5 - h) / x


def _bessel_k_scalar(nu, x, branch=None):
    if not x > 0.0:
        raise DomainError(f"bessel_k requires x > 0, got {x!r}")
    nu = abs(nu)
    shift = int(nu + 0.5)
    mu = nu - shift
    use_temme = x <= _TEMME_SEAM if branch is None else branch == "series"
    kmu, kmu1 = _k_pair_temme(mu, x) if use_temme else _k_pair_steed(mu, x)
    for i in range(1, shift + 1):
        kmu, kmu1 = kmu1, (mu + i) * (2.0 / x) * kmu1 + kmu
    return kmu


def bessel_k(nu, x, *, branch=None):
    """Modified Bessel function of the second kind K_nu(x) for x > 0.

    Negative orders are accepted through K_{-nu} = K_nu.  ``branch`` forces
    the "series" or "fraction" evaluation; it exists for seam diagnostics.
    """
    if np.ndim(x) == 0 and np.ndim(nu) == 0:
        return _bessel_k_scalar(float(nu), float(x), branch)
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    out = np.empty(x_b.shape)
    for idx in np.ndindex(x_b.shape):
        out[idx] = _bessel_k_scalar(nu_b[idx], x_b[idx], branch)
    return out


def _bessel_j_series(nu, x):
    half = 0.5 * x
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    total = term
    q = half * half
    for k in range(1, 500):
        term *= -q / (k * (k + nu))
        total += term
        if abs(term) < _EPS * abs(total):
            break
    return total


def _bessel_j_miller(nu, x):
    base = math.floor(nu)
    mu = nu - base
    top = int(2 * ((int(x + nu) + 30 + int(10.0 * math.sqrt(x))) // 2))
    values = np.zeros(top + 2)
    values[top] = 1e-30
    norm = 0.0
    for k in range(top, 0, -1):
        values[k - 1] = 2.0 * (mu + k) / x * values[k] - values[k + 1]
        if abs(values[k - 1]) > 1e250:
            values *= 1e-250
            norm *= 1e-250
        if (k - 1) % 2 == 0 and k - 1 > 0:
            j = (k - 1) // 2
            norm += math.exp(math.log(mu + 2 * j) + math.lgamma(mu + j) - math.lgamma(j + 1.0)) * values[k - 1]
    norm += math.gamma(mu + 1.0) * values[0]
    scale = math.exp(mu * math.log(0.5 * x)) / norm
    return values[base] * scale


def _bessel_j_scalar(nu, x):
    if x < 0.0:
        raise DomainError(f"bessel_j requires x >= 0, got {x!r}")
    if nu < 0.0:
        raise DomainError(f"bessel_j requires nu >= 0, got {nu!r}")
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    if x <= 5.0 or x < nu:
        return _bessel_j_series(nu, x)
    return _bessel_j_miller(nu, x)


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x), nu >= 0, x >= 0."""
    if np.ndim(x) == 0 and np.ndim(nu) == 0:
        return _bessel_j_scalar(float(nu), float(x))
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    out = np.empty(x_b.shape)
    for idx in np.ndindex(x_b.shape):
        out[idx] = _bessel_j_scalar(nu_b[idx], x_b[idx])
    return out


def first_zero(func, step=0.05, start=1e-8, tol=1e-14, limit=200.0):
    """First sign change of ``func`` on (start, limit) refined by bisection."""
    a = start
    fa = func(a)
    b = a + step
    while b < limit:
        fb = func(b)
        if fa == 0.0:
            return a
        if fa * fb < 0.0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = func(mid)
                if fa * fm <= 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
                if b - a < tol * max(1.0, abs(a)):
                    break
            return 0.5 * (a + b)
        a, fa = b, fb
        b += step
    raise DomainError("no sign change found")


@dataclass(frozen=True)
class KernelParams:
    """Dimension and spectral shift of the resolvent kernel."""

    n: int
    omega: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n!r}")
        if not self.omega > 0.0:
            raise DomainError(f"omega must be positive, got {self.omega!r}")

    @property
    def order(self) -> float:
        return (self.n - 2) / 2.0


def green_kernel(params: KernelParams, r):
    """Fundamental solution of (-Laplace + omega) at radius r > 0."""
    r_arr = np.asarray(r, float)
    if np.any(r_arr <= 0.0):
        raise DomainError("green_kernel is defined for r > 0 only")
    nu = params.order
    z = math.sqrt(params.omega) * r_arr
    prefactor = (2.0 * math.pi) ** (-params.n / 2.0) * params.omega**nu
    value = prefactor * z ** (-nu) * bessel_k(nu, z)
    return float(value) if np.ndim(r) == 0 else value


def green_kernel_gradient(params: KernelParams, r):
    """Modulus of the radial derivative of ``green_kernel``."""
    r_arr = np.asarray(r, float)
    if np.any(r_arr <= 0.0):
        raise DomainError("green_kernel_gradient is defined for r > 0 only")
    nu = params.order
    root = math.sqrt(params.omega)
    z = root * r_arr
    prefactor = (2.0 * math.pi) ** (-params.n / 2.0) * params.omega**nu * root
    value = prefactor * z ** (-nu) * bessel_k(nu + 1.0, z)
    return float(value) if np.ndim(r) == 0 else value


def decaying_log_derivative(n: int, omega: float, r: float) -> float:
    """w'/w of the decaying radial solution of (-Laplace + omega) w = 0."""
    nu = (n - 2) / 2.0
    z = math.sqrt(omega) * r
    return -math.sqrt(omega) * bessel_k(nu + 1.0, z) / bessel_k(nu, z)


def kernel_lq_norm(params: KernelParams, s: float, derivative: int = 0) -> float:
    """L^s(R^n) norm of the kernel (or of its gradient when derivative=1).

    Returns ``math.inf`` when the norm diverges.  The integral is split at
    r = 1; the inner part is integrated in the variable y = -log r so the
    power or logarithmic singularity at the origin becomes a decaying tail.
    """
    if s < 1.0:
        raise DomainError(f"s must be >= 1, got {s!r}")
    if derivative not in (0, 1):
        raise DomainError("derivative must be 0 or 1")
    n = params.n
    func = green_kernel if derivative == 0 else green_kernel_gradient
    singular_power = (2 - n) if derivative == 0 else (1 - n)
    if math.isinf(s):
        if singular_power < 0 or (n == 2 and derivative == 0):
            return math.inf
        # The radial profile is decreasing, so the supremum sits at r -> 0.
        if n == 1:
            root = math.sqrt(params.omega)
            return 1.0 / (2.0 * root) if derivative == 0 else 0.5
        return float(func(params, 1e-12))
    if singular_power < 0 and singular_power * s + n <= 0:
        return math.inf

    def inner(y):
        r = math.exp(-y)
        return math.exp(s * math.log(func(params, r)) - n * y)

    def outer(r):
        return func(params, r) ** s * r ** (n - 1)

    # Near the origin the integrand behaves like exp(-decay * y).
    decay = singular_power * s + n if singular_power < 0 else float(n)
    y_max = 150.0
    part_in, _ = integrate.quad(inner, 0.0, y_max, epsabs=0.0, epsrel=1e-12, limit=400)
    part_in += inner(y_max) / decay
    part_out, _ = integrate.quad(outer, 1.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    return (sphere_area(n) * (part_in + part_out)) ** (1.0 / s)
