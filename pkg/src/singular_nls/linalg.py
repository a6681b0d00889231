"""Symmetric tridiagonal matrices stored as (diag, off) pairs.

The discrete quadratic forms on a radial grid are tridiagonal: the P1
gradient form couples neighbouring nodes and the mass matrix is lumped.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded, solveh_banded

from .errors import NumericError


def stiffness_matrix(grid):
    """(diag, off) of u -> int |u'|^2 dx for piecewise linear u."""
    s = grid.stiffness
    diag = np.zeros(grid.size)
    diag[:-1] += s
    diag[1:] += s
    return diag, -s


def form_matrix(grid, potential):
    """(diag, off) of int |u'|^2 + V u^2 dx with lumped mass."""
    diag, off = stiffness_matrix(grid)
    if callable(potential):
        from .grid import sample_potential

        V = sample_potential(grid, potential)
    else:
        V = np.asarray(potential, float) * np.ones(grid.size)
    return diag + grid.measure * V, off


def apply(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def quadratic_form(diag, off, x, y=None):
    """x^T T y written through differences so large cancelling entries stay accurate."""
    y = x if y is None else y
    row = diag.copy()
    row[:-1] += off
    row[1:] += off
    return float(np.dot(-off, np.diff(x) * np.diff(y)) + np.dot(row, x * y))


def solve_spd(diag, off, rhs):
    """Solve T x = rhs for symmetric positive definite tridiagonal T."""
    ab = np.zeros((2, len(diag)))
    ab[0, 1:] = off
    ab[1] = diag
    try:
        return solveh_banded(ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError("solve_spd", f"matrix not positive definite: {exc}") from exc


def solve_tridiag(diag, off, rhs):
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def sturm_count(a_diag, a_off, b_diag, b_off, shift):
    """Number of eigenvalues of the pencil (A, B) below ``shift``."""
    d = a_diag - shift * b_diag
    e = a_off - shift * b_off
    count = 0
    q = d[0]
    if q < 0.0:
        count += 1
    for i in range(1, len(d)):
        if q == 0.0:
            q = 1e-300
        q = d[i] - e[i - 1] * e[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def lowest_eigenpair(a_diag, a_off, b_diag, b_off=None, rtol=1e-13, max_iter=500):
    """Smallest eigenpair of A x = lam B x with B positive definite.

    Sturm counts bracket the eigenvalue, then shifted inverse iteration with
    Rayleigh quotients refines it.  Returns (lam, x, trace) with x^T B x = 1.
    """
    a_diag = np.asarray(a_diag, float)
    a_off = np.asarray(a_off, float)
    b_diag = np.asarray(b_diag, float)
    b_off = np.zeros(len(a_off)) if b_off is None else np.asarray(b_off, float)
    trace = []
    ones = np.ones(len(a_diag))
    hi = quadratic_form(a_diag, a_off, ones) / quadratic_form(b_diag, b_off, ones)
    while sturm_count(a_diag, a_off, b_diag, b_off, hi) < 1:
        hi = hi + abs(hi) + 1.0
    step = max(abs(hi), 1e-3)
    lo = hi - step
    while sturm_count(a_diag, a_off, b_diag, b_off, lo) >= 1:
        hi = lo
        step *= 2.0
        lo = hi - step
        if step > 1e300:
            raise NumericError("lowest_eigenpair", "pencil appears unbounded below", trace)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sturm_count(a_diag, a_off, b_diag, b_off, mid) >= 1:
            hi = mid
        else:
            lo = mid
        trace.append(("bisect", lo, hi))
        if hi - lo <= 1e-7 * max(abs(hi), 1e-3):
            break
    shift = lo - 1e-9 * max(abs(lo), 1.0)
    m_diag = a_diag - shift * b_diag
    m_off = a_off - shift * b_off
    x = ones / math.sqrt(quadratic_form(b_diag, b_off, ones))
    value = hi
    for it in range(max_iter):
        y = solve_tridiag(m_diag, m_off, apply(b_diag, b_off, x))
        norm = math.sqrt(max(quadratic_form(b_diag, b_off, y), 0.0))
        if not math.isfinite(norm) or norm == 0.0:
            raise NumericError("lowest_eigenpair", "inverse iteration broke down", trace)
        x = y / norm
        new = quadratic_form(a_diag, a_off, x)
        trace.append(("inverse", it, new))
        if it > 0 and abs(new - value) <= rtol * max(abs(new), 1e-12):
            value = new
            break
        value = new
    else:
        raise NumericError("lowest_eigenpair", "inverse iteration did not converge", trace)
    if x[np.argmax(np.abs(x))] < 0.0:
        x = -x
    return value, x, trace
