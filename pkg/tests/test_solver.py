import math

import numpy as np
import pytest

from singular_nls.errors import DomainError
from singular_nls.functional import eval_J
from singular_nls.grid import GridFunction, annulus_bump
from singular_nls.solver import (NOISE_FACTOR, correction_bounds, default_tests, distributional_residual, local_l1,
                                 minimize, positivity_check, residual_report, singularity_fit)


def test_descent_never_increases_j(bundle3):
    values = [row[1] for row in bundle3.trace]
    noise = NOISE_FACTOR * max(1.0, max(abs(v) for v in values))
    assert all(b <= a + noise for a, b in zip(values, values[1:]))
    assert bundle3.converged and bundle3.interior and not bundle3.stuck_on_sphere


def test_infinite_tolerance_returns_the_start(ctx3, landscape3):
    start = 0.05 * np.exp(-ctx3.grid.nodes)
    b = minimize(ctx3, landscape3, math.inf, start=start)
    assert b.iterations == 0
    assert np.array_equal(b.u_tilde.values, start)


def test_nonpositive_tolerance_is_rejected(ctx3, landscape3):
    with pytest.raises(DomainError):
        minimize(ctx3, landscape3, 0.0)


def test_restarts_are_seeded(ctx3, landscape3):
    a = minimize(ctx3, landscape3, 1e-6, restarts=2, seed=4)
    b = minimize(ctx3, landscape3, 1e-6, restarts=2, seed=4)
    assert a.summary() == b.summary()
    assert len(a.restarts) == 2


def test_iterates_stay_in_the_ball(ctx3, landscape3, bundle3):
    assert all(row[3] <= landscape3.r0 * (1 + 1e-12) for row in bundle3.trace)


def test_minimizer_is_a_lower_point_than_the_start(ctx3, bundle3):
    assert bundle3.J < eval_J(np.zeros(ctx3.grid.size), ctx3)


def test_correction_reduces_the_distributional_residual(ctx3, approx3, bundle3):
    # u0 alone carries the defect; adding the correction must shrink every residual
    u0 = approx3.u0
    for phi in default_tests(3, approx3.rho):
        before = abs(distributional_residual(u0, phi, ctx3))
        after = abs(distributional_residual(bundle3.U, phi, ctx3))
        assert after < before, phi.name


def test_annulus_residual_splits_into_its_parts(ctx3, bundle3):
    phi = annulus_bump(3, 1.5, 5.0)
    parts = distributional_residual(bundle3.U, phi, ctx3, parts=True)
    assert parts["value"] == pytest.approx(parts["linear"] - parts["nonlinear"], rel=1e-14)
    assert local_l1(bundle3.U, phi) > 0


def test_residual_report_rows(ctx3, approx3, bundle3):
    rep = residual_report(bundle3.U, default_tests(3, approx3.rho), ctx3)
    assert rep["passed"]
    assert sum(r["covers_origin"] for r in rep["rows"]) >= 3


def test_test_function_support_is_checked(ctx3, bundle3):
    with pytest.raises(DomainError):
        distributional_residual(bundle3.U, annulus_bump(3, 10.0, 80.0), ctx3)


def test_singularity_fit_on_an_exact_power(grid3):
    u = GridFunction(grid3, 0.2 * grid3.nodes ** -0.9)
    fit = singularity_fit(u)
    assert fit["slope"] == pytest.approx(-0.9, abs=1e-12)
    assert fit["amplitude"] == pytest.approx(0.2, rel=1e-10)


def test_positivity_is_only_for_the_positive_variant(ctx3, bundle3):
    with pytest.raises(DomainError):
        positivity_check(bundle3, ctx3)


def test_correction_is_small_and_mildly_singular(bundle3):
    out = correction_bounds(bundle3)
    assert math.isfinite(out["lq_norm"])
    # weaker than the singular power of u0
    assert -0.2 < out["origin_log_slope"] < 0.0
