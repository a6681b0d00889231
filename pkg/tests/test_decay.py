import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singular_nls.decay import (agmon_sweep, agmon_weighted_norm, cutoff, fit_decay, local_bound_diag, rate_profile,
                                smoothstep, smoothstep_derivative)
from singular_nls.errors import DomainError, NumericError
from singular_nls.grid import GridFunction, RadialGrid


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.build(3, per_decade=40, r_max=60.0)


def test_exact_exponential_is_recovered(grid):
    u = GridFunction(grid, 3.0 * np.exp(-0.8 * grid.nodes))
    fit = fit_decay(u)
    assert fit.mu_hat == pytest.approx(0.8, rel=1e-12)
    assert fit.C_mu == pytest.approx(3.0, rel=1e-9)
    assert fit.rms < 1e-12
    assert rate_profile(u, [10.0, 20.0]) == pytest.approx([0.8, 0.8], rel=1e-12)


def test_fit_window_rules(grid):
    u = GridFunction(grid, np.exp(-grid.nodes))
    with pytest.raises(DomainError):
        fit_decay(u, (40.0, 58.0))
    with pytest.raises(NumericError):
        fit_decay(GridFunction(grid, np.sin(grid.nodes)), (10.0, 40.0))


@given(st.floats(-1.0, 2.0))
def test_smoothstep_is_a_monotone_ramp(t):
    v = float(smoothstep(t))
    assert 0.0 <= v <= 1.0
    assert float(smoothstep_derivative(t)) >= 0.0
    assert float(smoothstep(1.0 - t)) == pytest.approx(1.0 - v, abs=1e-14) if 0 <= t <= 1 else True


def test_smoothstep_derivative_matches_differences():
    t = np.linspace(0.01, 0.99, 50)
    h = 1e-6
    assert np.allclose(smoothstep_derivative(t), (smoothstep(t + h) - smoothstep(t - h)) / (2 * h), atol=1e-8)


def test_cutoff_support():
    r = np.array([0.5, 1.0, 3.0, 10.0, 20.0, 25.0])
    chi, _ = cutoff(r, 1.0, 10.0)
    assert chi[0] == 0.0 and chi[1] == 0.0
    assert chi[2] == 1.0 and chi[3] == 1.0
    assert chi[4] == 0.0 and chi[5] == 0.0


def test_weighted_energy_bounds_a_fast_decay(grid):
    u = GridFunction(grid, np.exp(-1.2 * grid.nodes))
    lhs, rhs = agmon_weighted_norm(u, 0.5, 1.0, 20.0)
    assert lhs <= rhs
    assert not agmon_sweep(u, 0.5, 1.0, [5.0, 10.0, 20.0, 28.0])["lhs_growing"]


def test_weighted_energy_flags_a_slow_decay(grid):
    u = GridFunction(grid, np.exp(-0.3 * grid.nodes))
    assert agmon_sweep(u, 0.5, 1.0, [5.0, 10.0, 20.0, 28.0])["lhs_growing"]


def test_weighted_energy_parameter_checks(grid):
    u = GridFunction(grid, np.exp(-grid.nodes))
    with pytest.raises(DomainError):
        agmon_weighted_norm(u, 1.0, 1.0, 5.0)
    with pytest.raises(DomainError):
        agmon_weighted_norm(u, 0.5, 5.0, 5.0)
    with pytest.raises(DomainError):
        agmon_weighted_norm(u, 0.5, 1.0, 40.0)


def test_local_ratio_of_a_constant(grid):
    out = local_bound_diag(GridFunction(grid, np.ones(grid.size)), centers=[5.0, 10.0, 30.0])
    expected = 1.0 / math.sqrt(4.0 / 3.0 * math.pi * 8.0)
    for row in out["rows"]:
        assert row["ratio"] == pytest.approx(expected, rel=1e-3)
    assert out["drift"] == pytest.approx(1.0, rel=2e-3)
