import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singular_nls.errors import DomainError
from singular_nls.grid import GridFunction, RadialGrid
from singular_nls.greens import (INADMISSIBLE_ROWS, OmegaShift, admissibility, inverse_identity_error,
                                 laplacian_fourth_order, mapping_property_check, random_compact, t_omega,
                                 t_omega_quadrature, young_exponent)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.build(3, per_decade=80)


def test_shift_validation():
    with pytest.raises(DomainError):
        OmegaShift(0.0)
    with pytest.raises(DomainError):
        OmegaShift(1.0, 2.0)
    s = OmegaShift.default(1.0)
    assert (s.omega, s.omega0) == (2.0, 0.5)


def test_resolvent_of_a_constant(grid):
    shift = OmegaShift(2.0)
    w = t_omega(GridFunction(grid, np.ones(grid.size)), shift)
    # far from the artificial end the decaying solution of (-Lap + 2) w = 1 is 1/2
    sel = grid.nodes <= grid.r_max - 15.0
    assert np.max(np.abs(w.values[sel] - 0.5)) < 1e-6


def test_resolvent_against_the_kernel_integral():
    # the finite-volume solve and the direct convolution differ at O(h^2)
    shift = OmegaShift(1.5)
    radii = np.array([0.1, 0.5, 1.0, 2.0, 4.0])
    gaps = []
    for P in (40, 80, 160):
        g = RadialGrid.build(3, per_decade=P, r_max=30.0, align=None)
        f = GridFunction(g, np.exp(-g.nodes**2) * (1 + g.nodes))
        idx = [int(np.argmin(abs(g.nodes - x))) for x in radii]
        ours = t_omega(f, shift).values[idx]
        ref = t_omega_quadrature(f, shift, g.nodes[idx])
        gaps.append(np.max(np.abs(ours - ref) / ref))
    assert gaps[-1] < 1e-4
    assert gaps[0] / gaps[1] > 3.0 and gaps[1] / gaps[2] > 3.0, gaps


def test_kernel_quadrature_is_limited_to_odd_low_dimensions():
    g = RadialGrid.build(4, per_decade=20)
    with pytest.raises(DomainError):
        t_omega_quadrature(GridFunction(g, np.exp(-g.nodes)), OmegaShift(1.0), [1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_resolvent_preserves_positivity(seed):
    g = RadialGrid.build(3, per_decade=40)
    f = random_compact(g, np.random.default_rng(seed))
    f = GridFunction(g, np.abs(f.values))
    assert np.all(t_omega(f, OmegaShift(1.3)).values >= 0.0)


def test_inverse_identity_error_is_second_order():
    # finite-volume solve against the three-point Laplacian: they agree to O(h^2)
    errs = []
    for P in (40, 80, 160):
        g = RadialGrid.build(3, per_decade=P, r_max=30.0)
        errs.append(inverse_identity_error(GridFunction(g, np.exp(-((g.nodes - 2.0) ** 2))), OmegaShift(2.0)))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0, errs


@given(st.floats(1.0, 50.0), st.floats(1.0, 50.0))
def test_young_exponent_balances(q, r):
    s = young_exponent(q, r)
    if s is None:
        assert r < q * (1 - 1e-12) or 1 + 1 / r - 1 / q > 1
    else:
        lhs = 1 + 1 / r
        rhs = (0 if math.isinf(s) else 1 / s) + 1 / q
        assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("row", INADMISSIBLE_ROWS)
def test_inadmissible_rows_are_rejected(row):
    k, q, r = row
    ok, reason = admissibility(3, k, q, r)
    assert not ok and reason
    out = mapping_property_check(OmegaShift(2.0), q, r, k, trials=2)
    assert out["rejected"] and out["ratio"] is None


def test_admissible_row_obeys_the_young_bound():
    row = mapping_property_check(OmegaShift(2.0), 2.0, 2.0, 0, trials=4)
    assert row["admissible"] and row["passed"]
    # for q = r = 2 the bound is ||G||_1 = 1/omega
    assert row["bound"] == pytest.approx(0.5, rel=1e-6)


def test_fourth_order_laplacian_converges_at_fourth_order():
    errs = []
    for P in (40, 80, 160):
        g = RadialGrid.build(3, per_decade=P, r_max=10.0)
        r = g.nodes
        exact = -(4 * r * r - 6) * np.exp(-r * r)
        sel = (r > 0.05) & (r < 8.0)
        errs.append(np.max(np.abs(laplacian_fourth_order(GridFunction(g, np.exp(-r * r))) - exact)[sel]))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.5), orders
