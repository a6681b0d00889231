"""Radial meshes on (0, R_max], grid functions, norms and radial stencils.

A radial function f(|x|) on R^n is integrated as

    int f dx = sigma_{n-1} * sum_i w_i f(r_i) r_i^(n-1) + (piece on (0, r_1])

where ``w`` integrates functions of r on [r_1, R_max] by piecewise quadratic
interpolation.  The piece on (0, r_1] comes from the analytic extension
attached to a ``GridFunction`` (a power law for singular profiles, the first
nodal value otherwise).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate as _sp_integrate

from .errors import DomainError, NumericError
from .specfun import bessel_j, first_zero, sphere_area


def fd_weights(x0, xs, order):
    """Finite-difference weights (Fornberg) for derivatives up to ``order``.

    Returns an array of shape (order + 1, len(xs)); row m holds the weights of
    the m-th derivative at x0.
    """
    xs = np.asarray(xs, float)
    count = len(xs)
    c = np.zeros((order + 1, count))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, count):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _quadratic_interval_weights(x0, x1, x2, a, b):
    """Weights integrating the quadratic through (x0, x1, x2) over [a, b].

    All arguments are arrays of equal length; returns shape (len, 3).
    """
    pts = np.stack([x0, x1, x2], axis=1) - a[:, None]
    length = (b - a)[:, None]
    moments = np.concatenate([length, length**2 / 2.0, length**3 / 3.0], axis=1)
    vander = np.stack([np.ones_like(pts), pts, pts**2], axis=1)
    return np.linalg.solve(vander, moments[..., None])[..., 0]


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Graded radial mesh: geometric on (r_min, 1], uniform on [1, R_max]."""

    n: int
    nodes: np.ndarray
    per_decade: float | None = None
    h_tail: float | None = None
    align: float | None = None
    weights: np.ndarray = field(init=False, repr=False)
    _stencils: tuple = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, float)
        if nodes.ndim != 1 or len(nodes) < 4:
            raise DomainError("a radial grid needs at least four nodes")
        if nodes[0] <= 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise DomainError("grid nodes must be positive and strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        stencils = self._interval_stencils(nodes, nodes[:-1], nodes[1:])
        weights = np.zeros(len(nodes))
        for idx, w in stencils:
            np.add.at(weights, idx, w)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_stencils", stencils)

    @staticmethod
    def _interval_stencils(nodes, lo, hi):
        """Per-interval (indices, weights) pairs averaging two quadratic fits."""
        count = len(nodes)
        i = np.arange(len(lo))
        parts = []
        left_ok = i >= 1
        right_ok = i + 2 <= count - 1
        both = left_ok & right_ok
        for ok, offset in ((left_ok, -1), (right_ok, 0)):
            idx = np.stack([i + offset, i + offset + 1, i + offset + 2], axis=1)
            idx = np.clip(idx, 0, count - 1)
            w = np.zeros((len(i), 3))
            sel = np.nonzero(ok)[0]
            if len(sel):
                w[sel] = _quadratic_interval_weights(
                    nodes[idx[sel, 0]], nodes[idx[sel, 1]], nodes[idx[sel, 2]], lo[sel], hi[sel]
                )
            w *= np.where(both, 0.5, 1.0)[:, None]
            w[~ok] = 0.0
            parts.append((idx, w))
        return tuple(parts)

    @classmethod
    def build(cls, n, r_min=1e-6, per_decade=200, h_tail=None, r_max=40.0, align=None):
        """Default graded grid; ``align`` > 1 is placed exactly on a node.

        The default tail spacing equals the last geometric spacing, so the
        mesh width is continuous at r = 1.
        """
        if r_max < 1.0 or r_min >= 1.0:
            raise DomainError("need r_min < 1 <= r_max")
        decades = math.log10(1.0 / r_min)
        count = max(2, int(round(decades * per_decade)))
        inner = np.logspace(math.log10(r_min), 0.0, count + 1)
        inner[-1] = 1.0
        h = 1.0 - inner[-2] if h_tail is None else float(h_tail)
        h_tail = h
        if align is not None and align > 1.0:
            h = (align - 1.0) / math.ceil((align - 1.0) / h_tail - 1e-9)
        steps = math.ceil((r_max - 1.0) / h - 1e-9)
        tail = 1.0 + h * np.arange(1, steps + 1)
        return cls(n, np.concatenate([inner, tail]), per_decade, h, align)

    @classmethod
    def from_nodes(cls, n, nodes):
        return cls(n, np.asarray(nodes, float))

    def refine(self, factor=2):
        """Nested refinement: ``factor`` times the density in both sections."""
        if self.per_decade is None:
            new = [self.nodes[:1]]
            for k in range(1, factor + 1):
                new.append(self.nodes[:-1] + (self.nodes[1:] - self.nodes[:-1]) * k / factor)
            return RadialGrid(self.n, np.sort(np.concatenate(new)))
        matched = abs(self.h_tail - (1.0 - 10.0 ** (-1.0 / self.per_decade))) <= 1e-12
        return RadialGrid.build(
            self.n,
            r_min=self.r_min,
            per_decade=self.per_decade * factor,
            h_tail=None if matched else self.h_tail / factor,
            r_max=self.r_max,
            align=self.align,
        )

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def sigma(self) -> float:
        return sphere_area(self.n)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h_max(self) -> float:
        return float(self.spacing.max())

    @property
    def measure(self) -> np.ndarray:
        """Node masses: sigma * w_i * r_i^(n-1)."""
        return self.sigma * self.weights * self.nodes ** (self.n - 1)

    @property
    def cell_measure(self) -> np.ndarray:
        """Volumes of the dual cells between neighbouring midpoints (first cell starts at r_1)."""
        r = self.nodes
        mid = np.concatenate([r[:1], 0.5 * (r[1:] + r[:-1]), r[-1:]])
        return self.sigma * (mid[1:] ** self.n - mid[:-1] ** self.n) / self.n

    @property
    def stiffness(self) -> np.ndarray:
        """Interval weights sigma * int r^(n-1) dr / h^2 of the P1 gradient form."""
        lo, hi = self.nodes[:-1], self.nodes[1:]
        return self.sigma * (hi**self.n - lo**self.n) / (self.n * (hi - lo) ** 2)

    @property
    def tag(self) -> str:
        return f"n{self.n}-N{self.size}-rmin{self.r_min:.1e}-rmax{self.r_max:g}"

    def node_index(self, r, tol=1e-12):
        """Index of the node equal to r (within tol), or None."""
        k = int(np.searchsorted(self.nodes, r))
        for j in (k - 1, k):
            if 0 <= j < self.size and abs(self.nodes[j] - r) <= tol * max(1.0, r):
                return j
        return None

    def integrate_radial(self, g):
        """int_{r_1}^{R_max} g(r) dr for nodal samples g."""
        return float(np.dot(self.weights, g))

    def cumulative_radial(self, g):
        """Array of int_{r_1}^{r_k} g dr for every node k."""
        g = np.asarray(g, float)
        per_interval = np.zeros(self.size - 1)
        for idx, w in self._stencils:
            per_interval += np.sum(w * g[idx], axis=1)
        return np.concatenate([[0.0], np.cumsum(per_interval)])

    def integrate_radial_to(self, g, b):
        """int_{r_1}^{b} g dr with b anywhere in [r_1, R_max]."""
        if not self.r_min <= b <= self.r_max:
            raise DomainError(f"upper limit {b} outside grid range")
        g = np.asarray(g, float)
        k = int(np.searchsorted(self.nodes, b, side="right")) - 1
        k = min(k, self.size - 2)
        total = self.cumulative_radial(g)[k]
        if b > self.nodes[k]:
            fits = []
            for start in (k - 1, k):
                if start >= 0 and start + 2 <= self.size - 1:
                    idx = np.arange(start, start + 3)
                    x = self.nodes[idx]
                    w = _quadratic_interval_weights(
                        x[:1], x[1:2], x[2:], np.array([self.nodes[k]]), np.array([b])
                    )[0]
                    fits.append(float(w @ g[idx]))
            total += sum(fits) / len(fits)
        return total


@dataclass(frozen=True)
class PowerLaw:
    """Near-origin model coef * r**power + offset used on (0, r_1]."""

    coef: float
    power: float
    offset: float = 0.0

    def __call__(self, r):
        return self.coef * np.asarray(r, float) ** self.power + self.offset

    @property
    def singular(self) -> bool:
        return self.coef != 0.0 and self.power < 0.0

    def ball_integral(self, n, r1, q=1.0, weight=None):
        """sigma * int_0^{r1} |model|^q * weight(r) r^(n-1) dr (inf if divergent)."""
        if self.singular and self.power * q + n <= 0.0:
            return math.inf
        sigma = sphere_area(n)
        if self.offset == 0.0 and weight is None:
            exponent = self.power * q + n
            return sigma * abs(self.coef) ** q * r1**exponent / exponent

        def integrand(y):
            r = r1 * math.exp(-y)
            val = abs(self.coef * r**self.power + self.offset) ** q * r**n
            return val * (weight(r) if weight is not None else 1.0)

        value, _ = _sp_integrate.quad(integrand, 0.0, 200.0, epsrel=1e-12, epsabs=0.0, limit=200)
        return sigma * value

    def to_dict(self):
        return {"coef": self.coef, "power": self.power, "offset": self.offset}


def origin_moment(model: PowerLaw, n, r1, q):
    """int_0^{r1} |model|^q r^(n-1) dr; singular models by a binomial series in offset/(coef r^power)."""
    c, a, d = model.coef, model.power, model.offset
    if not model.singular:
        return abs(c * r1**a + d) ** q * r1**n / n
    if n + a * q <= 0.0:
        return math.inf
    ratio = d / c
    if abs(ratio) * r1 ** (-a) >= 0.5:
        raise NumericError("origin_moment", "offset not small against the singular term at r_1")
    total, coef = 0.0, 1.0
    for k in range(8):
        e = n + a * q - a * k
        total += coef * ratio**k * r1**e / e
        coef *= (q - k) / (k + 1)
    return abs(c) ** q * total


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on a radial grid with an optional near-origin model."""

    grid: RadialGrid
    values: np.ndarray
    extension: PowerLaw | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise DomainError("values do not match the grid")
        if not np.all(np.isfinite(vals)):
            raise NumericError("GridFunction", "non-finite nodal values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid, func, extension=None):
        return cls(grid, func(grid.nodes), extension)

    @property
    def r(self):
        return self.grid.nodes

    def with_values(self, values, extension="keep"):
        ext = self.extension if extension == "keep" else extension
        return GridFunction(self.grid, values, ext)

    def extension_mismatch(self) -> float:
        if self.extension is None:
            return 0.0
        return abs(self.values[0] - float(self.extension(self.grid.r_min)))

    def origin_model(self) -> PowerLaw:
        if self.extension is not None:
            return self.extension
        return PowerLaw(0.0, 0.0, float(self.values[0]))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            ext = _sum_extensions(self.extension, other.extension, self.values[0], other.values[0])
            return GridFunction(self.grid, self.values + other.values, ext)
        return GridFunction(self.grid, self.values + other, None)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar):
        ext = None
        if self.extension is not None:
            e = self.extension
            ext = PowerLaw(scalar * e.coef, e.power, scalar * e.offset)
        return GridFunction(self.grid, scalar * self.values, ext)

    __rmul__ = __mul__


def _sum_extensions(a, b, va, vb):
    if a is None and b is None:
        return None
    if a is None:
        return PowerLaw(b.coef, b.power, b.offset + va)
    if b is None:
        return PowerLaw(a.coef, a.power, a.offset + vb)
    if a.power == b.power:
        return PowerLaw(a.coef + b.coef, a.power, a.offset + b.offset)
    # Different powers: keep the more singular term, fold the other into the offset.
    dominant, other = (a, b) if a.power < b.power else (b, a)
    return PowerLaw(dominant.coef, dominant.power, dominant.offset + other.offset)


def _as_nodal(grid, V):
    if callable(V):
        return sample_potential(grid, V)
    return np.asarray(V, float) * np.ones(grid.size)


def sample_potential(grid: RadialGrid, V) -> np.ndarray:
    """Nodal values of V for the lumped mass.

    A dual cell cut by a jump of V gets the volume-weighted mean of the two
    one-sided values; plain sampling there costs a full order of accuracy.
    """
    vals = np.asarray(V(grid.nodes), float) * np.ones(grid.size)
    points = V.breakpoints() if hasattr(V, "breakpoints") else []
    r = grid.nodes
    n = grid.n
    edges = np.concatenate([r[:1], 0.5 * (r[1:] + r[:-1]), r[-1:]])
    for b in points:
        if not r[0] < b < r[-1]:
            continue
        i = min(int(np.searchsorted(edges, b, side="right")) - 1, grid.size - 1)
        eps = 1e-12 * max(b, 1.0)
        left, right = (float(np.asarray(V(np.array([x])), float).ravel()[0]) for x in (b - eps, b + eps))
        w_left, w_right = b**n - edges[i] ** n, edges[i + 1] ** n - b**n
        vals[i] = (w_left * left + w_right * right) / (w_left + w_right)
    return vals


def integrate(u: GridFunction, q=1.0, weight: Callable | None = None):
    """int |u|^q weight dx over R^n (using the near-origin model below r_1)."""
    grid = u.grid
    vals = np.abs(u.values) ** q
    w = weight(grid.nodes) if weight is not None else 1.0
    bulk = grid.sigma * grid.integrate_radial(vals * w * grid.nodes ** (grid.n - 1))
    return bulk + u.origin_model().ball_integral(grid.n, grid.r_min, q, weight)


def signed_integral(grid: RadialGrid, values, extension_integral=0.0):
    """int f dx for nodal samples f plus a supplied near-origin contribution."""
    return grid.sigma * grid.integrate_radial(np.asarray(values) * grid.nodes ** (grid.n - 1)) + extension_integral


def ball_integral(u: GridFunction, delta: float, q=1.0):
    """int_{B_delta} |u|^q dx."""
    grid = u.grid
    g = np.abs(u.values) ** q * grid.nodes ** (grid.n - 1)
    bulk = grid.sigma * grid.integrate_radial_to(g, delta)
    return bulk + u.origin_model().ball_integral(grid.n, grid.r_min, q)


def norm_lq(u: GridFunction, q: float) -> float:
    """L^q(R^n) norm; ``math.inf`` signals divergence (singular model)."""
    if q < 1.0:
        raise DomainError("q must be >= 1")
    if math.isinf(q):
        if u.extension is not None and u.extension.singular:
            return math.inf
        return float(np.max(np.abs(u.values)))
    total = integrate(u, q)
    return math.inf if math.isinf(total) else total ** (1.0 / q)


def weighted_norm(u: GridFunction, q: float, omega: float) -> float:
    """Norm of L^q(R^n; omega): weight exp(-sqrt(omega) |x|)."""
    if q < 1.0 or omega <= 0.0:
        raise DomainError("need q >= 1 and omega > 0")
    root = math.sqrt(omega)
    total = integrate(u, q, weight=lambda r: np.exp(-root * np.asarray(r)))
    return math.inf if math.isinf(total) else total ** (1.0 / q)


def gradient_form(grid: RadialGrid, u, v):
    """int u' v' dx with piecewise linear interpolants."""
    return float(np.dot(grid.stiffness, np.diff(u) * np.diff(v)))


def inner_v(u: GridFunction, v: GridFunction, V) -> float:
    """<u, v>_V = int grad u . grad v + V u v dx on the discrete space."""
    grid = u.grid
    pot = _as_nodal(grid, V)
    return gradient_form(grid, u.values, v.values) + float(np.dot(grid.measure * pot, u.values * v.values))


def norm_v(u: GridFunction, V) -> float:
    val = inner_v(u, u, V)
    return math.sqrt(max(val, 0.0))


def norm_h1(u: GridFunction) -> float:
    return norm_v(u, 1.0)


def radial_stencil(nodes):
    """Three-point weights for u' and u'' at interior nodes.

    Returns (first, second), each an array (N, 3) of weights on
    (u_{i-1}, u_i, u_{i+1}); rows 0 and N-1 are left as zeros.
    """
    nodes = np.asarray(nodes, float)
    hm = nodes[1:-1] - nodes[:-2]
    hp = nodes[2:] - nodes[1:-1]
    first = np.zeros((len(nodes), 3))
    second = np.zeros((len(nodes), 3))
    first[1:-1, 0] = -hp / (hm * (hm + hp))
    first[1:-1, 1] = (hp - hm) / (hm * hp)
    first[1:-1, 2] = hm / (hp * (hm + hp))
    second[1:-1, 0] = 2.0 / (hm * (hm + hp))
    second[1:-1, 1] = -2.0 / (hm * hp)
    second[1:-1, 2] = 2.0 / (hp * (hm + hp))
    return first, second


def laplacian_radial(u: GridFunction) -> GridFunction:
    """-(u'' + (n-1)/r u') by three-point stencils, four-point one-sided ends."""
    grid = u.grid
    r = grid.nodes
    v = u.values
    first, second = radial_stencil(r)
    out = np.empty_like(v)
    d1 = first[1:-1, 0] * v[:-2] + first[1:-1, 1] * v[1:-1] + first[1:-1, 2] * v[2:]
    d2 = second[1:-1, 0] * v[:-2] + second[1:-1, 1] * v[1:-1] + second[1:-1, 2] * v[2:]
    out[1:-1] = -(d2 + (grid.n - 1) / r[1:-1] * d1)
    for i, sl in ((0, slice(0, 4)), (len(r) - 1, slice(len(r) - 4, len(r)))):
        c = fd_weights(r[i], r[sl], 2)
        out[i] = -(c[2] @ v[sl] + (grid.n - 1) / r[i] * (c[1] @ v[sl]))
    return GridFunction(grid, out)


def _lagrange_value(xs, ys, x):
    c = fd_weights(x, xs, 0)
    return float(c[0] @ ys)


def trace_at(u: GridFunction, rho: float) -> float:
    """Value at radius rho by four-point (cubic) interpolation."""
    grid = u.grid
    if not grid.r_min <= rho <= grid.r_max:
        raise DomainError(f"rho={rho} outside grid range")
    j = grid.node_index(rho)
    if j is not None:
        return float(u.values[j])
    k = int(np.searchsorted(grid.nodes, rho)) - 1
    lo = min(max(k - 1, 0), grid.size - 4)
    sl = slice(lo, lo + 4)
    return _lagrange_value(grid.nodes[sl], u.values[sl], rho)


def one_sided_derivatives(u: GridFunction, rho: float, points=3):
    """(inner, outer) radial derivatives at rho from stencils on each side."""
    grid = u.grid
    if not grid.r_min < rho < grid.r_max:
        raise DomainError(f"rho={rho} outside grid interior")
    j = grid.node_index(rho)
    if j is not None:
        inner_idx = np.arange(j - points + 1, j + 1)
        outer_idx = np.arange(j, j + points)
    else:
        k = int(np.searchsorted(grid.nodes, rho))
        inner_idx = np.arange(k - points, k)
        outer_idx = np.arange(k, k + points)
    if inner_idx[0] < 0 or outer_idx[-1] >= grid.size:
        raise DomainError("not enough nodes on one side of rho")
    din = fd_weights(rho, grid.nodes[inner_idx], 1)[1] @ u.values[inner_idx]
    dout = fd_weights(rho, grid.nodes[outer_idx], 1)[1] @ u.values[outer_idx]
    return float(din), float(dout)


def derivative_jump(u: GridFunction, rho: float) -> float:
    """Inner minus outer one-sided radial derivative at rho."""
    din, dout = one_sided_derivatives(u, rho)
    return din - dout


# --- test functions ---------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Radial test function with analytic first and second derivatives."""

    __test__ = False  # not a pytest class

    n: int
    support: float
    value: Callable
    d1: Callable
    d2: Callable
    name: str = "test-function"
    inner_radius: float = 0.0

    def laplacian(self, r):
        """-(phi'' + (n-1)/r phi') evaluated analytically."""
        r = np.asarray(r, float)
        return -(self.d2(r) + (self.n - 1) / r * self.d1(r))

    def sample(self, grid: RadialGrid) -> GridFunction:
        return GridFunction(grid, self.value(grid.nodes))

    def covers_origin(self) -> bool:
        return self.inner_radius == 0.0

    def c2_norm(self, samples=4001) -> float:
        r = np.linspace(max(self.inner_radius, 1e-9), self.support, samples)
        return float(np.max(np.abs(self.value(r))) + np.max(np.abs(self.d1(r))) + np.max(np.abs(self.d2(r))))


def smooth_bump(n, radius, power=4) -> TestFunction:
    """(1 - r^2/R^2)^power on B_R; smooth across the origin."""
    R2 = radius * radius

    def t(r):
        return np.clip(1.0 - np.asarray(r, float) ** 2 / R2, 0.0, None)

    def value(r):
        return t(r) ** power

    def d1(r):
        r = np.asarray(r, float)
        return -2.0 * power * r / R2 * t(r) ** (power - 1)

    def d2(r):
        r = np.asarray(r, float)
        return -2.0 * power / R2 * t(r) ** (power - 1) + 4.0 * power * (power - 1) * r**2 / R2**2 * t(r) ** (power - 2)

    return TestFunction(n, radius, value, d1, d2, f"bump(R={radius:g})")


def annulus_bump(n, inner, outer, power=4) -> TestFunction:
    """Polynomial bump supported in the annulus inner <= r <= outer."""
    half = 0.5 * (outer - inner)
    scale = 1.0 / (half * half)

    def s(r):
        r = np.asarray(r, float)
        return np.clip((r - inner) * (outer - r) * scale, 0.0, None)

    def ds(r):
        r = np.asarray(r, float)
        inside = (r > inner) & (r < outer)
        return np.where(inside, (inner + outer - 2.0 * r) * scale, 0.0)

    def d2s(r):
        r = np.asarray(r, float)
        inside = (r > inner) & (r < outer)
        return np.where(inside, -2.0 * scale, 0.0)

    def value(r):
        return s(r) ** power

    def d1(r):
        return power * s(r) ** (power - 1) * ds(r)

    def d2(r):
        return power * (power - 1) * s(r) ** (power - 2) * ds(r) ** 2 + power * s(r) ** (power - 1) * d2s(r)

    return TestFunction(n, outer, value, d1, d2, f"annulus({inner:g},{outer:g})", inner_radius=inner)


@dataclass(frozen=True)
class BesselBump(TestFunction):
    """phi_R(x) = (v(|x|/R) - kappa) on |x| <= R r0 with v = J_nu(r) r^-nu."""

    __test__ = False

    scale: float = 1.0
    r0: float = 0.0
    kappa: float = 0.0

    def identity_rhs(self, r, V=0.0):
        """((V + 1/R^2) phi_R - |kappa|/R^2) inside the support, 0 outside."""
        r = np.asarray(r, float)
        inside = r <= self.scale * self.r0
        R2 = self.scale**2
        return np.where(inside, (V + 1.0 / R2) * self.value(r) - abs(self.kappa) / R2, 0.0)


def _helmholtz_profile(n):
    """v(r) = J_nu(r) r^-nu and v'(r) for nu = (n-2)/2, including n = 1."""
    nu = (n - 2) / 2.0
    if n == 1:
        c = math.sqrt(2.0 / math.pi)
        return (lambda r: c * np.cos(r)), (lambda r: -c * np.sin(r)), math.pi
    v0 = 1.0 / (2.0**nu * math.gamma(nu + 1.0))

    def v(r):
        r = np.asarray(r, float)
        safe = np.where(r > 0.0, r, 1.0)
        return np.where(r > 0.0, bessel_j(nu, safe) * safe ** (-nu), v0)

    def dv(r):
        r = np.asarray(r, float)
        safe = np.where(r > 0.0, r, 1.0)
        return np.where(r > 0.0, -bessel_j(nu + 1.0, safe) * safe ** (-nu), 0.0)

    r0 = first_zero(lambda x: bessel_j(nu + 1.0, x), step=0.05, start=0.5)
    return v, dv, r0


def bessel_bump(n: int, R: float) -> BesselBump:
    """The C^{1,1} test function built from the first critical radius of v."""
    if R <= 0.0:
        raise DomainError("R must be positive")
    v, dv, r0 = _helmholtz_profile(n)
    kappa = float(v(r0))
    if not kappa < 0.0:
        raise NumericError("bessel_bump", f"expected a negative critical value, got {kappa}")

    def value(r):
        s = np.asarray(r, float) / R
        return np.where(s <= r0, v(np.minimum(s, r0)) - kappa, 0.0)

    def d1(r):
        s = np.asarray(r, float) / R
        return np.where(s <= r0, dv(np.minimum(s, r0)) / R, 0.0)

    def d2(r):
        s = np.asarray(r, float) / R
        sc = np.minimum(np.maximum(s, 1e-300), r0)
        second = -v(sc) - (n - 1) / sc * dv(sc) if n > 1 else -v(sc)
        return np.where(s <= r0, second / R**2, 0.0)

    return BesselBump(n, R * r0, value, d1, d2, f"bessel_bump(R={R:g})", 0.0, R, r0, kappa)


def hardy_quotient(u: TestFunction, grid: RadialGrid) -> float:
    """(int u^2/|x|^2) / (int |grad u|^2); NaN when the gradient vanishes."""
    if grid.n < 3:
        raise DomainError("the Hardy quotient needs n >= 3")
    r = grid.nodes
    num = grid.integrate_radial(u.value(r) ** 2 * r ** (grid.n - 3))
    den = grid.integrate_radial(u.d1(r) ** 2 * r ** (grid.n - 1))
    if den <= 0.0:
        return math.nan
    return num / den


def hardy_constant(n: int) -> float:
    return (2.0 / (n - 2)) ** 2


# --- serialization ------------------------------------------------------------


def write_csv(u: GridFunction, path) -> Path:
    """Write r,value rows plus a JSON sidecar describing the extension."""
    path = Path(path)
    lines = ["r,value"] + [f"{r:.17g},{v:.17g}" for r, v in zip(u.grid.nodes, u.values)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    sidecar = {
        "n": u.grid.n,
        "nodes": u.grid.size,
        "extension": u.extension.to_dict() if u.extension is not None else None,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )
    return path


def read_csv(path) -> GridFunction:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text(encoding="utf-8"))
    ext = meta.get("extension")
    grid = RadialGrid.from_nodes(meta["n"], data[:, 0])
    return GridFunction(grid, data[:, 1], PowerLaw(**ext) if ext else None)
