"""The glued approximate solution: singular power inside B_rho, decaying tail outside.

Inside the ball of radius ``rho`` the profile is the exact singular solution
u1 = c r^(-2/(p-1)) of -Lap u = u^p.  Outside it is the decreasing solution
of -w'' - (n-1)/r w' + w = w^p with w(rho) = c0 = u1(rho), obtained by
monotone iteration between the subsolution kappa r^(1-n/2) K_{n/2-1}(r) and
the constant supersolution c0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize_scalar

from .errors import CertificationFailure, DomainError, NumericError
from .grid import (
    GridFunction,
    PowerLaw,
    RadialGrid,
    ball_integral,
    fd_weights,
    laplacian_radial,
    radial_stencil,
)
from .specfun import bessel_k, sphere_area


def singular_exponent(p: float) -> float:
    """t = 2/(p-1), so that u1 = c r^-t."""
    return 2.0 / (p - 1.0)


def c_np(n: int, p: float) -> float:
    """Amplitude of the exact singular solution c r^(-2/(p-1)) of -Lap u = u^p."""
    if n < 3:
        raise DomainError("the singular profile needs n >= 3")
    if not p > n / (n - 2.0):
        raise DomainError(f"need p > n/(n-2) = {n / (n - 2.0):g}, got p={p}")
    t = singular_exponent(p)
    return (t * (n - 2.0 - t)) ** (1.0 / (p - 1.0))


def rho_bound_closed_form(n: int) -> float:
    # with t = 2/(q-1), c_{n,q}^{(q-1)/2} = sqrt(t (n-2-t)), largest at t = (n-2)/2
    return (n - 2.0) / 2.0


def choose_rho(n: int) -> float:
    """Smallest admissible gluing radius valid for the whole exponent window."""
    if n < 3:
        raise DomainError("choose_rho needs n >= 3")
    lo, hi = n / (n - 2.0), (n + 2.0) / (n - 2.0)

    def neg(q):
        if q <= lo:
            return 0.0
        return -(c_np(n, q) ** ((q - 1.0) / 2.0))

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    inner = max(-res.fun, -neg(hi))
    return max(1.0, math.sqrt(4.0 / 3.0) * inner)


def u1_profile(n: int, p: float, grid: RadialGrid) -> GridFunction:
    c = c_np(n, p)
    t = singular_exponent(p)
    return GridFunction(grid, c * grid.nodes ** (-t), PowerLaw(c, -t))


def subsolution(n: int, rho: float, c0: float):
    """v(r) = kappa r^((2-n)/2) K_{(n-2)/2}(r) normalized by v(rho) = c0; returns (v, kappa)."""
    nu = (n - 2) / 2.0
    kappa = c0 / (rho ** (-nu) * float(bessel_k(nu, rho)))

    def v(r):
        r = np.asarray(r, float)
        return kappa * r ** (-nu) * bessel_k(nu, r)

    return v, kappa


def exponential_majorant(p: float, rho: float, c0: float):
    rate = math.sqrt(1.0 - c0 ** (p - 1.0))
    return (lambda r: c0 * np.exp(-rate * (np.asarray(r, float) - rho))), rate


@dataclass
class TailSolution:
    """Exterior profile on the mesh rho = s_0 < ... < s_M = R."""

    mesh: np.ndarray
    w: np.ndarray
    v: np.ndarray
    majorant: np.ndarray
    kappa: float
    rate: float
    sweeps: int
    record: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(c["passed"]) for c in self.record["checks"].values())

    def derivative_at_rho(self, points=5) -> float:
        idx = np.arange(points)
        return float(fd_weights(self.mesh[0], self.mesh[idx], 1)[1] @ self.w[idx])

    def sample(self, r):
        """Values at radii that are mesh nodes (other radii are interpolated linearly)."""
        return np.interp(r, self.mesh, self.w)


def tail_mesh(rho, R, grid: RadialGrid | None = None, h=0.01):
    """Grid nodes in [rho, R_max], continued with the last spacing up to R."""
    if grid is not None:
        j = grid.node_index(rho)
        if j is None:
            raise DomainError(f"rho={rho} is not a grid node; build the grid with align=rho")
        nodes = np.array(grid.nodes[j:])
        h = float(nodes[-1] - nodes[-2])
    else:
        nodes = np.array([rho])
    if nodes[-1] < R - 1e-12:
        extra = math.ceil((R - nodes[-1]) / h - 1e-9)
        nodes = np.concatenate([nodes, nodes[-1] + h * np.arange(1, extra + 1)])
    return nodes


def _tail_operator(n, mesh, shift):
    """Banded matrix of -w'' - (n-1)/r w' + shift*w on the interior nodes.

    Returns (ab, left, right): the banded interior matrix and the couplings
    of the first and last interior rows to the Dirichlet end values.
    """
    first, second = radial_stencil(mesh)
    coef = -(second + (n - 1) / mesh[:, None] * first)[1:-1]
    coef[:, 1] += shift
    m = len(coef)
    ab = np.zeros((3, m))
    ab[1] = coef[:, 1]
    ab[0, 1:] = coef[:-1, 2]
    ab[2, :-1] = coef[1:, 0]
    return ab, float(coef[0, 0]), float(coef[-1, 2])


def solve_u2(n, p, rho, c0, R=None, grid: RadialGrid | None = None, h=0.01, tol=1e-12, max_sweeps=20000,
             enclosure_tol=1e-10, strict=True) -> TailSolution:
    """Monotone iteration for the exterior profile with w(rho) = c0, w(R) = v(R).

    Each sweep solves -w'' - (n-1)/r w' + (1 + lam) w = w_k^p + lam w_k with
    lam = p c0^(p-1).  The record certifies v <= w <= c0 exp(-sqrt(1-c0^(p-1))(r-rho)),
    monotone decrease, convexity and the discrete residual.
    """
    if not 0.0 < c0 < 1.0:
        raise DomainError(f"need 0 < c0 < 1, got {c0}")
    R = rho + 40.0 if R is None else float(R)
    if not R > rho + 20.0:
        raise DomainError("truncation radius must exceed rho + 20")
    mesh = tail_mesh(rho, R, grid, h)
    v_fun, kappa = subsolution(n, rho, c0)
    z_fun, rate = exponential_majorant(p, rho, c0)
    v = v_fun(mesh)
    z = z_fun(mesh)
    lam = p * c0 ** (p - 1.0)
    ab, left, right = _tail_operator(n, mesh, 1.0 + lam)
    slack = 1e-15 * c0

    w = np.full(len(mesh), c0)
    w[-1] = v[-1]
    monotone_iterates = True
    bounded_below = True
    for sweep in range(1, max_sweeps + 1):
        rhs = (w**p + lam * w)[1:-1]
        rhs[0] -= left * c0
        rhs[-1] -= right * v[-1]
        new = w.copy()
        new[1:-1] = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(new)):
            raise NumericError("solve_u2", f"non-finite iterate at sweep {sweep}")
        if np.any(new > w * (1 + 1e-13) + slack):
            monotone_iterates = False
        if np.any(new < v * (1 - enclosure_tol) - slack):
            bounded_below = False
        change = float(np.max(np.abs(new - w) / np.maximum(new, 1e-300)))
        w = new
        if change <= tol:
            break
    else:
        raise NumericError("solve_u2", f"no convergence in {max_sweeps} sweeps (last change {change:.3e})")

    residual = _ode_residual(n, p, mesh, w)
    dw = np.diff(w)
    second = np.diff(w, 2)
    checks = {
        "lower_enclosure": _check(float(np.min(w - v * (1 - enclosure_tol) + slack)), ">=", 0.0),
        "upper_enclosure": _check(float(np.min(z * (1 + enclosure_tol) - w + slack)), ">=", 0.0),
        "boundary_value": _check(abs(w[0] - c0), "<=", 0.0),
        "monotone_decrease": _check(float(np.max(dw)), "<=", slack),
        "convexity": _check(float(np.min(np.where(w[1:-1] < 1.0, second, 0.0))), ">=", -1e-8),
        "ode_residual": _check(residual, "<=", 1e-8),
        "iterates_nonincreasing": _check(float(monotone_iterates), "==", 1.0),
        "iterates_above_subsolution": _check(float(bounded_below), "==", 1.0),
    }
    record = {
        "rho": rho,
        "R": float(mesh[-1]),
        "c0": c0,
        "kappa": kappa,
        "lambda": lam,
        "majorant_rate": rate,
        "sweeps": sweep,
        "nodes": len(mesh),
        "checks": checks,
    }
    out = TailSolution(mesh, w, v, z, kappa, rate, sweep, record)
    if strict and not out.passed:
        bad = [k for k, c in checks.items() if not c["passed"]]
        raise CertificationFailure(f"exterior profile failed: {', '.join(bad)}", record)
    return out


def _check(value, op, bound):
    ok = {"<=": value <= bound, ">=": value >= bound, ">": value > bound, "==": value == bound}[op]
    return {"value": value, "op": op, "bound": bound, "passed": bool(ok)}


def _ode_residual(n, p, mesh, w):
    """sup over interior nodes of |-Lap_h w + w - w^p| using the grid stencil."""
    g = RadialGrid(n, mesh)
    lap = laplacian_radial(GridFunction(g, w)).values
    res = lap + w - w**p
    return float(np.max(np.abs(res[1:-1])))


def truncation_agreement(n, p, rho, c0, R=None, grid=None, h=0.01, span=20.0):
    """max |w_R - w_2R| on [rho, rho + span]."""
    R = rho + 40.0 if R is None else R
    a = solve_u2(n, p, rho, c0, R, grid, h)
    b = solve_u2(n, p, rho, c0, 2.0 * R, grid, h)
    k = int(np.searchsorted(a.mesh, rho + span + 1e-9))
    return float(np.max(np.abs(a.w[:k] - b.w[:k])))


@dataclass
class ApproximateSolution:
    n: int
    p: float
    u0: GridFunction
    c_np: float
    rho: float
    c0: float
    kappa: float
    jump: float
    rho_index: int
    tail: TailSolution
    certification: dict = field(default_factory=dict)

    @property
    def grid(self) -> RadialGrid:
        return self.u0.grid

    @property
    def exponent(self) -> float:
        return singular_exponent(self.p)

    @property
    def inner_derivative(self) -> float:
        return -self.exponent * self.c_np * self.rho ** (-self.exponent - 1.0)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.certification["checks"].values())

    def envelope(self, r):
        """c r^-t on (0, rho], c e^{-(r - rho)/2} beyond."""
        r = np.asarray(r, float)
        t = self.exponent
        return np.where(r <= self.rho, self.c_np * r ** (-t), self.c_np * np.exp(-(r - self.rho) / 2.0))

    def summary(self):
        return {
            "n": self.n,
            "p": self.p,
            "c_np": self.c_np,
            "rho": self.rho,
            "c0": self.c0,
            "kappa": self.kappa,
            "jump": self.jump,
            "tail": {k: v for k, v in self.tail.record.items() if k != "checks"},
            "tail_checks": self.tail.record["checks"],
            "checks": self.certification["checks"],
        }


def default_grid(n, rho=None, **kwargs) -> RadialGrid:
    rho = choose_rho(n) if rho is None else rho
    return RadialGrid.build(n, align=rho if rho > 1.0 else None, **kwargs)


def assemble_u0(n, p, grid: RadialGrid | None = None, R=None, strict=True) -> ApproximateSolution:
    """Glue u1 on (0, rho] and the exterior profile on [rho, R_max]."""
    c = c_np(n, p)
    rho = choose_rho(n)
    grid = default_grid(n, rho) if grid is None else grid
    if grid.n != n:
        raise DomainError("grid dimension does not match n")
    j = grid.node_index(rho)
    if j is None:
        raise DomainError(f"rho={rho} must be a grid node")
    t = singular_exponent(p)
    c0 = c * rho ** (-t)
    tail = solve_u2(n, p, rho, c0, R, grid, strict=strict)
    r = grid.nodes
    values = np.empty(grid.size)
    values[: j + 1] = c * r[: j + 1] ** (-t)
    count = grid.size - j
    values[j:] = tail.w[:count]
    u0 = GridFunction(grid, values, PowerLaw(c, -t))
    inner = -t * c * rho ** (-t - 1.0)
    jump = inner - tail.derivative_at_rho()

    env = np.where(r <= rho, c * r ** (-t), c * np.exp(-(r - rho) / 2.0))
    checks = {
        "positive": _check(float(np.min(values)), ">", 0.0),
        "continuity": _check(abs(c * rho ** (-t) - tail.w[0]), "<=", 1e-8),
        "c0_window": _check(c0 ** (p - 1.0), "<=", 0.75),
        "c0_below_c": _check(c0 - c, "<=", 0.0),
        "envelope": _check(float(np.max(values - env * (1 + 1e-10))), "<=", 0.0),
        "exterior_profile": {"value": float(tail.passed), "op": "==", "bound": 1.0, "passed": tail.passed},
    }
    cert = {"checks": checks}
    out = ApproximateSolution(n, p, u0, c, rho, c0, tail.kappa, jump, j, tail, cert)
    if strict and not out.passed:
        bad = [k for k, v in checks.items() if not v["passed"]]
        raise CertificationFailure(f"approximate solution failed: {', '.join(bad)}", cert)
    return out


def boundary_vanishing_rates(approx: ApproximateSolution, deltas=None):
    """Log-log slopes in delta of four ball and sphere integrals of u0 near 0.

    Returns a dict name -> {slope, expected}.
    """
    n, p = approx.n, approx.p
    u0 = approx.u0
    grid = u0.grid
    deltas = np.geomspace(1e-4, 1e-2, 9) if deltas is None else np.asarray(deltas, float)
    if deltas.min() < grid.r_min * 10 or deltas.max() >= approx.rho:
        raise DomainError("deltas must lie well inside (r_min, rho)")
    sigma = sphere_area(n)
    t = singular_exponent(p)
    rows = {"ball_u": [], "ball_u_p": [], "sphere_u": [], "sphere_du": []}
    r = grid.nodes
    for d in deltas:
        rows["ball_u"].append(ball_integral(u0, d, 1.0))
        rows["ball_u_p"].append(ball_integral(u0, d, p))
        k = int(np.searchsorted(r, d))
        idx = np.arange(max(k - 2, 0), min(k + 3, grid.size))
        c = fd_weights(d, r[idx], 1)
        val, der = float(c[0] @ u0.values[idx]), float(c[1] @ u0.values[idx])
        rows["sphere_u"].append(sigma * d ** (n - 1) * abs(val))
        rows["sphere_du"].append(sigma * d ** (n - 1) * abs(der))
    expected = {
        "ball_u": -t + n,
        "ball_u_p": -t * p + n,
        "sphere_u": -t + n - 1,
        "sphere_du": -(p + 1.0) / (p - 1.0) + n - 1,
    }
    logd = np.log(deltas)
    out = {}
    for name, vals in rows.items():
        slope = float(np.polyfit(logd, np.log(vals), 1)[0])
        out[name] = {"slope": slope, "expected": expected[name]}
    return out
