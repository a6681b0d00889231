"""Minimize J in the ball ||u|| <= r0 and check the resulting U = u0 + u."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .functional import FunctionalContext, LandscapeConstants, derivative_covector, eval_J
from .grid import GridFunction, PowerLaw, RadialGrid, TestFunction, origin_moment

ARMIJO_C1 = 1e-4
STICK_LIMIT = 50
NOISE_FACTOR = 1e-13


@dataclass(frozen=True)
class SolutionBundle:
    u_tilde: GridFunction
    U: GridFunction
    trace: tuple
    converged: bool
    grad_norm: float
    norm: float
    radius: float
    J: float
    iterations: int
    stuck_on_sphere: bool
    variant: str
    restarts: tuple = ()
    residuals: dict = field(default_factory=dict)
    singularity: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)

    @property
    def interior(self) -> bool:
        return self.norm < self.radius

    def summary(self):
        return {
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "norm": self.norm,
            "radius": self.radius,
            "J": self.J,
            "iterations": self.iterations,
            "interior": self.interior,
            "stuck_on_sphere": self.stuck_on_sphere,
            "variant": self.variant,
            "restarts": [dict(r) for r in self.restarts],
        }


def _project(u, norm, radius):
    if norm <= radius:
        return u, norm, False
    return u * (radius / norm), radius, True


def _descend(ctx: FunctionalContext, radius, u, tol, max_iters):
    """Projected Riesz-gradient descent with Armijo backtracking.

    Once J changes by less than its rounding level the value test is
    meaningless, so a step is then accepted when it lowers the gradient norm.
    """
    norm = ctx.h1_norm(u)
    J = eval_J(u, ctx)
    cov = derivative_covector(u, ctx)
    grad = ctx.riesz(cov)
    gnorm = math.sqrt(max(float(np.dot(cov, grad)), 0.0))
    trace = [(0, J, gnorm, norm, 1.0)]
    stuck_run, flagged = 0, False
    step = 1.0
    it = 0
    while gnorm > tol and it < max_iters:
        it += 1
        t = min(1.0, 2.0 * step)
        noise = NOISE_FACTOR * max(abs(J), 1.0)
        while True:
            trial, tnorm, projected = _project(u - t * grad, ctx.h1_norm(u - t * grad), radius)
            Jt = eval_J(trial, ctx)
            tcov = derivative_covector(trial, ctx)
            tgrad = ctx.riesz(tcov)
            tg = math.sqrt(max(float(np.dot(tcov, tgrad)), 0.0))
            if Jt <= J + ARMIJO_C1 * float(np.dot(cov, trial - u)) and Jt <= J:
                break
            if abs(Jt - J) <= noise and tg < gnorm:
                break
            t *= 0.5
            if t < 1e-14:
                if projected:
                    # constrained stationary point on the sphere
                    return u, J, gnorm, norm, trace, True
                raise NumericError("minimize", "line search failed", tuple(trace))
        step = t
        u, norm, J = trial, tnorm, Jt
        stuck_run = stuck_run + 1 if projected else 0
        flagged = flagged or stuck_run > STICK_LIMIT
        cov, grad, gnorm = tcov, tgrad, tg
        trace.append((it, J, gnorm, norm, t))
    return u, J, gnorm, norm, trace, flagged


def assemble_U(ctx: FunctionalContext, u_tilde) -> GridFunction:
    """u0 + u with the power-law extension of u0 and the correction frozen at r_1."""
    u0 = ctx.approx.u0
    ext = u0.extension
    model = PowerLaw(ext.coef, ext.power, ext.offset + float(u_tilde[0]))
    return GridFunction(ctx.grid, u0.values + u_tilde, model)


def minimize(ctx: FunctionalContext, lc: LandscapeConstants, tol=1e-8, max_iters=2000, restarts=0,
             seed=0, start=None) -> SolutionBundle:
    """Projected gradient descent inside the ball of radius lc.r0.

    ``restarts`` extra runs start from small random points of the ball and
    the run with the lowest J is kept; the others are summarized.
    """
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    radius = lc.r0
    size = ctx.grid.size
    u = np.zeros(size) if start is None else np.array(ctx.vector(start), float)
    if math.isinf(tol):
        max_iters = 0
    runs = [_descend(ctx, radius, u, tol, max_iters)]
    summaries = []
    if restarts:
        r = ctx.grid.nodes
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)]
        for k, rng in enumerate(rngs):
            width = rng.uniform(0.5, 5.0)
            v = rng.normal() * np.exp(-((r / width) ** 2))
            v *= rng.uniform(0.1, 0.9) * radius / ctx.h1_norm(v)
            run = _descend(ctx, radius, v, tol, max_iters)
            runs.append(run)
            summaries.append({"seed_index": k, "J": run[1], "grad_norm": run[2], "norm": run[3]})
    best = min(runs, key=lambda run: run[1])
    u, J, gnorm, norm, trace, flagged = best
    converged = gnorm <= tol
    bundle = SolutionBundle(
        u_tilde=GridFunction(ctx.grid, u),
        U=assemble_U(ctx, u),
        trace=tuple(trace),
        converged=bool(converged),
        grad_norm=gnorm,
        norm=norm,
        radius=radius,
        J=J,
        iterations=len(trace) - 1,
        stuck_on_sphere=bool(flagged),
        variant=ctx.variant,
        restarts=tuple(summaries),
    )
    return bundle


# --- distributional identity ------------------------------------------------------


def distributional_residual(U: GridFunction, phi: TestFunction, ctx: FunctionalContext, parts=False):
    """int U (-Lap phi + V phi) dx - int g(x, U) phi dx.

    Below r_1 the singular model of U is integrated analytically against the
    test function frozen at r_1.
    """
    grid = ctx.grid
    if phi.support > grid.r_max:
        raise DomainError("test function support exceeds the grid")
    spec = ctx.problem
    n = grid.n
    r = grid.nodes
    rv = r ** (n - 1)
    V = np.asarray(spec.V(r), float) * np.ones(grid.size)
    lap = phi.laplacian(r)
    ph = phi.value(r)
    lin = U.values * (lap + V * ph)
    nonlin = np.asarray(spec.nonlinearity(r, U.values), float) * ph
    lin_int = grid.sigma * grid.integrate_radial(lin * rv)
    non_int = grid.sigma * grid.integrate_radial(nonlin * rv)
    if phi.covers_origin():
        r1 = grid.r_min
        model = U.origin_model()
        w_lin = float(lap[0] + V[0] * ph[0])
        lin_int += grid.sigma * w_lin * origin_moment(model, n, r1, 1.0)
        gam = float(np.asarray(spec.Gamma(r1), float))
        non_int += grid.sigma * gam * float(ph[0]) * origin_moment(model, n, r1, spec.p)
    value = lin_int - non_int
    if parts:
        return {"value": value, "linear": lin_int, "nonlinear": non_int}
    return value


def local_l1(U: GridFunction, phi: TestFunction) -> float:
    """int over supp(phi) of |U|."""
    grid = U.grid
    r = grid.nodes
    inside = (r <= phi.support) & (r >= phi.inner_radius)
    g = np.where(inside, np.abs(U.values), 0.0) * r ** (grid.n - 1)
    total = grid.sigma * grid.integrate_radial(g)
    if phi.covers_origin():
        total += grid.sigma * origin_moment(U.origin_model(), grid.n, grid.r_min, 1.0)
    return total


def residual_report(U: GridFunction, tests, ctx: FunctionalContext, threshold=1e-4):
    rows = []
    for phi in tests:
        value = distributional_residual(U, phi, ctx)
        scale = phi.c2_norm() * local_l1(U, phi)
        rows.append({
            "name": phi.name,
            "covers_origin": phi.covers_origin(),
            "residual": value,
            "scale": scale,
            "relative": abs(value) / scale,
            "passed": abs(value) <= threshold * scale,
        })
    return {"threshold": threshold, "rows": rows, "passed": all(r["passed"] for r in rows)}


def default_tests(n, rho):
    from .grid import annulus_bump, bessel_bump, smooth_bump

    tests = [smooth_bump(n, 0.5), smooth_bump(n, 1.5 * rho), smooth_bump(n, 4.0), bessel_bump(n, 0.8)]
    for a, b in ((0.05, 0.5), (0.2, 1.2), (0.5, 2.5), (rho * 0.5, rho * 1.5), (1.5, 5.0), (3.0, 10.0)):
        tests.append(annulus_bump(n, a, b))
    return tests


# --- fits ----------------------------------------------------------------------


def singularity_fit(U: GridFunction, window=(1e-5, 1e-3)):
    """Least-squares log-log line through U on the window; returns slope and amplitude."""
    r = U.grid.nodes
    sel = (r >= window[0] * (1 - 1e-12)) & (r <= window[1] * (1 + 1e-12))
    if np.count_nonzero(sel) < 3:
        raise DomainError("fit window holds fewer than three nodes")
    vals = U.values[sel]
    if np.any(vals <= 0.0):
        raise NumericError("singularity_fit", "non-positive values in the fit window")
    slope, intercept = np.polyfit(np.log(r[sel]), np.log(vals), 1)
    return {"slope": float(slope), "amplitude": float(math.exp(intercept)), "window": list(window),
            "points": int(np.count_nonzero(sel))}


def positivity_check(bundle: SolutionBundle, ctx: FunctionalContext, tol=1e-6):
    if ctx.variant != "positive":
        raise DomainError("positivity is only claimed for the positive-part functional")
    U = bundle.U
    grid = U.grid
    low = float(np.min(U.values))
    sup = float(np.max(np.abs(U.values)))
    neg = grid.sigma * grid.integrate_radial(np.maximum(-U.values, 0.0) * grid.nodes ** (grid.n - 1))
    return {"min": low, "sup": sup, "negative_part": neg, "passed": bool(low >= -tol * sup)}


def correction_bounds(bundle: SolutionBundle) -> dict:
    """Size of the correction near the origin: max |u|, its L^(2n/(n-2)) norm and growth rate."""
    u = bundle.u_tilde
    grid = u.grid
    n = grid.n
    out = {"max_abs": float(np.max(np.abs(u.values)))}
    if n > 2:
        q = 2.0 * n / (n - 2.0)
        out["lq_exponent"] = q
        out["lq_norm"] = float(grid.sigma * grid.integrate_radial(np.abs(u.values) ** q * grid.nodes ** (n - 1))) ** (1 / q)
    r = grid.nodes
    sel = r <= 1e-3
    vals = np.abs(u.values[sel])
    if np.all(vals > 0.0) and np.count_nonzero(sel) > 3:
        out["origin_log_slope"] = float(np.polyfit(np.log(r[sel]), np.log(vals), 1)[0])
    return out


def solve_on(problem, grid: RadialGrid, variant="signed", tol=1e-8, lc=None):
    """Assemble, compute landscape constants and minimize on a given grid."""
    from .approx import assemble_u0
    from .functional import landscape_constants

    ap = assemble_u0(problem.n, problem.p, grid)
    ctx = FunctionalContext(problem, ap, variant)
    lc = landscape_constants(ctx) if lc is None else lc
    return ctx, lc, minimize(ctx, lc, tol)
