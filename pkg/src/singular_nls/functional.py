"""The correction functional J around the approximate solution u0.

For a correction u the full profile is u0 + u and

    J[u] = 1/2 <u, u>_V - J1[u] - J2[u] + J3[u]

with J1, J2 the integrals of the nonlinear remainders F1, F2 and J3 the
linear defect of u0 (bulk terms plus the derivative jump at |x| = rho).
Corrections live on the nodes of the grid; the quadratic form is the P1
gradient form with lumped mass, nonlinear terms use the lumped mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .approx import ApproximateSolution, c_np
from .errors import DomainError, HypothesisViolation
from .grid import GridFunction, RadialGrid, sample_potential
from .linalg import apply, form_matrix, lowest_eigenpair, quadratic_form, solve_spd
from .problem import ProblemSpec
from .specfun import sphere_area

VARIANTS = ("signed", "positive")
_SERIES_CUTOFF = 1e-2


# --- pointwise remainders -------------------------------------------------------


def _binomial_series(a, tau, start, terms=12):
    """sum_{k >= start} binom(a, k) tau^k."""
    coef = 1.0
    for k in range(start):
        coef *= (a - k) / (k + 1)
    total = np.zeros_like(tau)
    power = tau**start
    for k in range(start, start + terms):
        total += coef * power
        coef *= (a - k) / (k + 1)
        power = power * tau
    return total


def _phi(tau, a, positive):
    """|1 + tau|^a - 1 - a tau (or with (1 + tau)_+), stable near tau = 0."""
    tau = np.asarray(tau, float)
    out = np.empty_like(tau)
    small = np.abs(tau) < _SERIES_CUTOFF
    out[small] = _binomial_series(a, tau[small], 2)
    big = ~small
    t = tau[big]
    above = t > -1.0
    vals = np.empty_like(t)
    vals[above] = np.expm1(a * np.log1p(t[above])) - a * t[above]
    base = 0.0 if positive else 1.0
    vals[~above] = base * np.abs(1.0 + t[~above]) ** a - 1.0 - a * t[~above]
    out[big] = vals
    return out


def _psi(tau, a, positive):
    """|1 + tau|^(a-1) (1 + tau) - 1 (or (1 + tau)_+^(a-1)... - 1)."""
    tau = np.asarray(tau, float)
    out = np.empty_like(tau)
    above = tau > -1.0
    out[above] = np.expm1((a - 1.0) * np.log1p(tau[above]))
    base = 0.0 if positive else 1.0
    out[~above] = -base * np.abs(1.0 + tau[~above]) ** (a - 1.0) - 1.0
    return out


def _power_part(x, a, positive):
    """|x|^(a-1) x, or x_+^(a-1) x_+ for the positive-part variant."""
    x = np.asarray(x, float)
    if positive:
        xp = np.maximum(x, 0.0)
        return xp**a if a != 1.0 else xp
    return np.abs(x) ** (a - 1.0) * x


def f1(s, u0, p, positive=False):
    """F1(s) = (|s + u0|^(p+1) - u0^(p+1) - (p+1) u0^p s)/(p+1), u0 > 0 pointwise."""
    s, u0 = np.broadcast_arrays(np.asarray(s, float), np.asarray(u0, float))
    out = np.empty(s.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tau = np.where(u0 > 0.0, s / np.where(u0 > 0.0, u0, 1.0), np.inf)
    direct = ~(np.abs(tau) <= 1e3)
    if np.any(~direct):
        sel = ~direct
        out[sel] = u0[sel] ** (p + 1.0) * _phi(tau[sel], p + 1.0, positive) / (p + 1.0)
    if np.any(direct):
        sd, ud = s[direct], u0[direct]
        out[direct] = (_abs_power(sd + ud, p + 1.0, positive) - ud ** (p + 1.0)
                       - (p + 1.0) * ud**p * sd) / (p + 1.0)
    return out


def _abs_power(x, a, positive):
    x = np.asarray(x, float)
    return np.maximum(x, 0.0) ** a if positive else np.abs(x) ** a


def f1_prime(s, u0, p, positive=False):
    """dF1/ds = |u0 + s|^(p-1)(u0 + s) - u0^p."""
    s, u0 = np.broadcast_arrays(np.asarray(s, float), np.asarray(u0, float))
    out = np.empty(s.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tau = np.where(u0 > 0.0, s / np.where(u0 > 0.0, u0, 1.0), np.inf)
    direct = ~(np.abs(tau) <= 1e3)
    sel = ~direct
    out[sel] = u0[sel] ** p * _psi(tau[sel], p + 1.0, positive)
    out[direct] = _power_part(s[direct] + u0[direct], p, positive) - u0[direct] ** p
    return out


def f2(s, u0, gamma, p, positive=False):
    """F2(s) = (Gamma - 1)(|u0 + s|^(p+1) - u0^(p+1))/(p+1)."""
    s, u0, gamma = np.broadcast_arrays(np.asarray(s, float), np.asarray(u0, float), np.asarray(gamma, float))
    return (gamma - 1.0) * (f1(s, u0, p, positive) + u0**p * s)


def f2_prime(s, u0, gamma, p, positive=False):
    """dF2/ds = (Gamma - 1)|u0 + s|^(p-1)(u0 + s)."""
    s, u0, gamma = np.broadcast_arrays(np.asarray(s, float), np.asarray(u0, float), np.asarray(gamma, float))
    return (gamma - 1.0) * _power_part(u0 + s, p, positive)


def f1_hat(s, u0, p):
    return f1(s, u0, p, positive=True)


def f2_hat(s, u0, gamma, p):
    return f2(s, u0, gamma, p, positive=True)


def f1_hat_prime(s, u0, p):
    return f1_prime(s, u0, p, positive=True)


def f2_hat_prime(s, u0, gamma, p):
    return f2_prime(s, u0, gamma, p, positive=True)


# --- context --------------------------------------------------------------------


@dataclass(eq=False)
class FunctionalContext:
    problem: ProblemSpec
    approx: ApproximateSolution
    variant: str = "signed"
    potential: np.ndarray = field(init=False, repr=False)
    weight: np.ndarray = field(init=False, repr=False)
    u0: np.ndarray = field(init=False, repr=False)
    form: tuple = field(init=False, repr=False)
    gram: tuple = field(init=False, repr=False)
    defect: np.ndarray = field(init=False, repr=False)
    mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"variant must be one of {VARIANTS}")
        spec, ap = self.problem, self.approx
        if spec.n != ap.n or abs(spec.p - ap.p) > 1e-15:
            raise DomainError("problem and approximate solution disagree on (n, p)")
        if not ap.passed:
            raise HypothesisViolation("approximate solution", "u0 is not certified")
        grid = ap.grid
        r = grid.nodes
        self.potential = sample_potential(grid, spec.V)
        self.weight = np.asarray(spec.Gamma(r), float) * np.ones(grid.size)
        self.u0 = np.array(ap.u0.values)
        self.mass = grid.measure
        self.form = form_matrix(grid, self.potential)
        self.gram = form_matrix(grid, 1.0)
        self.defect = defect_vector(spec, ap)

    @property
    def grid(self) -> RadialGrid:
        return self.approx.grid

    @property
    def positive(self) -> bool:
        return self.variant == "positive"

    @property
    def p(self) -> float:
        return self.problem.p

    def with_variant(self, variant) -> "FunctionalContext":
        return FunctionalContext(self.problem, self.approx, variant)

    def vector(self, u) -> np.ndarray:
        if isinstance(u, GridFunction):
            if u.grid is not self.grid and not np.array_equal(u.grid.nodes, self.grid.nodes):
                raise DomainError("function lives on a different grid")
            return np.asarray(u.values, float)
        u = np.asarray(u, float)
        if u.shape != (self.grid.size,):
            raise DomainError("vector does not match the grid")
        return u

    def h1_norm(self, u) -> float:
        return math.sqrt(max(quadratic_form(*self.gram, self.vector(u)), 0.0))

    def riesz(self, covector) -> np.ndarray:
        """H1 representer of a nodal covector (solves the Gram system)."""
        return solve_spd(*self.gram, covector)

    def dual_norm(self, covector) -> float:
        return math.sqrt(max(float(np.dot(covector, self.riesz(covector))), 0.0))


def defect_vector(spec: ProblemSpec, ap: ApproximateSolution) -> np.ndarray:
    """Covector b with J3[u] = b . u on the nodal space.

    The bulk integrands V u0 (inside rho) and (V - 1) u0 (outside) are
    integrated with separate quadrature rules on each side of rho so that
    their jump does not degrade the order.
    """
    grid = ap.grid
    r = grid.nodes
    j = ap.rho_index
    n = grid.n
    sigma = sphere_area(n)
    V = np.asarray(spec.V(r), float) * np.ones(grid.size)
    u0 = ap.u0.values
    b = np.zeros(grid.size)
    inner = RadialGrid(n, r[: j + 1]).weights
    outer = RadialGrid(n, r[j:]).weights if grid.size - j >= 4 else np.zeros(grid.size - j)
    b[: j + 1] += sigma * inner * r[: j + 1] ** (n - 1) * V[: j + 1] * u0[: j + 1]
    b[j:] += sigma * outer * r[j:] ** (n - 1) * (V[j:] - 1.0) * u0[j:]
    # ball (0, r_1): corrections are constant there, u0 is the power law
    t = ap.exponent
    b[0] += V[0] * sigma * ap.c_np * r[0] ** (n - t) / (n - t)
    b[j] += ap.jump * sigma * ap.rho ** (n - 1)
    return b


def make_context(problem: ProblemSpec, approx: ApproximateSolution | None = None, grid=None,
                 variant="signed") -> FunctionalContext:
    from .approx import assemble_u0

    if approx is None:
        approx = assemble_u0(problem.n, problem.p, grid)
    return FunctionalContext(problem, approx, variant)


# --- functional and derivative --------------------------------------------------


def j_parts(u, ctx: FunctionalContext):
    """(quadratic, J1, J2, J3) for a nodal correction u."""
    x = ctx.vector(u)
    m = ctx.mass
    p = ctx.p
    quad = 0.5 * quadratic_form(*ctx.form, x)
    j1 = float(np.dot(m, f1(x, ctx.u0, p, ctx.positive)))
    if np.all(ctx.weight == 1.0):
        j2 = 0.0
    else:
        j2 = float(np.dot(m, f2(x, ctx.u0, ctx.weight, p, ctx.positive)))
    j3 = float(np.dot(ctx.defect, x))
    return quad, j1, j2, j3


def eval_J(u, ctx: FunctionalContext) -> float:
    # overflow is reported as NumericError below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        quad, j1, j2, j3 = j_parts(u, ctx)
        value = quad - j1 - j2 + j3
    if not math.isfinite(value):
        from .errors import NumericError

        raise NumericError("eval_J", "non-finite functional value")
    return value


def j3(u, ctx: FunctionalContext) -> float:
    return float(np.dot(ctx.defect, ctx.vector(u)))


def derivative_covector(u, ctx: FunctionalContext) -> np.ndarray:
    """Nodal covector g with dJ(u, phi) = g . phi."""
    x = ctx.vector(u)
    p = ctx.p
    g = apply(*ctx.form, x)
    g -= ctx.mass * f1_prime(x, ctx.u0, p, ctx.positive)
    if not np.all(ctx.weight == 1.0):
        g -= ctx.mass * f2_prime(x, ctx.u0, ctx.weight, p, ctx.positive)
    return g + ctx.defect


def dJ(u, phi, ctx: FunctionalContext) -> float:
    return float(np.dot(derivative_covector(u, ctx), ctx.vector(phi)))


def grad_J(u, ctx: FunctionalContext) -> GridFunction:
    """Riesz gradient in the discrete H1 inner product."""
    return GridFunction(ctx.grid, ctx.riesz(derivative_covector(u, ctx)))


def grad_norm(u, ctx: FunctionalContext) -> float:
    return ctx.dual_norm(derivative_covector(u, ctx))


# --- landscape --------------------------------------------------------------------


def d_p(n, p, alpha, rho) -> float:
    """L2(B_rho) norm of |x|^(alpha + (p-3)/(p-1))."""
    gamma = 2.0 * alpha + 2.0 * (p - 3.0) / (p - 1.0)
    if gamma + n <= 0.0:
        raise HypothesisViolation("D(p)", f"exponent {gamma} <= -n makes the norm diverge")
    return math.sqrt(sphere_area(n) * rho ** (gamma + n) / (gamma + n))


def remainder_coefficient(p, quad_coef, positive=False):
    """Smallest b with F1(tau)/u0^(p+1) <= quad_coef tau^2 + b |tau|^(p+1) for all tau.

    Needs quad_coef > p/2 (the second-order Taylor coefficient); otherwise inf.
    """
    if quad_coef <= p / 2.0:
        return math.inf
    tau = np.geomspace(1e-8, 1e8, 20001)
    tau = np.concatenate([-tau[::-1], tau])
    excess = _phi(tau, p + 1.0, positive) / (p + 1.0) - quad_coef * tau**2
    ratio = excess / np.abs(tau) ** (p + 1.0)
    k = int(np.argmax(ratio))
    best = float(ratio[k])
    # refine around the sampled maximum
    lo, hi = tau[max(k - 1, 0)], tau[min(k + 1, len(tau) - 1)]
    fine = np.linspace(lo, hi, 2001)
    fine = fine[fine != 0.0]
    r2 = (_phi(fine, p + 1.0, positive) / (p + 1.0) - quad_coef * fine**2) / np.abs(fine) ** (p + 1.0)
    return max(best, float(np.max(r2)), 0.0)


def sobolev_fit(ctx: FunctionalContext, q, weight=None, starts=None, iters=400, tol=1e-11):
    """sup of int w |u|^q / ||u||^q over the discrete space (local maximization).

    Fixed-point iteration u <- Riesz(w |u|^(q-2) u), normalized, from several
    Gaussian starts; returns (best ratio, maximizer).
    """
    grid = ctx.grid
    r = grid.nodes
    w = ctx.mass * (np.ones(grid.size) if weight is None else weight)
    starts = starts or [0.3, 1.0, 3.0, 8.0]
    best, arg = -1.0, None
    for width in starts:
        u = np.exp(-((r / width) ** 2))
        u /= ctx.h1_norm(u)
        value = 0.0
        for _ in range(iters):
            cov = w * np.abs(u) ** (q - 2.0) * u
            new = ctx.riesz(cov)
            norm = ctx.h1_norm(new)
            if norm == 0.0:
                break
            new /= norm
            nv = float(np.dot(w, np.abs(new) ** q))
            done = abs(nv - value) <= tol * max(nv, 1e-300)
            u, value = new, nv
            if done:
                break
        if value > best:
            best, arg = value, u
    return best, arg


@dataclass(frozen=True)
class LandscapeConstants:
    A: float
    B: float
    A_p: float
    C_p: float
    D_p: float
    r0: float
    m: float
    eps_window: float | None
    quad_coef: float
    remainder_coef: float
    hardy_weight: float
    sobolev_ratio: float
    fit_quad: float
    fit_lin: float
    window_conditions: dict = field(default_factory=dict)
    ladder: tuple = ()

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "A", "B", "A_p", "C_p", "D_p", "r0", "m", "eps_window", "quad_coef", "remainder_coef",
            "hardy_weight", "sobolev_ratio", "fit_quad", "fit_lin")}
        out["window_conditions"] = dict(self.window_conditions)
        out["ladder"] = [dict(row) for row in self.ladder]
        return out


def coercivity_constant(ctx: FunctionalContext) -> float:
    """A = 1/2 min <u,u>_V / ||u||^2 over the discrete space."""
    value, _, _ = lowest_eigenpair(*ctx.form, *ctx.gram)
    return 0.5 * value


def radius_from(A, B, n):
    """min over q in [n/(n-2), (n+2)/(n-2)] of (A/(8B))^(1/(q-1))."""
    if B <= 0.0:
        return math.inf
    base = A / (8.0 * B)
    exps = (1.0 / (n / (n - 2.0) - 1.0), 1.0 / ((n + 2.0) / (n - 2.0) - 1.0))
    return min(base**e for e in exps)


def _single_p_constants(ctx: FunctionalContext, A: float, safety=1.0):
    """Constants of the lower bound J >= A_p |u|^2 - B |u|^(p+1) - C_p |u| at ctx.p."""
    p, n = ctx.p, ctx.problem.n
    gamma_plus = np.maximum(ctx.weight, 0.0)
    # J1 + J2 = int Gamma F1 + int (Gamma - 1) u0^p u, and F1 >= 0
    hw = ctx.mass * gamma_plus * ctx.u0 ** (p - 1.0) + 1e-300
    inv_q, _, _ = lowest_eigenpair(*ctx.gram, hw)
    hardy_weight = 1.0 / inv_q
    # largest split keeping A_p >= A/2; the remainder coefficient decreases in it
    quad_coef = safety * 0.5 * A / hardy_weight
    b = remainder_coefficient(p, quad_coef, ctx.positive)
    sob, _ = sobolev_fit(ctx, p + 1.0, gamma_plus)
    B = b * sob
    A_p = A - quad_coef * hardy_weight
    linear = ctx.defect - ctx.mass * (ctx.weight - 1.0) * ctx.u0**p
    C_p = ctx.dual_norm(linear)
    r0 = radius_from(A, B, n)
    c = c_np(n, p)
    D = d_p(n, p, ctx.problem.alpha, ctx.approx.rho)
    return {
        "p": p,
        "A_p": A_p,
        "B": B,
        "C_p": C_p,
        "D_p": D,
        "r0": r0,
        "quad_coef": quad_coef,
        "remainder_coef": b,
        "hardy_weight": hardy_weight,
        "sobolev_ratio": sob,
        "c_np": c,
        "fit_quad": quad_coef * hardy_weight / c ** (p - 1.0),
        "fit_lin": C_p / (c**p + c * (D + 1.0)),
        "coercive": A_p >= A / 2.0,
        "small_defect": C_p <= A / 8.0 * r0,
    }


def landscape_constants(ctx: FunctionalContext, ladder=None) -> LandscapeConstants:
    """Coercivity, remainder and defect constants for the lower bound on J.

    With a ``ladder`` of exponents the same constants are computed at each p
    (same grid and potential) and eps_window is the largest p - n/(n-2) of
    the initial run of ladder points where both window conditions hold.
    """
    A = coercivity_constant(ctx)
    if not A > 0.0:
        raise HypothesisViolation("H2", f"coercivity constant A = {A} is not positive")
    row = _single_p_constants(ctx, A)
    r0 = row["r0"]
    m = A / 4.0 * r0**2
    rows = []
    eps = None
    if ladder:
        from dataclasses import replace

        from .approx import assemble_u0

        base = ctx.problem.n / (ctx.problem.n - 2.0)
        ok_run = True
        for q in sorted(ladder):
            spec_q = replace(ctx.problem, p=float(q))
            ap_q = assemble_u0(spec_q.n, spec_q.p, ctx.grid)
            rq = _single_p_constants(FunctionalContext(spec_q, ap_q, ctx.variant), A)
            rows.append({k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in rq.items()})
            if ok_run and rq["coercive"] and rq["small_defect"]:
                eps = q - base
            else:
                ok_run = False
    conditions = {
        "A_p >= A/2": bool(row["coercive"]),
        "C_p <= A r0 / 8": bool(row["small_defect"]),
        "C_p": row["C_p"],
        "A r0 / 8": A / 8.0 * r0,
    }
    return LandscapeConstants(
        A=A,
        B=row["B"],
        A_p=row["A_p"],
        C_p=row["C_p"],
        D_p=row["D_p"],
        r0=r0,
        m=m,
        eps_window=eps,
        quad_coef=row["quad_coef"],
        remainder_coef=row["remainder_coef"],
        hardy_weight=row["hardy_weight"],
        sobolev_ratio=row["sobolev_ratio"],
        fit_quad=row["fit_quad"],
        fit_lin=row["fit_lin"],
        window_conditions=conditions,
        ladder=tuple(rows),
    )


# --- sphere sampling ----------------------------------------------------------------


def random_direction(ctx: FunctionalContext, rng: np.random.Generator, modes=12):
    """Smooth random radial profile with decaying coefficients."""
    r = ctx.grid.nodes
    u = np.zeros_like(r)
    scale = rng.uniform(0.3, 8.0)
    for k in range(modes):
        amp = rng.normal() / (1.0 + k) ** 1.5
        kind = rng.integers(3)
        if kind == 0:
            width = scale * rng.uniform(0.2, 2.0)
            u += amp * np.exp(-((r / width) ** 2))
        elif kind == 1:
            center = rng.uniform(0.0, 10.0)
            width = rng.uniform(0.2, 3.0)
            u += amp * np.exp(-(((r - center) / width) ** 2))
        else:
            freq = (k + 1) * rng.uniform(0.2, 1.0)
            u += amp * np.cos(freq * r) * np.exp(-r / scale)
    return u


def adversarial_directions(ctx: FunctionalContext):
    """Ten hand-made directions: bumps at the origin, at rho, in the tail, -u0 and the defect."""
    r = ctx.grid.nodes
    rho = ctx.approx.rho
    R = ctx.grid.r_max
    out = {
        "origin_narrow": np.exp(-((r / 0.2) ** 2)),
        "origin_wide": np.exp(-((r / 1.0) ** 2)),
        "rho_narrow": np.exp(-(((r - rho) / 0.2) ** 2)),
        "rho_wide": np.exp(-(((r - rho) / 1.0) ** 2)),
        "tail_near": np.exp(-(((r - min(8.0, 0.3 * R)) / 2.0) ** 2)),
        "tail_far": np.exp(-(((r - min(20.0, 0.6 * R)) / 3.0) ** 2)),
        "minus_u0_cap1": -np.minimum(ctx.u0, ctx.approx.c0),
        "minus_u0_cap10": -np.minimum(ctx.u0, 10.0 * ctx.approx.c0),
    }
    defect = ctx.riesz(ctx.defect)
    out["minus_defect"] = -defect
    out["plus_defect"] = defect
    return out


@dataclass(frozen=True)
class SphereReport:
    radius: float
    m: float
    min_J: float
    argmin: str
    samples: int
    passed: bool
    adversarial: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "radius": self.radius,
            "m": self.m,
            "min_J": self.min_J,
            "argmin": self.argmin,
            "samples": self.samples,
            "passed": self.passed,
            "adversarial": dict(self.adversarial),
        }


def sphere_check(ctx: FunctionalContext, lc: LandscapeConstants, directions=200, seed=0, radius=None,
                 tolerance=0.05) -> SphereReport:
    """min J over sampled u with ||u|| = r0 (random plus adversarial directions)."""
    radius = lc.r0 if radius is None else radius
    adv = adversarial_directions(ctx)
    best, arg = math.inf, ""
    values = {}
    for name, d in adv.items():
        val = eval_J(d * (radius / ctx.h1_norm(d)), ctx)
        values[name] = val
        if val < best:
            best, arg = val, name
    count = max(directions - len(adv), 0)
    seeds = np.random.SeedSequence(seed).spawn(count)
    for k, s in enumerate(seeds):
        d = random_direction(ctx, np.random.default_rng(s))
        norm = ctx.h1_norm(d)
        if norm == 0.0:
            continue
        val = eval_J(d * (radius / norm), ctx)
        if val < best:
            best, arg = val, f"random[{k}]"
    passed = best >= lc.m * (1.0 - tolerance)
    return SphereReport(radius, lc.m, best, arg, len(adv) + count, bool(passed), values)
