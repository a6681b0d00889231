"""Acceptance criteria K1 to K13, each at its stated tolerance.

Every test records one PASS/FAIL line, printed together at the end of the
pytest run. K12 is expected to fail: see the assertion message.
"""

import json
import math
import subprocess
import sys

import numpy as np

from conftest import VERDICTS
from singular_nls.approx import (assemble_u0, boundary_vanishing_rates, c_np, choose_rho, singular_exponent,
                                 solve_u2, truncation_agreement, u1_profile)
from singular_nls.cli import DEFAULT_LADDER
from singular_nls.decay import fit_decay
from singular_nls.functional import (FunctionalContext, d_p, dJ, eval_J, j3, landscape_constants, sphere_check)
from singular_nls.greens import (OmegaShift, bootstrap_regularity, ground_state, inverse_identity_error,
                                 mapping_table, representation_residual, strong_residual, t_omega)
from singular_nls.grid import GridFunction, RadialGrid, laplacian_radial
from singular_nls.problem import estimate_sigma, simple_problem
from singular_nls.solver import default_tests, distributional_residual, minimize, positivity_check, \
    residual_report, singularity_fit
from singular_nls.specfun import KernelParams, green_kernel


def verdict(key, ok, detail):
    line = f"{key} {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS.append(line)
    print(line)
    return ok


def observed_orders(errors):
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


def fitted_order(errors, ladder):
    """Least-squares slope of log error against log spacing (spacing ~ 1/per_decade)."""
    return float(-np.polyfit(np.log(np.asarray(ladder, float)), np.log(np.asarray(errors)), 1)[0])


def grids(n, ladder=(100, 200, 400), align=None):
    return [RadialGrid.build(n, per_decade=P, align=align) for P in ladder]


def test_k01_kernel_closed_forms():
    r = np.geomspace(1e-4, 30.0, 2000)
    worst_closed = worst_scale = 0.0
    for omega in (0.5, 1.0, 4.0):
        k = math.sqrt(omega)
        g3 = green_kernel(KernelParams(3, omega), r)
        g1 = green_kernel(KernelParams(1, omega), r)
        worst_closed = max(worst_closed, np.max(np.abs(g3 / (np.exp(-k * r) / (4 * math.pi * r)) - 1)),
                           np.max(np.abs(g1 / (np.exp(-k * r) / (2 * k)) - 1)))
        for n in (1, 2, 3, 4, 5):
            lhs = green_kernel(KernelParams(n, omega), r)
            rhs = omega ** ((n - 2) / 2) * green_kernel(KernelParams(n, 1.0), k * r)
            worst_scale = max(worst_scale, np.max(np.abs(lhs / rhs - 1)))
    ok = worst_closed <= 1e-10 and worst_scale <= 1e-12
    verdict("K1", ok, f"closed form {worst_closed:.2e} <= 1e-10, scaling {worst_scale:.2e} <= 1e-12")
    assert ok


def test_k02_singular_profile_second_order():
    p = 3.05
    errs = []
    for g in grids(3, align=1.0):
        u = u1_profile(3, p, g)
        res = laplacian_radial(u).values - u.values**p
        r = g.nodes
        sel = (r >= 0.01) & (r <= choose_rho(3))
        errs.append(float(np.max(np.abs(res[sel]) / u.values[sel] ** p)))
    orders = observed_orders(errs)
    ok = all(o >= 1.8 for o in orders)
    verdict("K2", ok, f"relative residuals {errs[0]:.2e} {errs[1]:.2e} {errs[2]:.2e}, "
                      f"orders {orders[0]:.2f} {orders[1]:.2f}")
    assert ok


def test_k03_exterior_profile_certificate(grid3):
    rho = choose_rho(3)
    lines, ok = [], True
    for p in (3.02, 3.05, 3.1):
        c0 = c_np(3, p) * rho ** (-singular_exponent(p))
        tail = solve_u2(3, p, rho, c0, grid=grid3)
        checks = tail.record["checks"]
        agree = truncation_agreement(3, p, rho, c0, grid=grid3)
        good = tail.passed and checks["ode_residual"]["value"] <= 1e-8 and agree <= 1e-8
        ok = ok and good
        lines.append(f"p={p}: residual {checks['ode_residual']['value']:.1e}, truncation {agree:.1e}")
    verdict("K3", ok, "; ".join(lines))
    assert ok


def test_k04_landscape(ctx3, landscape3):
    lc = landscape3
    sr = sphere_check(ctx3, lc, directions=200, seed=0)
    ok = abs(lc.A - 0.5) <= 1e-6 and lc.m > 0 and sr.min_J >= 0.95 * lc.m and sr.samples >= 200 and len(sr.adversarial) == 10
    verdict("K4", ok, f"A={lc.A:.7f}, m={lc.m:.4f}, min J={sr.min_J:.4f} over {sr.samples} directions, {len(sr.adversarial)} adversarial "
                      f"(worst {sr.argmin})")
    assert ok


ANNULUS_LADDER = (100, 200, 400, 800)


def _annulus_orders():
    """Annulus residuals of U on four nested grids."""
    n, p = 3, 3.05
    spec = simple_problem(n, p)
    table = {}
    for g in grids(n, ANNULUS_LADDER, align=choose_rho(n)):
        ap = assemble_u0(n, p, g)
        ctx = FunctionalContext(spec, ap)
        bundle = minimize(ctx, landscape_constants(ctx), 1e-9)
        for phi in default_tests(n, ap.rho):
            if not phi.covers_origin():
                table.setdefault(phi.name, []).append(abs(distributional_residual(bundle.U, phi, ctx)))
    return table


def test_k05_critical_point_and_distributional(ctx3, landscape3, bundle3):
    b = bundle3
    converged = b.converged and b.grad_norm <= 1e-8 and b.norm < landscape3.r0
    tests = default_tests(3, ctx3.approx.rho)
    rep = residual_report(b.U, tests, ctx3, threshold=1e-4)
    covering = sum(1 for t in tests if t.covers_origin())
    worst = max(r["relative"] for r in rep["rows"])
    table = _annulus_orders()
    # annuli across the kink of u0 at rho have a node-phase dependent constant,
    # so the rate is fitted over the whole ladder instead of read off one pair
    fitted = {name: fitted_order(v, ANNULUS_LADDER) for name, v in table.items()}
    low = min(fitted.values())
    ok = converged and rep["passed"] and len(tests) >= 10 and covering >= 3 and low >= 1.8
    verdict("K5", ok, f"grad {b.grad_norm:.1e}, |u|={b.norm:.3f} < r0={landscape3.r0:.3f}, "
                      f"max relative residual {worst:.1e} over {len(tests)} tests ({covering} at origin), "
                      f"lowest fitted annulus order {low:.2f} over {len(fitted)} annuli")
    assert ok


def test_k06_singularity_and_decay(grid3, problem3, approx3, bundle3):
    t = singular_exponent(3.05)
    fit = singularity_fit(bundle3.U)
    sigma = estimate_sigma(problem3, grid3, refinements=0).sigma
    decay = fit_decay(bundle3.U)
    ok = (abs(fit["slope"] + t) <= 0.05 and abs(fit["amplitude"] / approx3.c_np - 1) <= 0.05
          and abs(sigma - 1.0) <= 1e-6 and decay.mu_hat >= 0.9 * math.sqrt(sigma))
    verdict("K6", ok, f"slope {fit['slope']:.4f} (target {-t:.4f}), amplitude ratio "
                      f"{fit['amplitude'] / approx3.c_np:.4f}, Sigma={sigma:.8f}, mu_hat={decay.mu_hat:.4f}")
    assert ok


def test_k07_positivity(ctx3, landscape3):
    pctx = ctx3.with_variant("positive")
    b = minimize(pctx, landscape3, 1e-8)
    pos = positivity_check(b, pctx, tol=1e-6)
    ok = pos["passed"] and b.converged
    verdict("K7", ok, f"min U_hat={pos['min']:.3e}, sup={pos['sup']:.3e}, converged={b.converged}")
    assert ok


def test_k08_boundary_integral_rates(approx3):
    rates = boundary_vanishing_rates(approx3)
    dev = max(abs(v["slope"] - v["expected"]) for v in rates.values())
    low = min(v["slope"] for v in rates.values())
    ok = dev <= 0.02 and low > 0
    verdict("K8", ok, f"max deviation {dev:.1e}, smallest exponent {low:.4f}")
    assert ok


def test_k09_representation_formula():
    sub = simple_problem(3, 2.0, mode="subcritical")
    sup = simple_problem(3, 3.05)
    shift = OmegaShift(2.0, 0.5)
    sub_res, sup_res, inv = [], [], []
    for g in grids(3, (50, 100, 200), align=choose_rho(3)):
        u, _ = ground_state(sub, g)
        sub_res.append(representation_residual(u, sub, shift))
        ap = assemble_u0(3, 3.05, g)
        ctx = FunctionalContext(sup, ap)
        U = minimize(ctx, landscape_constants(ctx), 1e-9).U
        sup_res.append(representation_residual(U, sup, shift))
        f = GridFunction.from_callable(g, lambda r: np.exp(-r * r) * (1 + r))
        inv.append(inverse_identity_error(f, shift))
    ratios = {"subcritical": sub_res[-2] / sub_res[-1], "supercritical": sup_res[-2] / sup_res[-1],
              "inverse": inv[-2] / inv[-1]}
    rng = np.random.default_rng(0)
    g = RadialGrid.build(3, per_decade=60)
    r = g.nodes
    worst = 0.0
    for _ in range(100):
        centers = rng.uniform(0, 10, 3)
        widths = rng.uniform(0.2, 3, 3)
        vals = sum(rng.uniform(0, 2) * np.exp(-(((r - c) / w) ** 2)) for c, w in zip(centers, widths))
        w = t_omega(GridFunction(g, vals), shift)
        worst = min(worst, float(np.min(w.values)))
    ok = all(v >= 3.5 for v in ratios.values()) and worst >= 0.0
    verdict("K9", ok, ", ".join(f"{k} ratio {v:.2f}" for k, v in ratios.items())
            + f", min T f over 100 nonnegative f = {worst:.1e}")
    assert ok


def test_k10_subcritical_regularity():
    spec = simple_problem(3, 2.0, mode="subcritical")
    sigma = 1.0
    shift = OmegaShift.default(sigma)
    sups, strong = [], []
    stable = True
    for g in grids(3, (100, 200, 400)):
        u, _ = ground_state(spec, g)
        boot = bootstrap_regularity(u, spec, shift)
        stable = stable and boot["stable"]
        sups.append(boot["norms"][-1]["inf"])
        strong.append(strong_residual(u, spec, shift.omega))
    spread = max(sups) / min(sups) - 1
    orders = observed_orders(strong)
    table = mapping_table(OmegaShift(1.0), 3, trials=8)
    admissible = [row for row in table["rows"] if row["admissible"]]
    rejected = [row for row in table["rows"] if not row["admissible"]]
    ok = (stable and spread <= 1e-2 and all(o >= 1.8 for o in orders) and table["passed"]
          and len(rejected) == 3)
    verdict("K10", ok, f"sup norms {' '.join(f'{s:.5f}' for s in sups)} (spread {spread:.1e}), "
                       f"strong residual orders {' '.join(f'{o:.2f}' for o in orders)}, "
                       f"{sum(r['passed'] for r in admissible)}/{len(admissible)} admissible rows pass, "
                       f"{len(rejected)} rejected")
    assert ok


def test_k11_gradient(ctx3):
    rng = np.random.default_rng(11)
    r = ctx3.grid.nodes
    worst = 0.0
    for scale in (0.01, 0.1, 1.0):
        for _ in range(20):
            u = scale * rng.normal() * np.exp(-((r / rng.uniform(0.3, 4)) ** 2))
            u += scale * 0.3 * rng.normal() * np.exp(-(((r - rng.uniform(0, 8)) / rng.uniform(0.3, 2)) ** 2))
            phi = rng.normal() * np.exp(-((r / rng.uniform(0.3, 4)) ** 2))
            eps = 1e-5 * max(scale, 0.1)
            fd = (eval_J(u + eps * phi, ctx3) - eval_J(u - eps * phi, ctx3)) / (2 * eps)
            exact = dJ(u, phi, ctx3)
            worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-12))
    a = rng.normal(size=r.size) * np.exp(-r)
    b = rng.normal(size=r.size) * np.exp(-r)
    lin = abs(j3(2.5 * a - 1.5 * b, ctx3) - (2.5 * j3(a, ctx3) - 1.5 * j3(b, ctx3)))
    lin /= max(abs(j3(a, ctx3)), abs(j3(b, ctx3)))
    at_zero = eval_J(np.zeros(r.size), ctx3)
    ok = worst < 1e-5 and lin <= 1e-12 and at_zero == 0.0
    verdict("K11", ok, f"max relative FD error {worst:.1e}, J3 linearity {lin:.1e}, J[0]={at_zero!r}")
    assert ok


def test_k12_sweep_trends(grid3):
    ladder = sorted(DEFAULT_LADDER)
    n = 3
    alpha = (n - 6) / 2
    rho = choose_rho(n)
    spec = simple_problem(n, ladder[0])
    assert spec.alpha == alpha
    c = [c_np(n, p) for p in ladder]
    cd = [c_np(n, p) * d_p(n, p, alpha, rho) for p in ladder]
    defect = []
    for p in ladder:
        ctx = FunctionalContext(simple_problem(n, p), assemble_u0(n, p, grid3))
        defect.append(landscape_constants(ctx).C_p)
    increasing = lambda v: all(b > a for a, b in zip(v, v[1:]))  # noqa: E731
    c_ok = increasing(c) and c[0] < 0.1
    defect_ok = increasing(defect) and defect[0] < defect[-1] / 4
    cd_ok = increasing(cd) and cd[0] < 0.1 * cd[-1]
    ok = c_ok and defect_ok and cd_ok
    verdict("K12", ok, f"c_np {c[0]:.4f}..{c[-1]:.4f} ({'ok' if c_ok else 'bad'}), "
                       f"C_p {defect[0]:.4f}..{defect[-1]:.4f} ({'ok' if defect_ok else 'bad'}), "
                       f"c_np D(p) {cd[0]:.4f}..{cd[-1]:.4f} ({'ok' if cd_ok else 'bad'}; "
                       f"sqrt(2 pi)={math.sqrt(2 * math.pi):.4f})")
    assert ok, ("c_np D(p) stays near sqrt(2 pi) as p decreases to the left end, so it does not tend to 0; "
                "this failure is genuine, not numerical")


def test_k13_determinism(tmp_path):
    config = {"problem": {"n": 3, "p": 3.05, "V": {"kind": "const", "params": {"value": 1.0}},
                          "Gamma": {"kind": "const", "params": {"value": 1.0}}},
              "seed": 7, "grid": {"per_decade": 80}, "sphere_directions": 40}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "singular_nls.cli", "construct", "--config", str(path),
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode in (0, 1), proc.stderr
        blobs.append((out / "report.json").read_bytes())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    verdict("K13", ok, f"two construct runs, report.json {len(blobs[0])} bytes, identical={blobs[0] == blobs[1]}")
    assert ok
