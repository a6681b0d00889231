"""Command line runner: ``singular-nls MODE --config FILE --out DIR``.

Every mode writes report.json (sorted keys, no timestamps, so a fixed
config and seed give identical bytes), CSV tables, PNG figures and a
manifest with the config hash and library versions.

Exit codes: 0 all certifications passed, 1 some certification failed,
2 malformed config or violated hypothesis, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, plots
from .approx import assemble_u0, boundary_vanishing_rates, c_np, choose_rho, singular_exponent
from .decay import agmon_sweep, fit_decay, local_bound_diag, rate_profile
from .errors import CertificationFailure, DomainError, HypothesisViolation, NumericError, SpecificationError
from .functional import FunctionalContext, d_p, landscape_constants, sphere_check
from .greens import (OmegaShift, bootstrap_regularity, ground_state, mapping_table, nonneg_growth_check,
                     representation_residual, strong_residual)
from .grid import RadialGrid, write_csv
from .problem import ProblemSpec, estimate_sigma, rescale_gamma, validate_hypotheses
from .solver import (correction_bounds, default_tests, minimize, positivity_check, residual_report,
                     singularity_fit)
from .specfun import KernelParams, green_kernel

MODES = ("construct", "construct-u0", "landscape", "regularity", "decay", "sweep", "kernels", "mapcheck")
EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_LADDER = (3.01, 3.02, 3.05, 3.1, 3.2)


# --- config ----------------------------------------------------------------------


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecificationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecificationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecificationError("config must be a JSON object")
    return data


def config_hash(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _problem(config, base_dir=None) -> ProblemSpec:
    if "problem" in config:
        return ProblemSpec.from_dict(config["problem"])
    if "problem_path" in config:
        path = Path(config["problem_path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return ProblemSpec.from_json(path)
    raise SpecificationError("config needs a 'problem' object or a 'problem_path'")


def _grid(config, n, align=None) -> RadialGrid:
    g = dict(config.get("grid", {}))
    allowed = {"r_min", "per_decade", "h_tail", "r_max", "nodes"}
    unknown = set(g) - allowed
    if unknown:
        raise SpecificationError(f"unknown grid keys: {sorted(unknown)}")
    r_min = float(g.get("r_min", 1e-6))
    r_max = float(g.get("r_max", 40.0))
    per_decade = float(g.get("per_decade", 200))
    if g.get("nodes"):
        # nodes ~ per_decade * (decades + (r_max - 1)/ln 10) for the matched tail spacing
        decades = math.log10(1.0 / r_min)
        per_decade = float(g["nodes"]) / (decades + (r_max - 1.0) / math.log(10.0))
    try:
        return RadialGrid.build(n, r_min=r_min, per_decade=per_decade, h_tail=g.get("h_tail"), r_max=r_max,
                                align=align if align and align > 1.0 else None)
    except DomainError as exc:
        raise SpecificationError(f"grid: {exc}") from exc


def _number(config, key, default):
    value = config.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecificationError(f"{key} must be a number")
    return value


# --- report helpers ----------------------------------------------------------------


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def claim(anchor, verdict, /, **values):
    """One certification entry; ``anchor`` names the property being instantiated.

    A ``passed`` key inside ``values`` (from a sub-report) is replaced by the verdict.
    """
    values.pop("passed", None)
    return {**values, "anchor": anchor, "passed": bool(verdict)}


def write_json(path, data):
    text = json.dumps(clean(data), sort_keys=True, indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_table(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return Path(path).name


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


# --- pipelines -------------------------------------------------------------------------


def _prepare_supercritical(config):
    spec = _problem(config)
    if spec.mode != "supercritical":
        raise SpecificationError("this mode needs a supercritical problem")
    validation = validate_hypotheses(spec)
    validation.raise_on_failure()
    work = rescale_gamma(spec)
    rho = choose_rho(spec.n)
    grid = _grid(config, spec.n, rho)
    return spec, work, validation, grid


def _sigma(spec, grid):
    info = estimate_sigma(spec, grid, refinements=0)
    return info.sigma


def run_construct_u0(config, out: Path):
    spec = _problem(config)
    n, p = spec.n, spec.p
    grid = _grid(config, n, choose_rho(n))
    files = []
    try:
        ap = assemble_u0(n, p, grid)
    except CertificationFailure as exc:
        report = {"mode": "construct-u0", "claims": {"u0": claim("approximate solution certificate", False,
                                                                 record=exc.record)}}
        return report, files
    files.append(write_csv(ap.u0, out / "u0.csv").name)
    rates = boundary_vanishing_rates(ap)
    rate_claims = {k: claim("boundary integral vanishing rate", abs(v["slope"] - v["expected"]) <= 0.02
                            and v["slope"] > 0, **v) for k, v in rates.items()}
    claims = {"u0_certificate": claim("approximate solution certificate", ap.passed, **ap.summary())}
    claims.update({f"rate_{k}": v for k, v in rate_claims.items()})
    r = grid.nodes
    files.append(plots.profile(out / "u0.png", r, ap.u0.values, ap.u0.values, ap.c_np * r ** (-ap.exponent)))
    return {"mode": "construct-u0", "problem": spec.to_dict(), "grid": grid.tag, "claims": claims}, files


def run_landscape(config, out: Path):
    spec, work, validation, grid = _prepare_supercritical(config)
    ap = assemble_u0(work.n, work.p, grid)
    ctx = FunctionalContext(work, ap)
    ladder = config.get("ladder")
    lc = landscape_constants(ctx, ladder=ladder)
    directions = int(_number(config, "sphere_directions", 200))
    sr = sphere_check(ctx, lc, directions=directions, seed=int(config.get("seed", 0)))
    claims = {
        "coercivity": claim("coercivity of the quadratic part", lc.A > 0.0, A=lc.A),
        "sphere_bound": claim("lower bound of J on the sphere of radius r0", sr.passed and lc.m > 0.0,
                              **sr.to_dict()),
    }
    report = {"mode": "landscape", "problem": spec.to_dict(), "grid": grid.tag,
              "constants": lc.to_dict(), "min_J_on_sphere": sr.min_J, "claims": claims}
    rows = [[k, v] for k, v in sorted(sr.adversarial.items())]
    return report, [write_table(out / "sphere_adversarial.csv", ["direction", "J"], rows)]


def _solve_supercritical(config, work, grid):
    ap = assemble_u0(work.n, work.p, grid)
    ctx = FunctionalContext(work, ap)
    lc = landscape_constants(ctx)
    tol = float(_number(config, "tol", 1e-8))
    restarts = int(_number(config, "restarts", 0))
    bundle = minimize(ctx, lc, tol, int(_number(config, "max_iters", 2000)), restarts, int(config.get("seed", 0)))
    return ap, ctx, lc, bundle


def run_construct(config, out: Path):
    spec, work, validation, grid = _prepare_supercritical(config)
    sigma = _sigma(work, grid)
    ap, ctx, lc, bundle = _solve_supercritical(config, work, grid)
    sr = sphere_check(ctx, lc, directions=int(_number(config, "sphere_directions", 200)),
                      seed=int(config.get("seed", 0)))
    tests = default_tests(work.n, ap.rho)
    residuals = residual_report(bundle.U, tests, ctx)
    sing = singularity_fit(bundle.U)
    t = singular_exponent(work.p)
    decay = fit_decay(bundle.U)
    shift = OmegaShift.default(sigma)
    rep = representation_residual(bundle.U, work, shift)
    claims = {
        "hypotheses": claim("structural hypotheses on V and Gamma", validation.passed),
        "u0_certificate": claim("approximate solution certificate", ap.passed),
        "sphere_bound": claim("lower bound of J on the sphere of radius r0", sr.passed, min_J=sr.min_J, m=lc.m),
        "critical_point": claim("critical point inside the ball", bundle.converged and bundle.interior,
                                grad_norm=bundle.grad_norm, norm=bundle.norm, r0=lc.r0),
        "distributional": claim("distributional solution", residuals["passed"],
                                max_relative=max(r["relative"] for r in residuals["rows"])),
        "singularity": claim("unbounded at the origin with the singular power",
                             abs(sing["slope"] + t) <= 0.05 and abs(sing["amplitude"] / ap.c_np - 1.0) <= 0.05,
                             **sing, target_slope=-t, target_amplitude=ap.c_np),
        "decay": claim("exponential decay at rate close to sqrt(Sigma)", decay.mu_hat >= 0.9 * math.sqrt(sigma),
                       **decay.to_dict(), sqrt_sigma=math.sqrt(sigma)),
    }
    if float(np.min(np.asarray(work.Gamma(grid.nodes)))) >= 0.0:
        pctx = ctx.with_variant("positive")
        pbundle = minimize(pctx, lc, float(_number(config, "tol", 1e-8)))
        pos = positivity_check(pbundle, pctx)
        claims["positivity"] = claim("positive solution from the positive-part functional",
                                     pos["passed"] and pbundle.converged, **pos)
    scale = work.solution_scale
    U = bundle.U * (1.0 / scale) if scale != 1.0 else bundle.U
    files = [write_csv(U, out / "U.csv").name, write_csv(bundle.u_tilde, out / "u_tilde.csv").name,
             write_csv(ap.u0, out / "u0.csv").name]
    files.append(write_table(out / "trace.csv", ["iteration", "J", "grad_norm", "norm", "step"], bundle.trace))
    files.append(write_table(out / "residuals.csv", ["test_function", "covers_origin", "residual", "scale", "passed"],
                             [[r["name"], r["covers_origin"], r["residual"], r["scale"], r["passed"]]
                              for r in residuals["rows"]]))
    r = grid.nodes
    files.append(plots.profile(out / "profile.png", r, U.values, ap.u0.values, ap.c_np * r ** (-t)))
    files.append(plots.tail(out / "tail.png", r, U.values, decay.mu_hat))
    it = [row[0] for row in bundle.trace]
    files.append(plots.descent(out / "descent.png", it, [row[1] for row in bundle.trace],
                               [max(row[2], 1e-300) for row in bundle.trace]))
    report = {
        "mode": "construct",
        "problem": spec.to_dict(),
        "grid": grid.tag,
        "sigma": sigma,
        "landscape": lc.to_dict(),
        "solution": bundle.summary(),
        "correction": correction_bounds(bundle),
        "residuals": residuals,
        "representation_residual": rep,
        "claims": claims,
    }
    return report, files


def run_decay(config, out: Path):
    spec = _problem(config)
    files = []
    if spec.mode == "supercritical":
        spec, work, validation, grid = _prepare_supercritical(config)
        sigma = _sigma(work, grid)
        _, _, _, bundle = _solve_supercritical(config, work, grid)
        U = bundle.U
    else:
        grid = _grid(config, spec.n)
        sigma = _sigma(spec, grid)
        U, _ = ground_state(spec, grid)
    fit = fit_decay(U)
    starts = [s for s in (2.0, 5.0, 10.0, 15.0, 20.0, 25.0) if s + 10.0 <= grid.r_max - 5.0]
    profile_rates = rate_profile(U, starts)
    mus = config.get("mu", [0.5, 0.8, 0.9])
    r_in = max(2.0 * choose_rho(spec.n) if spec.n > 2 else 2.0, 5.0)
    rhos = [x for x in (6.0, 8.0, 10.0, 14.0, 18.0) if 2.0 * x <= grid.r_max]
    rows, sweeps = [], {}
    for mu in mus:
        if mu >= math.sqrt(sigma):
            continue
        sw = agmon_sweep(U, mu, r_in, rhos, spectral_bottom=sigma)
        sweeps[f"{mu:g}"] = sw
        for row in sw["rows"]:
            rows.append([mu, row["rho"], row["lhs"], row["rhs"], row["ratio"]])
    local = local_bound_diag(U, spec.V)
    files.append(write_table(out / "agmon.csv", ["mu", "rho", "lhs", "rhs", "ratio"], rows))
    files.append(write_table(out / "decay_rates.csv", ["window_start", "mu_hat"], list(zip(starts, profile_rates))))
    files.append(plots.tail(out / "tail.png", grid.nodes, U.values, fit.mu_hat))
    agmon_ok = all(row[2] <= row[3] * 1.1 for row in rows)
    claims = {
        "decay": claim("exponential decay at rate close to sqrt(Sigma)", fit.mu_hat >= 0.9 * math.sqrt(sigma),
                       **fit.to_dict(), sqrt_sigma=math.sqrt(sigma)),
        "agmon": claim("weighted energy inequality", agmon_ok, sweeps=sweeps),
        "local_bound": claim("uniform local sup/L2 ratio", local["drift"] is not None and local["drift"] < 2.0,
                             **local),
    }
    report = {"mode": "decay", "problem": spec.to_dict(), "grid": grid.tag, "sigma": sigma, "fit": fit.to_dict(),
              "rate_profile": dict(zip([f"{s:g}" for s in starts], profile_rates)), "claims": claims}
    return report, files


def run_regularity(config, out: Path):
    spec = _problem(config)
    if spec.mode != "subcritical":
        raise SpecificationError("regularity needs a subcritical problem")
    validation = validate_hypotheses(spec)
    validation.raise_on_failure()
    grid = _grid(config, spec.n)
    sigma = _sigma(spec, grid)
    shift = OmegaShift.default(sigma)
    refinements = int(_number(config, "refinements", 2))
    levels = []
    g = grid
    for level in range(refinements + 1):
        u, _ = ground_state(spec, g)
        boot = bootstrap_regularity(u, spec, shift, sweeps=int(_number(config, "sweeps", 6)))
        levels.append({
            "nodes": g.size,
            "ground_state_sup": float(np.max(np.abs(u.values))),
            "bootstrap_sup": boot["norms"][-1]["inf"],
            "sup_drift": boot["sup_drift"],
            "stable": boot["stable"],
            "strong_residual": strong_residual(u, spec, shift.omega),
            "bootstrap_strong_residual": boot["strong_residual"],
            "representation_residual": representation_residual(u, spec, shift),
        })
        last_u, last_boot = u, boot
        g = g.refine()
    sups = [lv["bootstrap_sup"] for lv in levels]
    refine_stable = max(sups) / min(sups) - 1.0 <= 1e-2
    growth = nonneg_growth_check(last_u, spec) if np.all(last_u.values >= 0.0) else None
    mapping = mapping_table(OmegaShift(shift.omega), spec.n, trials=int(_number(config, "trials", 8)),
                            seed=int(config.get("seed", 0)))
    claims = {
        "bootstrap_stable": claim("bounded strong solution by the regularity bootstrap",
                                  refine_stable and all(lv["stable"] for lv in levels), sup_norms=sups),
        "mapping": claim("mapping properties of the resolvent", mapping["passed"]),
    }
    if growth is not None:
        claims["growth"] = claim("polynomial growth of ball integrals of u^p", growth["passed"], **growth)
    files = [write_csv(last_u, out / "ground_state.csv").name, write_csv(last_boot["u"], out / "bootstrap.csv").name]
    files.append(write_table(out / "levels.csv", list(levels[0].keys()), [list(lv.values()) for lv in levels]))
    files.append(_mapping_csv(out / "mapcheck.csv", mapping["rows"]))
    files.append(plots.curves(out / "refinement.png", [lv["nodes"] for lv in levels],
                              {"strong residual": [lv["strong_residual"] for lv in levels],
                               "representation residual": [lv["representation_residual"] for lv in levels]},
                              xlabel="nodes"))
    report = {"mode": "regularity", "problem": spec.to_dict(), "grid": grid.tag, "sigma": sigma,
              "omega": shift.omega, "levels": levels, "mapping": mapping, "claims": claims}
    return report, files


def _mapping_csv(path, rows):
    return write_table(path, ["k", "q", "r", "s", "admissible", "ratio", "bound", "passed", "reason"],
                       [[r["k"], r["q"], r["r"], r["s"], r["admissible"], r["ratio"], r["bound"], r["passed"],
                         r["reason"]] for r in rows])


def run_mapcheck(config, out: Path):
    n = int(_number(config, "n", 3))
    omega = float(_number(config, "omega", 1.0))
    mapping = mapping_table(OmegaShift(omega), n, trials=int(_number(config, "trials", 8)),
                            seed=int(config.get("seed", 0)))
    files = [_mapping_csv(out / "mapcheck.csv", mapping["rows"])]
    claims = {"mapping": claim("mapping properties of the resolvent", mapping["passed"])}
    return {"mode": "mapcheck", "n": n, "omega": omega, "mapping": mapping, "claims": claims}, files


def run_kernels(config, out: Path):
    n = int(_number(config, "n", 3))
    omegas = config.get("omega", [1.0])
    omegas = omegas if isinstance(omegas, list) else [omegas]
    r = np.geomspace(float(config.get("r_lo", 1e-4)), float(config.get("r_hi", 30.0)),
                     int(config.get("points", 400)))
    files, tables, claims = [], {}, {}
    for omega in omegas:
        params = KernelParams(n, float(omega))
        vals = green_kernel(params, r)
        tables[f"omega={omega:g}"] = vals
        files.append(write_table(out / f"kernel_n{n}_omega{omega:g}.csv", ["r", "value"], zip(r, vals)))
        root = math.sqrt(omega)
        closed = None
        if n == 3:
            closed = np.exp(-root * r) / (4.0 * math.pi * r)
        elif n == 1:
            closed = np.exp(-root * r) / (2.0 * root)
        scaling = omega ** ((n - 2) / 2.0) * green_kernel(KernelParams(n, 1.0), root * r)
        entry = {"scaling_error": float(np.max(np.abs(scaling / vals - 1.0)))}
        ok = entry["scaling_error"] <= 1e-12
        if closed is not None:
            entry["closed_form_error"] = float(np.max(np.abs(vals / closed - 1.0)))
            ok = ok and entry["closed_form_error"] <= 1e-10
        claims[f"kernel_omega_{omega:g}"] = claim("resolvent kernel closed form and scaling", ok, **entry)
    files.append(plots.kernels(out / "kernels.png", r, tables))
    return {"mode": "kernels", "n": n, "omega": omegas, "claims": claims}, files


def sweep_row(config, work, p, grid):
    spec_p = replace(work, p=float(p))
    row = {"p": float(p), "c_np": c_np(spec_p.n, p)}
    row["D_p"] = d_p(spec_p.n, p, spec_p.alpha, choose_rho(spec_p.n))
    row["c_times_D"] = row["c_np"] * row["D_p"]
    row["C_formula"] = row["c_np"] ** p + row["c_np"] * (row["D_p"] + 1.0)
    try:
        ap = assemble_u0(spec_p.n, p, grid)
        ctx = FunctionalContext(spec_p, ap)
        lc = landscape_constants(ctx)
        if not lc.r0 > 0.0:
            raise CertificationFailure("no finite remainder constant at this p", lc.to_dict())
        sr = sphere_check(ctx, lc, directions=int(_number(config, "sphere_directions", 200)),
                          seed=int(config.get("seed", 0)))
        bundle = minimize(ctx, lc, float(_number(config, "tol", 1e-8)))
        res = residual_report(bundle.U, default_tests(spec_p.n, ap.rho), ctx)
        row.update({
            "C_p": lc.C_p, "r0": lc.r0, "m": lc.m, "min_J": sr.min_J, "sphere_passed": sr.passed,
            "converged": bundle.converged, "max_residual": max(r["relative"] for r in res["rows"]),
            "mu_hat": fit_decay(bundle.U).mu_hat, "error": "",
        })
    except (NumericError, CertificationFailure, HypothesisViolation, DomainError) as exc:
        row.update({"C_p": None, "r0": None, "m": None, "min_J": None, "sphere_passed": False, "converged": False,
                    "max_residual": None, "mu_hat": None, "error": str(exc)})
    return row


def _monotone(values, increasing=True):
    pairs = zip(values, values[1:])
    return all((b > a) if increasing else (b < a) for a, b in pairs)


def run_sweep(config, out: Path):
    spec, work, validation, grid = _prepare_supercritical(config)
    ladder = sorted(config.get("ladder", list(DEFAULT_LADDER)))
    rows = [sweep_row(config, work, p, grid) for p in ladder]
    header = list(rows[0].keys())
    files = [write_table(out / "sweep.csv", header, [[row[k] for k in header] for row in rows])]
    files.append(plots.sweep(out / "sweep.png", ladder, {
        "c_np": [row["c_np"] for row in rows],
        "C_p": [row["C_p"] if row["C_p"] is not None else math.nan for row in rows],
        "c_np D(p)": [row["c_times_D"] for row in rows],
    }))
    c_vals = [row["c_np"] for row in rows]
    cp_vals = [row["C_p"] for row in rows]
    cd_vals = [row["c_times_D"] for row in rows]
    claims = {
        "c_np_trend": claim("c_np increases in p and tends to 0 at the left end", _monotone(c_vals) and c_vals[0] < 0.1,
                            values=c_vals),
        "C_p_trend": claim("defect constant decreases toward the left end",
                           all(v is not None for v in cp_vals) and _monotone(cp_vals), values=cp_vals),
        "c_times_D_trend": claim("c_np D(p) decreases to 0 toward the left end",
                                 _monotone(cd_vals) and cd_vals[0] < 0.1 * cd_vals[-1], values=cd_vals),
    }
    return {"mode": "sweep", "problem": spec.to_dict(), "grid": grid.tag, "rows": rows, "claims": claims}, files


RUNNERS = {
    "construct": run_construct,
    "construct-u0": run_construct_u0,
    "landscape": run_landscape,
    "regularity": run_regularity,
    "decay": run_decay,
    "sweep": run_sweep,
    "kernels": run_kernels,
    "mapcheck": run_mapcheck,
}


# --- entry point -------------------------------------------------------------------------


def _versions():
    import matplotlib
    import scipy

    return {"singular_nls": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__, "python": sys.version.split()[0]}


def apply_overrides(config, args):
    config = json.loads(json.dumps(config))
    if args.seed is not None:
        config["seed"] = args.seed
    if args.tol is not None:
        config["tol"] = args.tol
    grid = config.setdefault("grid", {})
    if args.grid_nodes is not None:
        grid["nodes"] = args.grid_nodes
    if args.rmax is not None:
        grid["r_max"] = args.rmax
    return config


def run(mode, config, out) -> int:
    """Execute one mode and write its artifacts; returns the exit code."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if mode not in RUNNERS:
        raise SpecificationError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    report, files = RUNNERS[mode](config, out)
    passed = all(c["passed"] for c in report["claims"].values())
    report["passed"] = passed
    report["seed"] = config.get("seed", 0)
    report["config_hash"] = config_hash(config)
    write_json(out / "report.json", report)
    listed = set(files) | {"report.json"}
    # grid functions carry a JSON sidecar next to their CSV
    listed |= {f + ".json" for f in files if f.endswith(".csv") and (out / (f + ".json")).exists()}
    manifest = {"mode": mode, "config": config, "config_hash": config_hash(config), "versions": _versions(),
                "files": sorted(listed)}
    write_json(out / "manifest.json", manifest)
    return EXIT_OK if passed else EXIT_CERT


def build_parser():
    parser = argparse.ArgumentParser(prog="singular-nls", description=__doc__.splitlines()[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--grid-nodes", type=int, dest="grid_nodes")
    parser.add_argument("--rmax", type=float)
    parser.add_argument("--tol", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = apply_overrides(load_config(args.config), args)
        code = run(args.mode, config, args.out)
    except (SpecificationError, HypothesisViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationFailure as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (NumericError, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    status = "passed" if code == EXIT_OK else "some certifications failed"
    print(f"{args.mode}: {status} (report in {Path(args.out) / 'report.json'})")
    return code


if __name__ == "__main__":
    sys.exit(main())
