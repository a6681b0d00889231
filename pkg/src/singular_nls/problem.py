"""Problem descriptions: radial potentials, weights and nonlinearities.

A problem is the stationary equation -Lap u + V u = g(x, u) on R^n with
radial V and Gamma, by default g(x, s) = Gamma(x) |s|^(p-1) s.  This module
parses JSON descriptions, checks the structural assumptions on V and Gamma
near the origin, estimates the bottom of the spectrum of -Lap + V and
computes Kato-class norms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import integrate as _sp_integrate
from scipy import special as _sp_special

from .errors import DomainError, HypothesisViolation, SpecificationError
from .grid import RadialGrid
from .linalg import form_matrix, lowest_eigenpair
from .specfun import sphere_area

MODES = ("supercritical", "subcritical")


# --- radial descriptors --------------------------------------------------------

_REQUIRED = {
    "const": ("value",),
    "power": ("coef", "exponent"),
    "exp": ("coef", "rate"),
    "gaussian": ("coef", "width"),
    "bump": ("coef", "radius"),
    "indicator": ("value", "inner", "outer"),
    "window": ("inner", "outer", "term"),
    "scaled": ("factor", "term"),
    "sum": ("terms",),
}


def _number(params, key, kind):
    value = params[key]
    if isinstance(value, str) and value in ("inf", "+inf", "Infinity"):
        return math.inf
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SpecificationError(f"{kind}.{key} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class Radial:
    """Piecewise-analytic radial function f(|x|) built from a few primitives.

    Kinds and parameters:
      const {value}, power {coef, exponent} (coef r^exponent),
      exp {coef, rate} (coef e^{-rate r}), gaussian {coef, width},
      bump {coef, radius, power=4} (coef (1 - r^2/radius^2)_+^power),
      indicator {value, inner, outer} (value on inner <= r < outer),
      window {inner, outer, term}, scaled {factor, term}, sum {terms}.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _REQUIRED:
            raise SpecificationError(f"unknown radial descriptor kind {self.kind!r}")
        if not isinstance(self.params, dict):
            raise SpecificationError(f"params of {self.kind} must be a mapping")
        missing = [k for k in _REQUIRED[self.kind] if k not in self.params]
        if missing:
            raise SpecificationError(f"{self.kind} descriptor is missing {', '.join(missing)}")
        params = dict(self.params)
        if self.kind in ("window", "scaled"):
            params["term"] = _as_radial(params["term"])
        if self.kind == "sum":
            if not isinstance(params["terms"], (list, tuple)) or not params["terms"]:
                raise SpecificationError("sum descriptor needs a non-empty list of terms")
            params["terms"] = tuple(_as_radial(t) for t in params["terms"])
        for key in _REQUIRED[self.kind]:
            if key not in ("term", "terms"):
                params[key] = _number(params, key, self.kind)
        if self.kind == "bump":
            params["power"] = _number(params, "power", "bump") if "power" in params else 4.0
            if params["radius"] <= 0.0:
                raise SpecificationError("bump radius must be positive")
        if self.kind == "gaussian" and params["width"] <= 0.0:
            raise SpecificationError("gaussian width must be positive")
        if self.kind in ("indicator", "window") and not params["inner"] < params["outer"]:
            raise SpecificationError(f"{self.kind} needs inner < outer")
        object.__setattr__(self, "params", params)

    @classmethod
    def from_dict(cls, data) -> "Radial":
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return cls("const", {"value": float(data)})
        if not isinstance(data, dict) or "kind" not in data:
            raise SpecificationError(f"radial descriptor must be a mapping with 'kind', got {data!r}")
        return cls(data["kind"], dict(data.get("params", {})))

    def to_dict(self):
        out = {}
        for key, value in self.params.items():
            if isinstance(value, Radial):
                out[key] = value.to_dict()
            elif isinstance(value, tuple):
                out[key] = [t.to_dict() for t in value]
            elif isinstance(value, float) and math.isinf(value):
                out[key] = "inf"
            else:
                out[key] = value
        return {"kind": self.kind, "params": out}

    def __call__(self, r):
        r = np.asarray(r, float)
        p = self.params
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.kind == "const":
                return np.full(r.shape, p["value"])
            if self.kind == "power":
                if p["coef"] == 0.0:
                    return np.zeros(r.shape)
                return p["coef"] * np.power(r, p["exponent"])
            if self.kind == "exp":
                return p["coef"] * np.exp(-p["rate"] * r)
            if self.kind == "gaussian":
                return p["coef"] * np.exp(-((r / p["width"]) ** 2))
            if self.kind == "bump":
                t = np.clip(1.0 - (r / p["radius"]) ** 2, 0.0, None)
                return p["coef"] * t ** p["power"]
            if self.kind == "indicator":
                return np.where((r >= p["inner"]) & (r < p["outer"]), p["value"], 0.0)
            if self.kind == "window":
                inside = (r >= p["inner"]) & (r < p["outer"])
                return np.where(inside, p["term"](np.where(inside, r, 1.0)), 0.0)
            if self.kind == "scaled":
                return p["factor"] * p["term"](r)
            return sum(t(r) for t in p["terms"])

    def at_origin(self) -> float:
        return float(self(np.array([0.0]))[0])

    def scaled(self, factor) -> "Radial":
        return Radial("scaled", {"factor": float(factor), "term": self})

    def origin_exponent(self) -> float:
        """Most singular power active at r -> 0 (0 for bounded descriptors)."""
        p = self.params
        if self.kind == "power":
            return min(p["exponent"], 0.0) if p["coef"] != 0.0 else 0.0
        if self.kind == "window":
            return p["term"].origin_exponent() if p["inner"] <= 0.0 else 0.0
        if self.kind == "scaled":
            return p["term"].origin_exponent() if p["factor"] != 0.0 else 0.0
        if self.kind == "sum":
            return min(t.origin_exponent() for t in p["terms"])
        return 0.0

    def growth_at_infinity(self) -> float:
        """Polynomial growth exponent as r -> infinity (<= 0 means bounded)."""
        p = self.params
        if self.kind == "power":
            return p["exponent"] if p["coef"] != 0.0 else 0.0
        if self.kind == "exp":
            return math.inf if p["rate"] < 0.0 and p["coef"] != 0.0 else 0.0
        if self.kind in ("indicator", "window"):
            if math.isfinite(p["outer"]):
                return 0.0
            return p["term"].growth_at_infinity() if self.kind == "window" else 0.0
        if self.kind == "scaled":
            return p["term"].growth_at_infinity() if p["factor"] != 0.0 else 0.0
        if self.kind == "sum":
            return max(t.growth_at_infinity() for t in p["terms"])
        return 0.0

    def breakpoints(self):
        """Radii where the descriptor may fail to be smooth."""
        p = self.params
        pts = set()
        if self.kind in ("indicator", "window"):
            pts.update(x for x in (p["inner"], p["outer"]) if 0.0 < x < math.inf)
        if self.kind == "bump":
            pts.add(p["radius"])
        if self.kind in ("window", "scaled"):
            pts.update(p["term"].breakpoints())
        if self.kind == "sum":
            for t in p["terms"]:
                pts.update(t.breakpoints())
        return sorted(pts)


def _as_radial(obj) -> Radial:
    return obj if isinstance(obj, Radial) else Radial.from_dict(obj)


def constant(value) -> Radial:
    return Radial("const", {"value": float(value)})


# --- nonlinearities -------------------------------------------------------------

_G_KINDS = ("gamma_power", "power", "power_minus_const", "linear")


@dataclass(frozen=True)
class Nonlinearity:
    """g(x, s) with declared growth constants C3..C6.

    gamma_power: Gamma(|x|) |s|^(p-1) s (the default), power: coef |s|^(p-1) s,
    power_minus_const: s^p - shift for s >= 0, linear: coef * s.
    """

    kind: str = "gamma_power"
    params: dict = field(default_factory=dict)
    C3: float | None = None
    C4: float | None = None
    C5: float | None = None
    C6: float | None = None

    def __post_init__(self):
        if self.kind not in _G_KINDS:
            raise SpecificationError(f"unknown nonlinearity kind {self.kind!r}")

    @classmethod
    def from_dict(cls, data) -> "Nonlinearity":
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise SpecificationError("g must be a mapping")
        consts = {}
        for key in ("C3", "C4", "C5", "C6"):
            if data.get(key) is not None:
                consts[key] = _number(data, key, "g")
        return cls(data.get("kind", "gamma_power"), dict(data.get("params", {})), **consts)

    def to_dict(self):
        out = {"kind": self.kind, "params": dict(self.params)}
        for key in ("C3", "C4", "C5", "C6"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    def __call__(self, r, s, p, gamma: Radial):
        s = np.asarray(s, float)
        odd_power = np.abs(s) ** (p - 1.0) * s
        if self.kind == "gamma_power":
            return gamma(r) * odd_power
        if self.kind == "power":
            return float(self.params.get("coef", 1.0)) * odd_power
        if self.kind == "power_minus_const":
            return np.abs(s) ** p - float(self.params.get("shift", 1.0))
        return float(self.params.get("coef", 1.0)) * s

    def derivative(self, r, s, p, gamma: Radial):
        """d g / d s."""
        s = np.asarray(s, float)
        dpow = p * np.abs(s) ** (p - 1.0)
        if self.kind == "gamma_power":
            return gamma(r) * dpow
        if self.kind == "power":
            return float(self.params.get("coef", 1.0)) * dpow
        if self.kind == "power_minus_const":
            return p * np.abs(s) ** (p - 1.0) * np.sign(s)
        return np.full(np.broadcast(np.asarray(r), s).shape, float(self.params.get("coef", 1.0)))


# --- problem specification ------------------------------------------------------


def exponent_window(n: int, mode: str):
    """Open interval of admissible p for the given pipeline."""
    if mode == "supercritical":
        if n < 3:
            raise SpecificationError("the supercritical pipeline needs n >= 3")
        return n / (n - 2.0), (n + 2.0) / (n - 2.0)
    if mode == "subcritical":
        return 1.0, (n / (n - 2.0) if n > 2 else math.inf)
    raise SpecificationError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    p: float
    mode: str
    V: Radial
    Gamma: Radial
    alpha: float
    C1: float
    beta: float
    C2: float
    gamma0: float
    g: Nonlinearity = field(default_factory=Nonlinearity)
    sigma: float | None = None
    # u_original = u_rescaled / solution_scale after rescale_gamma
    solution_scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise SpecificationError(f"n must be a positive integer, got {self.n!r}")
        if not math.isfinite(self.p) or self.p <= 1.0:
            raise SpecificationError(f"p must be a finite number > 1, got {self.p!r}")
        exponent_window(self.n, self.mode)

    @classmethod
    def from_dict(cls, data) -> "ProblemSpec":
        if not isinstance(data, dict):
            raise SpecificationError("problem description must be a JSON object")
        for key in ("n", "p", "V", "Gamma"):
            if key not in data:
                raise SpecificationError(f"problem description is missing {key!r}")
        Vd, Gd = data["V"], data["Gamma"]
        if not isinstance(Vd, dict) or not isinstance(Gd, dict):
            raise SpecificationError("V and Gamma must be mappings")
        V = Radial.from_dict(Vd)
        Gamma = Radial.from_dict(Gd)
        n = data["n"]
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        gamma0 = _number(Gd, "gamma0", "Gamma") if "gamma0" in Gd else Gamma.at_origin()
        try:
            p = float(data["p"])
        except (TypeError, ValueError) as exc:
            raise SpecificationError(f"p must be a number, got {data['p']!r}") from exc
        return cls(
            n=n,
            p=p,
            mode=data.get("mode", "supercritical"),
            V=V,
            Gamma=Gamma,
            alpha=_number(Vd, "alpha", "V") if "alpha" in Vd else (n - 6) / 2.0,
            C1=_number(Vd, "C1", "V") if "C1" in Vd else math.inf,
            beta=_number(Gd, "beta", "Gamma") if "beta" in Gd else math.inf,
            C2=_number(Gd, "C2", "Gamma") if "C2" in Gd else 0.0,
            gamma0=gamma0,
            g=Nonlinearity.from_dict(data.get("g")),
            sigma=float(data["sigma"]) if data.get("sigma") is not None else None,
        )

    @classmethod
    def from_json(cls, path) -> "ProblemSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecificationError(f"cannot read problem file {path}: {exc}") from exc
        return cls.from_dict(data.get("problem", data))

    def to_dict(self):
        V = self.V.to_dict()
        V.update(alpha=self.alpha, C1=_finite_or_str(self.C1))
        G = self.Gamma.to_dict()
        G.update(beta=_finite_or_str(self.beta), C2=self.C2, gamma0=self.gamma0)
        return {
            "n": self.n,
            "p": self.p,
            "mode": self.mode,
            "V": V,
            "Gamma": G,
            "g": self.g.to_dict(),
            "sigma": self.sigma,
            "solution_scale": self.solution_scale,
        }

    def potential(self, r):
        return self.V(r)

    def weight(self, r):
        return self.Gamma(r)

    def nonlinearity(self, r, s):
        return self.g(r, s, self.p, self.Gamma)


def _finite_or_str(x):
    return x if math.isfinite(x) else "inf"


def simple_problem(n, p, V=1.0, Gamma=1.0, mode="supercritical", alpha=None, g=None) -> ProblemSpec:
    """Constant-coefficient problem (or given descriptors) with tight constants."""
    Vd = _as_radial(V) if not isinstance(V, (int, float)) else constant(V)
    Gd = _as_radial(Gamma) if not isinstance(Gamma, (int, float)) else constant(Gamma)
    a = (n - 6) / 2.0 if alpha is None else float(alpha)
    return ProblemSpec(
        n=n,
        p=float(p),
        mode=mode,
        V=Vd,
        Gamma=Gd,
        alpha=a,
        C1=math.inf,
        beta=math.inf,
        C2=0.0,
        gamma0=Gd.at_origin(),
        g=g or Nonlinearity(),
    )


# --- hypothesis validation ------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "value": _finite_or_str(self.value) if isinstance(self.value, float) else self.value,
            "bound": _finite_or_str(self.bound) if isinstance(self.bound, float) else self.bound,
            "passed": bool(self.passed),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def raise_on_failure(self):
        bad = self.failed()
        if bad:
            raise HypothesisViolation(bad[0].name, bad[0].detail or f"{bad[0].value} vs {bad[0].bound}")


def validate_hypotheses(spec: ProblemSpec, samples=2000, exterior_radius=100.0) -> ValidationReport:
    """Sample V and Gamma and compare against the declared constants.

    Inside the unit ball the ratios |V|/r^alpha and |Gamma - Gamma(0)|/r^beta
    are checked against C1 and C2; outside it V must be bounded (sampled up
    to ``exterior_radius`` and by its analytic growth exponent).
    """
    n, p = spec.n, spec.p
    inside = np.geomspace(1e-8, 1.0, samples, endpoint=False)
    outside = np.linspace(1.0, exterior_radius, samples)
    checks = []

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        V_in = np.abs(spec.V(inside))
        ratio_v = float(np.max(V_in / inside**spec.alpha))
    if not np.all(np.isfinite(V_in)) or math.isnan(ratio_v):
        ratio_v = math.inf
    checks.append(Check("H1.alpha", spec.alpha, (n - 6) / 2.0, spec.alpha >= (n - 6) / 2.0,
                        "alpha must be at least (n-6)/2"))
    checks.append(Check("H1.C1", ratio_v, spec.C1, ratio_v <= spec.C1 * (1 + 1e-12),
                        "sup |V(r)|/r^alpha on the unit ball"))
    V_out = np.abs(spec.V(outside))
    bounded = spec.V.growth_at_infinity() <= 0.0 and bool(np.all(np.isfinite(V_out)))
    checks.append(Check("H1.exterior", float(np.max(V_out)) if bounded else math.inf, math.inf, bounded,
                        "V bounded outside the unit ball"))

    g0 = spec.gamma0
    checks.append(Check("H3.gamma0", g0, 0.0, g0 > 0.0, "Gamma(0) must be positive"))
    checks.append(Check("H3.beta", spec.beta, (n - 2) / 2.0, spec.beta > (n - 2) / 2.0,
                        "beta must exceed (n-2)/2"))
    dev = np.abs(spec.Gamma(inside) - g0)
    if math.isinf(spec.beta):
        ratio_g = 0.0 if np.all(dev <= 1e-14 * max(1.0, abs(g0))) else math.inf
    else:
        ratio_g = float(np.max(dev / inside**spec.beta))
    checks.append(Check("H3.C2", ratio_g, spec.C2, ratio_g <= spec.C2 * (1 + 1e-12) + 1e-300,
                        "sup |Gamma(r) - Gamma(0)|/r^beta on the unit ball"))
    G_all = spec.Gamma(np.concatenate([inside, outside]))
    gb = spec.Gamma.growth_at_infinity() <= 0.0 and bool(np.all(np.isfinite(G_all)))
    checks.append(Check("H3.bounded", float(np.max(np.abs(G_all))) if gb else math.inf, math.inf, gb,
                        "Gamma essentially bounded"))

    lo, hi = exponent_window(n, spec.mode)
    checks.append(Check("exponent", p, hi, lo < p < hi, f"{spec.mode} mode needs {lo:g} < p < {hi:g}"))
    if spec.sigma is not None:
        checks.append(Check("H2", spec.sigma, 0.0, spec.sigma > 0.0, "bottom of the spectrum must be positive"))
    return ValidationReport(tuple(checks))


def rescale_gamma(spec: ProblemSpec) -> ProblemSpec:
    """Normalize Gamma(0) to 1.

    If w solves the problem with Gamma/Gamma(0) then u = w / Gamma(0)^(1/(p-1))
    solves the original one; the factor is stored as ``solution_scale``.
    """
    g0 = spec.gamma0
    if not g0 > 0.0:
        raise HypothesisViolation("H3.gamma0", f"Gamma(0) = {g0} must be positive")
    if g0 == 1.0:
        return spec
    factor = g0 ** (1.0 / (spec.p - 1.0))
    return replace(
        spec,
        Gamma=spec.Gamma.scaled(1.0 / g0),
        C2=spec.C2 / g0,
        gamma0=1.0,
        solution_scale=spec.solution_scale * factor,
    )


# --- spectral bottom ------------------------------------------------------------


def schrodinger_pencil(grid: RadialGrid, potential):
    """Tridiagonal (diag, off) of int |u'|^2 + V u^2 dx and the lumped mass."""
    diag, off = form_matrix(grid, potential)
    return diag, off, grid.measure


@dataclass(frozen=True)
class SpectralInfo:
    sigma: float
    grid_tag: str
    refinements: tuple = ()
    extrapolated: float | None = None
    observed_order: float | None = None
    eigenvector: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "sigma": self.sigma,
            "grid_tag": self.grid_tag,
            "refinements": list(self.refinements),
            "extrapolated": self.extrapolated,
            "observed_order": self.observed_order,
        }


def _discrete_sigma(spec_or_V, grid):
    V = spec_or_V.V if isinstance(spec_or_V, ProblemSpec) else spec_or_V
    diag, off, mass = schrodinger_pencil(grid, V)
    value, vec, _ = lowest_eigenpair(diag, off, mass)
    return value, vec


def estimate_sigma(spec: ProblemSpec, grid: RadialGrid, refinements=2) -> SpectralInfo:
    """Bottom of the discrete radial spectrum of -Lap + V (natural end conditions).

    With ``refinements`` > 0 the grid is refined that many times and the
    last three values are Richardson-extrapolated assuming second order.
    """
    value, vec = _discrete_sigma(spec, grid)
    values = [value]
    g = grid
    for _ in range(refinements):
        g = g.refine()
        values.append(_discrete_sigma(spec, g)[0])
    extrapolated = order = None
    if len(values) >= 3:
        d1, d2 = values[-2] - values[-3], values[-1] - values[-2]
        extrapolated = values[-1] + d2 / 3.0
        if d1 != 0.0 and d2 != 0.0 and d1 / d2 > 0.0:
            order = math.log2(d1 / d2)
    return SpectralInfo(value, grid.tag, tuple(values), extrapolated, order, vec)


# --- Kato-class norms -----------------------------------------------------------


def _kernel(n, d):
    if n == 1:
        return np.ones_like(d)
    if n == 2:
        return -np.log(d)
    return d ** (2.0 - n)


def holder_constant(n, q):
    """c_q = || h_n ||_{L^{q'}(B_1)}, the constant of the Hoelder bound."""
    if q <= n / 2.0:
        raise DomainError(f"need q > n/2, got q={q}")
    if math.isinf(q):
        conj = 1.0
    else:
        conj = q / (q - 1.0)
    sigma = sphere_area(n)
    if n == 1:
        return 2.0 ** (1.0 / conj)
    if n == 2:
        return (2.0 * math.pi * math.gamma(conj + 1.0) / 2.0 ** (conj + 1.0)) ** (1.0 / conj)
    exponent = (2.0 - n) * conj + n
    return (sigma / exponent) ** (1.0 / conj)


def _sphere_kernel(n, a, s):
    """int over the sphere |y| = s of h_n(x - y) 1{|x-y| <= 1} dS(y) / s^(n-1), |x| = a."""
    if a == 0.0:
        return sphere_area(n) * float(_kernel(n, np.array([s]))[0]) if s <= 1.0 else 0.0
    lo, hi = abs(a - s), min(a + s, 1.0)
    if hi <= lo:
        return 0.0
    if n == 1:
        h = 0.0
        if abs(a - s) <= 1.0:
            h += 1.0
        if a + s <= 1.0:
            h += 1.0
        return h
    if n == 3:
        return 2.0 * math.pi * (hi - lo) / (a * s)
    # dS = sigma_{n-2} (1 - t^2)^{(n-3)/2} s^{n-1} dt and d dd = a s dt
    sig = sphere_area(n - 1)

    def f(d):
        t = (a * a + s * s - d * d) / (2.0 * a * s)
        return float(_kernel(n, np.array([d]))[0]) * max(1.0 - t * t, 0.0) ** ((n - 3) / 2.0) * d / (a * s)

    val, _ = _sp_integrate.quad(f, lo, hi, limit=100, epsabs=0.0, epsrel=1e-10)
    return sig * val


def _cap_fraction(n, a, s, t=1.0):
    """Area of {|y| = s, |x - y| <= t} divided by s^(n-1), |x| = a."""
    sigma = sphere_area(n)
    if a == 0.0 or s == 0.0:
        return sigma if s <= t else 0.0
    if n == 1:
        return float(abs(a - s) <= t) + float(a + s <= t)
    cos0 = (a * a + s * s - t * t) / (2.0 * a * s)
    if cos0 <= -1.0:
        return sigma
    if cos0 >= 1.0:
        return 0.0
    half = 0.5 * _sp_special.betainc((n - 1) / 2.0, 0.5, 1.0 - cos0 * cos0)
    frac = half if cos0 >= 0.0 else 1.0 - half
    return sigma * frac


def _radial_quad(func, lo, hi, points):
    inner = [x for x in points if lo < x < hi]
    val, _ = _sp_integrate.quad(func, lo, hi, points=inner or None, limit=400, epsabs=1e-14, epsrel=1e-10)
    return val


@dataclass(frozen=True)
class KatoReport:
    norm: float
    argmax_center: float
    divergent: bool
    q: float | None = None
    holder_rhs: float | None = None
    c_q: float | None = None
    centers: int = 0

    @property
    def inequality_holds(self):
        if self.holder_rhs is None:
            return None
        return self.norm <= self.holder_rhs * (1 + 1e-9)

    def to_dict(self):
        return {
            "norm": _finite_or_str(self.norm),
            "argmax_center": self.argmax_center,
            "divergent": self.divergent,
            "q": self.q,
            "holder_rhs": None if self.holder_rhs is None else _finite_or_str(self.holder_rhs),
            "c_q": self.c_q,
            "inequality_holds": self.inequality_holds,
        }


def kato_norm(W, n, domain=(0.0, math.inf), grid: RadialGrid | None = None, q=None, centers=64) -> KatoReport:
    """sup over centers |x| in the domain of int_{|x-y|<=1} h_n(x-y) |W 1_domain(y)| dy.

    ``W`` is a Radial descriptor (or a callable of r together with no
    singularity information).  Centers are taken from the grid radii inside
    the domain.  With ``q`` the Hoelder side c_q sup_y ||W||_{L^q(B_1(y))}
    is reported as well.
    """
    if n < 1:
        raise DomainError("dimension must be positive")
    inner, outer = float(domain[0]), float(domain[1])
    desc = _as_radial(W) if not callable(W) or isinstance(W, Radial) else None
    func = desc if desc is not None else W
    points = sorted(set((desc.breakpoints() if desc else []) + [inner, outer]) - {math.inf})

    # local integrability of h_n |W| at the origin
    if desc is not None and inner <= 0.0:
        e = desc.origin_exponent()
        limit = -1.0 if n == 1 else -2.0
        if e <= limit:
            return KatoReport(math.inf, 0.0, True, q)

    def absW(s):
        if s < inner or s >= outer:
            return 0.0
        return abs(float(func(np.array([s]))[0]))

    if grid is not None:
        radii = grid.nodes[(grid.nodes >= inner) & (grid.nodes <= min(outer, grid.r_max))]
        if len(radii) > centers:
            radii = radii[np.unique(np.linspace(0, len(radii) - 1, centers).round().astype(int))]
    else:
        top = min(outer, inner + 10.0)
        radii = np.linspace(inner, top, centers)
    if inner <= 0.0:
        radii = np.concatenate([[0.0], radii])

    def local(a, integrand):
        lo = max(0.0, a - 1.0)
        hi = a + 1.0
        pts = points + [a, abs(1.0 - a)]
        return _radial_quad(lambda s: integrand(a, s), lo, hi, pts)

    def kato_integrand(a, s):
        if s <= 0.0:
            return 0.0
        return absW(s) * s ** (n - 1) * _sphere_kernel(n, a, s)

    best, arg = -1.0, 0.0
    for a in radii:
        val = local(float(a), kato_integrand)
        if val > best:
            best, arg = val, float(a)

    rhs = cq = None
    if q is not None:
        cq = holder_constant(n, q)
        if math.isinf(q):
            samples = np.concatenate([np.geomspace(max(inner, 1e-8), 1.0, 400), np.linspace(max(inner, 1e-8), max(radii) + 1.0, 4000)])
            sup = max(abs(float(func(np.array([s]))[0])) for s in samples)
        else:
            def lq_integrand(a, s):
                if s <= 0.0:
                    return 0.0
                return abs(float(func(np.array([s]))[0])) ** q * s ** (n - 1) * _cap_fraction(n, a, s)

            sup = max(local(float(a), lq_integrand) for a in radii) ** (1.0 / q)
        rhs = cq * sup
    return KatoReport(best, arg, False, q, rhs, cq, len(radii))


# --- growth conditions ----------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    mode: str
    passed: bool
    worst_violation: float
    window_ratios: tuple = ()
    detail: str = ""

    def to_dict(self):
        return {
            "mode": self.mode,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "window_ratios": list(self.window_ratios),
            "detail": self.detail,
        }


def check_growth(spec_or_g, mode, samples=400, p=None, gamma=None, radii=None) -> GrowthReport:
    """Sample g(x, s) against growth condition I, II or III.

    I:   -C3 + C4 s^p <= g(x, s) <= C3 + C5 s^p for s >= 0,
    II:  |g(x, s)| <= C6 (|s| + |s|^p),
    III: sup_x |g(x, s)|/|s| -> 0 as s -> 0 (ratios on windows |s| <= 10^-k).
    """
    if isinstance(spec_or_g, ProblemSpec):
        g, p, gamma = spec_or_g.g, spec_or_g.p, spec_or_g.Gamma
    else:
        g = spec_or_g
        gamma = gamma if gamma is not None else constant(1.0)
        if p is None:
            raise SpecificationError("p is required when checking a bare nonlinearity")
    r = np.asarray(radii if radii is not None else np.geomspace(1e-4, 50.0, 40), float)
    if mode == "I":
        if g.C3 is None or g.C4 is None:
            raise SpecificationError("mode I needs C3 and C4")
        C5 = g.C5 if g.C5 is not None else g.C4
        s = np.concatenate([[0.0], np.geomspace(1e-6, 1e3, samples)])
        R, S = np.meshgrid(r, s, indexing="ij")
        val = g(R, S, p, gamma)
        lower = -g.C3 + g.C4 * S**p
        upper = g.C3 + C5 * S**p
        excess = np.maximum(lower - val, val - upper) / (1.0 + S**p)
        worst = float(np.max(excess))
        return GrowthReport("I", worst <= 1e-12, worst)
    if mode == "II":
        if g.C6 is None:
            raise SpecificationError("mode II needs C6")
        s = np.geomspace(1e-6, 1e3, samples)
        s = np.concatenate([-s[::-1], [0.0], s])
        R, S = np.meshgrid(r, s, indexing="ij")
        val = np.abs(g(R, S, p, gamma))
        bound = g.C6 * (np.abs(S) + np.abs(S) ** p)
        excess = (val - bound) / (1.0 + np.abs(S) + np.abs(S) ** p)
        worst = float(np.max(excess))
        return GrowthReport("II", worst <= 1e-12, worst)
    if mode == "III":
        ratios = []
        for k in range(1, 9):
            s = np.geomspace(10.0 ** (-k - 3), 10.0 ** (-k), 50)
            s = np.concatenate([-s, s])
            R, S = np.meshgrid(r, s, indexing="ij")
            ratios.append(float(np.max(np.abs(g(R, S, p, gamma)) / np.abs(S))))
        nonincreasing = all(b <= a * (1 + 1e-9) + 1e-300 for a, b in zip(ratios, ratios[1:]))
        vanishing = ratios[-1] <= 1e-2 * max(ratios[0], 1e-300) or ratios[-1] == 0.0
        passed = nonincreasing and vanishing
        detail = "ratio decreases to 0" if passed else "sup |g|/|s| does not tend to 0"
        return GrowthReport("III", passed, ratios[-1], tuple(ratios), detail)
    raise SpecificationError(f"growth mode must be I, II or III, got {mode!r}")
