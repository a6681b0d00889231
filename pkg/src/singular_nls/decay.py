"""Exponential tail rates and weighted-energy diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .grid import GridFunction
from .problem import _cap_fraction


@dataclass(frozen=True)
class DecayFit:
    mu_hat: float
    C_mu: float
    window: tuple
    rms: float
    points: int

    def to_dict(self):
        return {"mu_hat": self.mu_hat, "C_mu": self.C_mu, "window": list(self.window), "rms": self.rms,
                "points": self.points}


def default_window(u: GridFunction, span=10.0):
    hi = u.grid.r_max - 5.0
    return (max(hi - span, 1.0), hi)


def fit_decay(u: GridFunction, window=None) -> DecayFit:
    """Least-squares line through log|u| on the window; mu_hat is minus the slope."""
    window = default_window(u) if window is None else tuple(window)
    lo, hi = window
    if hi > u.grid.r_max - 5.0 + 1e-9:
        raise DomainError("fit window must end at least 5 below R_max")
    r = u.grid.nodes
    sel = (r >= lo) & (r <= hi)
    vals = u.values[sel]
    if np.count_nonzero(sel) < 3:
        raise DomainError("fit window holds fewer than three nodes")
    if np.any(vals == 0.0) or (np.any(vals > 0.0) and np.any(vals < 0.0)):
        raise NumericError("fit_decay", "u vanishes or changes sign in the fit window")
    x = r[sel]
    y = np.log(np.abs(vals))
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(float(-slope), float(math.exp(intercept)), (float(lo), float(hi)), rms, int(len(x)))


def rate_profile(u: GridFunction, starts, width=10.0):
    """mu_hat for windows [s, s + width] moving outward."""
    return [fit_decay(u, (s, s + width)).mu_hat for s in starts]


# --- weighted energy --------------------------------------------------------------


def smoothstep(t):
    """Quintic ramp: 0 for t <= 0, 1 for t >= 1, C^2 in between."""
    t = np.clip(np.asarray(t, float), 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def smoothstep_derivative(t):
    t = np.asarray(t, float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * tc**2 * (1.0 - tc) ** 2, 0.0)


def cutoff(r, inner, outer):
    """chi(r/inner) (1 - chi(r/outer)), chi ramping from 0 at 1 to 1 at 2; and its derivative."""
    r = np.asarray(r, float)
    a = smoothstep(r / inner - 1.0)
    da = smoothstep_derivative(r / inner - 1.0) / inner
    b = 1.0 - smoothstep(r / outer - 1.0)
    db = -smoothstep_derivative(r / outer - 1.0) / outer
    return a * b, da * b + a * db


def agmon_weighted_norm(u: GridFunction, mu, r, rho, sigma_reg=0.0, spectral_bottom=1.0, delta=None):
    """(LHS, RHS) of the weighted energy inequality with cutoff between r and rho.

    LHS = int chi^2 u^2 e^{2 mu |x|/(1 + s|x|)},
    RHS = (1 + mu^2/delta)/(Sigma - mu^2 - 2 delta) int |chi'|^2 u^2 e^{...}.
    """
    if not 0.0 < mu < math.sqrt(spectral_bottom):
        raise DomainError("need 0 < mu < sqrt(Sigma)")
    if not r < rho:
        raise DomainError("need r < rho")
    grid = u.grid
    if 2.0 * rho > grid.r_max:
        raise DomainError("outer cutoff radius 2 rho exceeds the grid")
    gap = spectral_bottom - mu * mu
    delta = gap / 4.0 if delta is None else delta
    if not 0.0 < delta < gap / 2.0:
        raise DomainError("delta must lie in (0, (Sigma - mu^2)/2)")
    x = grid.nodes
    chi, dchi = cutoff(x, r, rho)
    weight = np.exp(2.0 * mu * x / (1.0 + sigma_reg * x))
    u2 = u.values**2 * weight * x ** (grid.n - 1)
    lhs = grid.sigma * grid.integrate_radial(chi**2 * u2)
    grad = grid.sigma * grid.integrate_radial(dchi**2 * u2)
    factor = (1.0 + mu * mu / delta) / (gap - 2.0 * delta)
    return float(lhs), float(factor * grad)


def agmon_sweep(u: GridFunction, mu, r, rhos, spectral_bottom=1.0, sigma_reg=0.0):
    """LHS/RHS along a ladder of outer radii; flags LHS growing with rho."""
    rows = []
    for rho in rhos:
        lhs, rhs = agmon_weighted_norm(u, mu, r, rho, sigma_reg, spectral_bottom)
        rows.append({"rho": float(rho), "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else math.inf})
    lhs = [row["lhs"] for row in rows]
    growing = len(lhs) > 2 and lhs[-1] > 2.0 * lhs[len(lhs) // 2]
    return {"mu": mu, "r": r, "rows": rows, "lhs_growing": bool(growing)}


# --- local sup / L2 ratio ---------------------------------------------------------


def _ball_l2(u: GridFunction, center, radius):
    """||u||_{L^2(B_radius(z))} for radial u and |z| = center."""
    grid = u.grid
    x = grid.nodes
    sel = (x >= max(center - radius, 0.0)) & (x <= center + radius)
    frac = np.array([_cap_fraction(grid.n, center, s, radius) if sel[i] else 0.0 for i, s in enumerate(x)])
    inner = 0.0
    if center < radius:
        # the small ball inside the first node lies entirely in B_radius(z)
        inner = grid.sigma * float(u.values[0]) ** 2 * grid.r_min**grid.n / grid.n
    val = grid.integrate_radial(frac * u.values**2 * x ** (grid.n - 1)) + inner
    return math.sqrt(max(val, 0.0))


def local_bound_diag(u: GridFunction, W=None, centers=None):
    """||u||_{L^inf(B_1(z))} / ||u||_{L^2(B_2(z))} per center radius |z|."""
    grid = u.grid
    centers = np.linspace(3.0, grid.r_max - 3.0, 8) if centers is None else np.asarray(centers, float)
    x = grid.nodes
    rows = []
    for c in centers:
        sel = (x >= max(c - 1.0, 0.0)) & (x <= c + 1.0)
        sup = float(np.max(np.abs(u.values[sel])))
        l2 = _ball_l2(u, float(c), 2.0)
        if l2 == 0.0:
            continue
        row = {"center": float(c), "sup": sup, "l2": l2, "ratio": sup / l2}
        if W is not None:
            near = (x >= max(c - 2.0, 0.0)) & (x <= c + 2.0)
            row["W_sup"] = float(np.max(np.abs(np.asarray(W(x[near]), float))))
        rows.append(row)
    ratios = [row["ratio"] for row in rows]
    return {
        "rows": rows,
        "max_ratio": max(ratios) if ratios else None,
        "drift": (max(ratios) / min(ratios)) if ratios else None,
    }
