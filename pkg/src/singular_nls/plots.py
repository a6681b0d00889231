"""Figures written next to the CSV tables of a run."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.4,
}
# fixed metadata keeps PNG bytes independent of the matplotlib build
_META = {"Software": None}


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path.name


def profile(path, r, U, u0, power_law):
    """Log-log view of U, the approximate solution and the singular power."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        pos = U > 0
        ax.loglog(r[pos], U[pos], label="U")
        ax.loglog(r, u0, "--", label="u0")
        ax.loglog(r, power_law, ":", label="c r^-t")
        ax.set_xlabel("r")
        ax.set_ylabel("value")
        ax.legend()
        return _save(fig, path)


def tail(path, r, u, rate):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        vals = np.abs(u)
        sel = vals > 0
        ax.semilogy(r[sel], vals[sel], label="|U|")
        ax.semilogy(r, vals[sel][0] * np.exp(-rate * (r - r[sel][0])), ":", label=f"exp(-{rate:.3g} r)")
        ax.set_xlabel("r")
        ax.legend()
        return _save(fig, path)


def descent(path, iterations, values, grad_norms):
    with plt.rc_context(STYLE):
        fig, (a, b) = plt.subplots(1, 2, figsize=(9.0, 3.5))
        a.plot(iterations, values, marker=".")
        a.set_xlabel("iteration")
        a.set_ylabel("J")
        b.semilogy(iterations, grad_norms, marker=".")
        b.set_xlabel("iteration")
        b.set_ylabel("gradient norm")
        return _save(fig, path)


def sweep(path, p, columns: dict):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, vals in columns.items():
            vals = np.asarray(vals, float)
            ok = np.isfinite(vals) & (vals > 0)
            ax.semilogy(np.asarray(p)[ok], vals[ok], marker="o", label=label)
        ax.set_xlabel("p")
        ax.legend()
        return _save(fig, path)


def kernels(path, r, tables: dict):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, vals in tables.items():
            ax.loglog(r, vals, label=label)
        ax.set_xlabel("r")
        ax.set_ylabel("G(r)")
        ax.legend()
        return _save(fig, path)


def curves(path, x, columns: dict, xlabel="r", logy=True):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, vals in columns.items():
            (ax.semilogy if logy else ax.plot)(x, np.abs(vals) if logy else vals, marker=".", label=label)
        ax.set_xlabel(xlabel)
        ax.legend()
        return _save(fig, path)
