"""Batch renderers for the diagnostic figures.

Only the documented CSV artifacts are consumed.  Every slope shown in a
figure is a least-squares fit of log2(y) against log2(x) - the same
definition the estimator's rate report uses - and is also written to a
sidecar text file next to the figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import RunArtifacts, load_table

# Okabe-Ito colors: distinguishable under common color-vision deficiencies.
COLORS = ["#0072B2", "#D55E00", "#009E73", "#CC79A7"]


def fit_slope(xs, ys) -> float:
    """Least-squares slope of log2(ys) against log2(xs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 3:
        raise ValueError("need at least 3 matched points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("values must be positive for a log-log fit")
    lx = np.log2(xs)
    if np.ptp(lx) == 0:
        raise ValueError("degenerate abscissae: all xs equal")
    return float(np.polyfit(lx, np.log2(ys), 1)[0])


def plot_variance_decay(levels_csv, out_fig, reference_slope: float = -4.0):
    """log2 per-level variance against level index, with a reference line.

    Returns the paths (figure, sidecar).  The sidecar carries two fits:
    the per-level slope shown in the figure annotation, and the slope of
    V_ell (ell >= 1) against the coarse meshwidth h_{ell-1}, which is the
    quantity the estimator's rates report tracks.
    """
    table = load_table(levels_csv, "levels")
    ell = table["ell"]
    V = table["variance"]
    if ell.size < 3:
        raise ValueError(
            f"{levels_csv}: variance-decay plot needs at least 3 levels, got {ell.size}")
    if np.any(V <= 0):
        raise ValueError(f"{levels_csv}: nonpositive variances cannot be plotted")

    slope_per_level = float(np.polyfit(ell, np.log2(V), 1)[0])
    h_coarse = table["h"][:-1]
    slope_vs_h = fit_slope(h_coarse, V[1:]) if ell.size >= 4 else float("nan")

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(ell, np.log2(V), "o-", color=COLORS[0],
            label=f"fit {slope_per_level:.2f}/level")
    anchor = np.log2(V[0])
    ax.plot(ell, anchor + reference_slope * (ell - ell[0]), "--",
            color=COLORS[1], label=f"reference {reference_slope:g}/level")
    ax.set_xlabel("level $\\ell$")
    ax.set_ylabel(r"$\log_2 \hat{V}_\ell$")
    ax.legend(frameon=False)
    fig.tight_layout()
    out_fig = Path(out_fig)
    out_fig.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_fig, dpi=150)
    plt.close(fig)

    sidecar = out_fig.with_suffix(".slope.txt")
    sidecar.write_text(
        f"slope_per_level = {slope_per_level!r}\n"
        f"variance_vs_h_coarse = {slope_vs_h!r}\n")
    return out_fig, sidecar


def _cost_points(runs: list[RunArtifacts], quantity: str):
    eps, cost = [], []
    for art in runs:
        if art.summary is None or art.eps is None:
            raise ValueError(f"{art.path}: cost-error plot needs summary.csv and run.eps")
        mask = art.summary["quantity"] == quantity
        if not np.any(mask):
            raise ValueError(f"{art.path}: no summary row for {quantity!r}")
        eps.append(float(art.eps))
        cost.append(float(art.summary["cost_total"][mask][0]))
    order = np.argsort(eps)
    return np.asarray(eps)[order], np.asarray(cost)[order]


def plot_cost_error(methods: dict[str, list], out_fig, quantity: str = "eigenvalue"):
    """Cost against target tolerance for two or more run families.

    ``methods`` maps a label to a list of run directories (or preloaded
    :class:`RunArtifacts`).  Every run must expose summary.csv and a
    run.eps in its manifest; each method needs at least 2 runs.  Returns
    (figure path, sidecar path, fitted exponents by label).
    """
    if len(methods) < 1:
        raise ValueError("need at least one method")
    curves = {}
    for label, runs in methods.items():
        arts = [r if isinstance(r, RunArtifacts) else RunArtifacts.load(r)
                for r in runs]
        if len(arts) < 2:
            raise ValueError(f"method {label!r}: need at least 2 runs")
        modes = {a.mode for a in arts}
        if len(modes) > 1:
            raise ValueError(f"method {label!r}: mixed run modes {modes}")
        curves[label] = _cost_points(arts, quantity)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    exponents = {}
    for i, (label, (eps, cost)) in enumerate(curves.items()):
        if eps.size >= 3:
            exponents[label] = fit_slope(eps, cost)
            note = f" ({exponents[label]:.2f})"
        else:
            exponents[label] = float("nan")
            note = ""
        ax.loglog(eps, cost, "o-", color=COLORS[i % len(COLORS)],
                  label=label + note)
    ax.set_xlabel(r"target tolerance $\varepsilon$")
    ax.set_ylabel("total cost")
    ax.legend(frameon=False)
    fig.tight_layout()
    out_fig = Path(out_fig)
    out_fig.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_fig, dpi=150)
    plt.close(fig)

    sidecar = out_fig.with_suffix(".exponents.txt")
    sidecar.write_text("".join(f"{label} = {exp!r}\n"
                               for label, exp in exponents.items()))
    return out_fig, sidecar, exponents
