"""Figure rendering for the CLI report path.

Every figure lands next to the delimited output it illustrates.  PNGs are
written without the autogenerated Software tag so repeated runs stay
byte-identical.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"dpi": 150, "metadata": {"Software": None}}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_design(design, path) -> bool:
    """Scatter of a design; only rendered for dimensions one and two."""
    if design.dim > 2:
        return False
    fig, ax = plt.subplots(figsize=(5.5, 3.2 if design.dim == 1 else 4.8))
    pts = design.points
    if design.dim == 1:
        ax.plot(pts[:, 0], np.zeros(len(pts)), "|", ms=18, color="tab:blue")
        ax.set_yticks([])
        ax.set_xlabel("u")
    else:
        ax.plot(pts[:, 0], pts[:, 1], "o", ms=3.5, color="tab:blue")
        ax.set_xlabel("u_1")
        ax.set_ylabel("u_2")
        ax.set_aspect("equal", adjustable="box")
    ax.set_title(f"design, N = {design.n_points}")
    _save(fig, path)
    return True


def plot_convergence(points, rate, predicted_exponent, path, ylabel="error"):
    """Log-log error decay with the fitted and predicted slopes."""
    ns = np.array([n for n, _ in points], dtype=float)
    errs = np.array([e for _, e in points], dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.loglog(ns, errs, "o-", color="tab:blue", label=ylabel)
    if rate is not None:
        guide = np.exp(rate.intercept) * ns**-rate.slope
        ax.loglog(ns, guide, "--", color="tab:orange",
                  label=f"fit: slope {rate.slope:.2f}")
    if predicted_exponent is not None and len(ns) > 0:
        anchor = errs[-1] * (ns / ns[-1]) ** -predicted_exponent
        ax.loglog(ns, anchor, ":", color="tab:gray",
                  label=f"predicted: slope {predicted_exponent:.2f}")
    ax.set_xlabel("N")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)
    return True


def plot_fit_1d(grid_x, mean, sd, data_x, data_f, path):
    """Predictive mean with a two-standard-deviation band, 1D only."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    order = np.argsort(grid_x)
    gx, gm, gs = grid_x[order], mean[order], sd[order]
    ax.fill_between(gx, gm - 2 * gs, gm + 2 * gs, color="tab:blue", alpha=0.2,
                    label="mean +- 2 sd")
    ax.plot(gx, gm, color="tab:blue", lw=1.2)
    ax.plot(data_x, data_f, "k.", ms=6, label="data")
    ax.set_xlabel("u")
    ax.set_ylabel("f")
    ax.legend(fontsize=8)
    _save(fig, path)
    return True


def plot_hellinger(curves, path):
    """Per-variant Hellinger-distance decay on a log-log scale."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for variant, pts in sorted(curves.items()):
        if not pts:
            continue
        ns = [n for n, _ in pts]
        ds = [max(d, 1e-16) for _, d in pts]
        ax.loglog(ns, ds, "o-", label=variant, ms=4)
    ax.set_xlabel("N")
    ax.set_ylabel("Hellinger distance to reference")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)
    return True
