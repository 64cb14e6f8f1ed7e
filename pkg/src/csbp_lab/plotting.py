"""Report figures: empirical CDFs against their theoretical overlays."""

from __future__ import annotations

import numpy as np

from .errors import EmptySeries

OVERLAY_QUANTILES = 200


def ecdf_points(samples: np.ndarray):
    """Sorted sample points with their empirical CDF heights."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise EmptySeries("no samples to plot")
    return x, np.arange(1, x.size + 1) / x.size


def emit_plot_data(samples: np.ndarray, overlay_name: str, overlay_cdf,
                   overlay_grid: np.ndarray):
    """Plot-ready rows (series, x, y): the full ECDF plus the named
    theoretical overlay sampled on its grid, so any external plotter can
    reproduce the figure."""
    x, h = ecdf_points(samples)
    rows = [("ecdf", float(a), float(b)) for a, b in zip(x, h)]
    grid = np.asarray(overlay_grid, dtype=float)
    vals = np.asarray(overlay_cdf(grid), dtype=float)
    tag = f"overlay:{overlay_name}"
    rows.extend((tag, float(a), float(b)) for a, b in zip(grid, vals))
    return rows


def render_ecdf_figure(samples: np.ndarray, overlays: dict, path: str,
                       title: str) -> None:
    """Write a PNG of the ECDF with theoretical overlays."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x, h = ecdf_points(samples)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    step = max(1, x.size // 4000)
    ax.step(x[::step], h[::step], where="post", lw=1.2, color="C0",
            label=f"empirical ({x.size} samples)")
    for name, (cdf, grid) in overlays.items():
        grid = np.asarray(grid, dtype=float)
        ax.plot(grid, cdf(grid), "--", lw=1.2, label=name)
    ax.set_xlabel("z")
    ax.set_ylabel("P(Z <= z)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
