"""Figure rendering for completed runs.

One figure per run: the mean regret curve with a seed-spread band and the
fitted growth models on a log-scaled round axis, plus (when a dyadic
increment fit exists) a log-log panel of the window-averaged per-round
increments against the fitted c / t line. Rendering is headless; figures go
straight to files next to the delimited output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .rates import IncrementFit, RateFit

_MODEL_CURVES = {
    "logarithmic": lambda t: np.log(t),
    "sqrt": lambda t: np.sqrt(t),
    "linear": lambda t: t,
}


def render_scenario_figure(path, t, mean_curve, std_curve,
                           rate_fit: RateFit | None = None,
                           increment_fit: IncrementFit | None = None,
                           title: str | None = None) -> None:
    t = np.asarray(t, dtype=float)
    mean_curve = np.asarray(mean_curve, dtype=float)
    std_curve = np.asarray(std_curve, dtype=float)
    panels = 2 if increment_fit is not None else 1
    fig, axes = plt.subplots(1, panels, figsize=(6.0 * panels, 4.2))
    if panels == 1:
        axes = [axes]

    ax = axes[0]
    ax.plot(t, mean_curve, color="black", lw=1.5, label="mean regret")
    if np.any(std_curve > 0):
        ax.fill_between(t, mean_curve - std_curve, mean_curve + std_curve,
                        color="black", alpha=0.15, lw=0, label="seed spread")
    if rate_fit is not None:
        mask = t >= rate_fit.t_min
        for name, model in rate_fit.models.items():
            fitted = model.slope * _MODEL_CURVES[name](t[mask]) + model.intercept
            selected = name == rate_fit.selected
            ax.plot(t[mask], fitted, lw=2.0 if selected else 0.8,
                    alpha=1.0 if selected else 0.6,
                    label=f"{name} fit (R2={model.r_squared:.4f})"
                          + (" *" if selected else ""))
    ax.set_xscale("log")
    ax.set_xlabel("round t")
    ax.set_ylabel("regret")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)

    if increment_fit is not None:
        ax2 = axes[1]
        centers = increment_fit.window_centers
        ax2.loglog(centers, increment_fit.window_means, "o", color="black",
                   label="dyadic window means")
        span = np.geomspace(centers.min(), centers.max(), 100)
        ax2.loglog(span, increment_fit.c / span, "--", color="gray",
                   label=f"c/t, c={increment_fit.c:.4g} "
                         f"(R2={increment_fit.r_squared:.4g})")
        ax2.set_xlabel("round t")
        ax2.set_ylabel("mean regret increment")
        ax2.legend(fontsize=8)

    fig.savefig(path, dpi=300, bbox_inches="tight")
    plt.close(fig)
