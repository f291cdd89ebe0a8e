"""Figure rendering: per-scheme mean curves with shaded 95% bands."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .aggregate import PlotSpec, SchemeCurve, aggregate, read_metrics


def render(spec: PlotSpec) -> str:
    """Render the figure described by ``spec`` and return the output path."""
    spec.validate()
    rows = read_metrics(spec.csv_paths)
    curves = aggregate(rows, spec.metric, spec.smooth_window)
    return draw(curves, spec)


def draw(curves: list[SchemeCurve], spec: PlotSpec) -> str:
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for curve in curves:
        line, = ax.plot(curve.episodes, curve.mean, label=curve.scheme, linewidth=1.6)
        ax.fill_between(curve.episodes, curve.mean - curve.half_width,
                        curve.mean + curve.half_width,
                        color=line.get_color(), alpha=0.2, linewidth=0)
    ylabel = spec.metric
    if spec.smooth_window > 1:
        ylabel += f" (moving avg, window {spec.smooth_window})"
    ax.set_xlabel("training episode")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return spec.out_path
