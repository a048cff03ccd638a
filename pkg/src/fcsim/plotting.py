"""Static vector-graphic output replicating the coincidence-curve figures.

One figure style: prediction curves as lines (QM solid black, classical
dashed red), Monte Carlo points with error bars at 3 standard errors
(collapse: black circles, local-realistic: red squares, smeared: black
diamonds). Axes span phi in [0, pi/2] and ratio in [0, 0.5].
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

CURVE_STYLES = {
    "qm": dict(color="black", linestyle="-", label="QM calculation"),
    "classical": dict(color="tab:red", linestyle="--", label="classical calculation"),
}

POINT_STYLES = {
    "collapse": dict(color="black", marker="o", label="collapse model MC"),
    "local-realistic": dict(color="tab:red", marker="s", label="local realistic MC"),
    "smeared": dict(color="black", marker="D", label="smeared polarization MC"),
}


def emit_plot(path, curves=(), batches=(), series=(), title=None) -> Path:
    """Write an SVG with prediction curves and/or MC points.

    curves: (name, callable phi -> ratio) pairs, name keying CURVE_STYLES.
    batches: BatchResult objects, styled by model, bars at 3*ratio_se.
    series: pre-extracted (name, phi[], mean[], se[]) tuples (from stored
    CSV rows); styled like batches. At least one input must be non-empty.
    """
    curves = list(curves)
    batches = list(batches)
    series = list(series)
    if not curves and not batches and not series:
        raise ValueError("emit_plot needs at least one curve, batch, or series")

    fig = Figure(figsize=(6.4, 4.8))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot(111)

    grid = np.linspace(0.0, math.pi / 2, 200)
    for name, fn in curves:
        style = CURVE_STYLES.get(name, dict(label=name))
        ax.plot(grid, [fn(phi) for phi in grid], **style)

    for batch in batches:
        stats = batch.angle_stats()
        series.append(
            (
                batch.model.value,
                [s.angle for s in stats],
                [s.ratio_mean for s in stats],
                [s.ratio_se for s in stats],
            )
        )

    for name, phis, means, ses in series:
        style = POINT_STYLES.get(name, dict(marker="o", label=name))
        yerr = [0.0 if se is None else 3.0 * se for se in ses]
        ax.errorbar(phis, means, yerr=yerr, linestyle="none", capsize=2.5, markersize=4.5, **style)

    ax.set_xlim(0.0, math.pi / 2)
    ax.set_ylim(0.0, 0.5)
    ax.set_xlabel("relative analyzer angle $\\phi$ (rad)")
    ax.set_ylabel("coincidence ratio $R_\\phi/R_0$")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)

    path = Path(path)
    fig.savefig(path, format="svg")
    return path
