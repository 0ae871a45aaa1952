"""Deterministic SVG plots of experiment series."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import EmptySeries  # noqa: E402


@dataclass(frozen=True)
class PlotSeries:
    """Points ``(x, y)`` with optional error bars and a fitted line ``y = exp(a + b x)`` or ``a + b x``."""

    x: Sequence[float]
    y: Sequence[float]
    yerr: Sequence[float] | None = None
    fit: tuple[float, float] | None = None
    label: str = ""


@dataclass(frozen=True)
class PlotStyle:
    title: str = ""
    xlabel: str = "x"
    ylabel: str = "y"
    logx: bool = False
    logy: bool = False
    fit_in_log: bool = True


def emit_plot(series: PlotSeries | Sequence[PlotSeries], style: PlotStyle = PlotStyle()) -> str:
    """Render one or more series to an SVG 1.1 document.

    Output is byte-identical for identical input: the SVG id salt is fixed
    and no date is embedded.
    """
    group = [series] if isinstance(series, PlotSeries) else list(series)
    if not group or all(len(s.x) == 0 for s in group):
        raise EmptySeries("nothing to plot")
    with plt.rc_context({"svg.hashsalt": "horolab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for s in group:
            x = np.asarray(s.x, dtype=float)
            y = np.asarray(s.y, dtype=float)
            if s.yerr is not None:
                ax.errorbar(x, y, yerr=np.asarray(s.yerr, dtype=float), fmt="o", ms=4, capsize=2, label=s.label or None)
            else:
                ax.plot(x, y, "o", ms=4, label=s.label or None)
            if s.fit is not None and x.size:
                xs = np.linspace(x.min(), x.max(), 100)
                a, b = s.fit
                ys = np.exp(a + b * xs) if style.fit_in_log else a + b * xs
                ax.plot(xs, ys, "-", lw=1)
        if style.logx:
            ax.set_xscale("log")
        if style.logy:
            ax.set_yscale("log")
        ax.set_title(style.title)
        ax.set_xlabel(style.xlabel)
        ax.set_ylabel(style.ylabel)
        if any(s.label for s in group):
            ax.legend()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()
