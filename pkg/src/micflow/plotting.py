"""SVG figures for experiment reports (percentile bands, power curves, bias)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness.experiments import ExperimentReport  # noqa: E402

INTERVAL_COLOR = "#C62828"
PALETTE = ["#1565C0", "#2E7D32", "#E65100", "#6A1B9A", "#00838F", "#AD1457",
           "#4E342E", "#F9A825", "#283593", "#558B2F", "#D84315", "#37474F"]


def setup_style() -> None:
    plt.rcParams.update({
        "font.family": "sans-serif",
        "font.size": 9,
        "axes.titlesize": 10,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "legend.frameon": False,
        "legend.fontsize": 7,
        "svg.hashsalt": "micflow",  # stable element ids across runs
        "svg.fonttype": "path",
    })


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def equitability_figure(report: ExperimentReport, path: str | Path) -> Path:
    """One panel per statistic: a shaded band per relationship plus the worst interval."""
    setup_style()
    names = list(report.bands)
    fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names), 3.0), squeeze=False)
    worst = {s["statistic"]: s for s in report.summary}
    for ax, name in zip(axes[0], names):
        for i, (fid, (r2, lo, hi)) in enumerate(report.bands[name].items()):
            order = np.argsort(r2)
            ax.fill_between(r2[order], lo[order], hi[order], alpha=0.35, lw=0,
                            color=PALETTE[i % len(PALETTE)], label=fid)
        w = worst[name]
        if np.isfinite(w["worst_width"]):
            ax.plot([w["r2_low"], w["r2_high"]], [w["at_value"]] * 2, color=INTERVAL_COLOR, lw=2.5)
        ax.set_title(f"{name}  (worst width {w['worst_width']:.3f})")
        ax.set_xlabel("R$^2$")
        ax.set_xlim(0, 1)
    axes[0][0].set_ylabel("statistic")
    axes[0][-1].legend(loc="upper left", bbox_to_anchor=(1.0, 1.0))
    return _save(fig, Path(path))


def power_figure(report: ExperimentReport, path: str | Path) -> Path:
    """Power against R^2, one panel per relationship, one line per statistic."""
    setup_style()
    funcs = list(dict.fromkeys(r["function"] for r in report.rows))
    stats = list(dict.fromkeys(r["statistic"] for r in report.rows))
    cols = min(4, len(funcs))
    rows_n = -(-len(funcs) // cols)
    fig, axes = plt.subplots(rows_n, cols, figsize=(2.8 * cols, 2.4 * rows_n), squeeze=False)
    for ax, fid in zip(axes.flat, funcs):
        for i, s in enumerate(stats):
            sub = sorted((r["r2"], r["power"]) for r in report.rows
                         if r["function"] == fid and r["statistic"] == s)
            ax.plot(*zip(*sub), marker="o", ms=3, color=PALETTE[i % len(PALETTE)], label=s)
        ax.set_title(fid)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("R$^2$")
    for ax in list(axes.flat)[len(funcs):]:
        ax.set_visible(False)
    axes[0][0].set_ylabel("power")
    axes[0][0].legend()
    return _save(fig, Path(path))


def bias_variance_figure(report: ExperimentReport, path: str | Path) -> Path:
    """Median-over-functions bias and variance against the noise level, per alpha."""
    setup_style()
    level = "r2_target" if "r2_target" in report.summary[0] else "sigma"
    ests = list(dict.fromkeys((s["alpha"], s["c"]) for s in report.summary))
    fig, axes = plt.subplots(1, 2, figsize=(6.4, 2.8))
    for i, (a, c) in enumerate(ests):
        sub = sorted((s[level], s["bias"], s["variance"]) for s in report.summary
                     if s["alpha"] == a and s["c"] == c and s["aggregate"] == "median")
        x, b, v = zip(*sub)
        kw = dict(marker="o", ms=3, color=PALETTE[i % len(PALETTE)], label=f"alpha={a:g}")
        axes[0].plot(x, b, **kw)
        axes[1].plot(x, v, **kw)
    axes[0].axhline(0.0, color="0.6", lw=0.8)
    axes[0].set_ylabel("median bias")
    axes[1].set_ylabel("median variance")
    for ax in axes:
        ax.set_xlabel("R$^2$" if level == "r2_target" else "sigma")
    axes[0].legend()
    return _save(fig, Path(path))


FIGURES = {
    "bias_variance": bias_variance_figure,
    "equitability": equitability_figure,
    "power": power_figure,
}
