"""The three benchmark figure kinds.

* ``regret_vs_t`` -- cumulative-regret curves of several algorithms overlaid
  with one-standard-deviation bands;
* ``regret_vs_c`` -- final-round regret against the deviation budget;
* ``regret_vs_d`` -- final-round regret against the graph degree, optionally
  with the theoretical bound curves on a twin right axis.

Rendering is read-only and deterministic: a fixed style, no timestamps, and
the Agg backend, so identical inputs produce identical image bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .schema import BoundsTable, read_bounds, read_curve, read_summary

KINDS = ("regret_vs_t", "regret_vs_c", "regret_vs_d")

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "svg.hashsalt": "regretplots",
}
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_LABELS = {
    "robust_lcb": "Robust-LCB",
    "linsem_ucb": "LinSEM-UCB",
    "linsem_ucb_robust": "LinSEM-UCB (robust radius)",
    "vanilla_ucb": "UCB",
    "oracle": "oracle",
}


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    out: str
    bounds: str | None = None
    logx: bool = False
    logy: bool = False
    title: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input file required")


def _apply_scales(ax, spec: FigureSpec) -> None:
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")


def _plot_regret_vs_t(ax, spec: FigureSpec) -> None:
    for k, path in enumerate(spec.inputs):
        curve = read_curve(path)
        color = _COLORS[k % len(_COLORS)]
        label = _LABELS.get(curve.algo, curve.algo)
        ax.plot(curve.t, curve.mean_regret, color=color, label=label)
        ax.fill_between(curve.t, curve.mean_regret - curve.std_regret,
                        curve.mean_regret + curve.std_regret,
                        color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel("round t")
    ax.set_ylabel("cumulative regret")
    ax.legend()


def _plot_summary(ax, spec: FigureSpec, xlabel: str) -> None:
    summaries = [read_summary(p) for p in spec.inputs]
    series: dict[str, tuple[list[float], list[float], list[float]]] = {}
    for s in summaries:
        for v, algo, m, sd in zip(s.values, s.algos, s.final_mean, s.final_std):
            xs, ys, es = series.setdefault(algo, ([], [], []))
            xs.append(float(v))
            ys.append(float(m))
            es.append(float(sd))
    for k, (algo, (xs, ys, es)) in enumerate(sorted(series.items())):
        order = sorted(range(len(xs)), key=lambda i: xs[i])
        ax.errorbar([xs[i] for i in order], [ys[i] for i in order],
                    yerr=[es[i] for i in order], color=_COLORS[k % len(_COLORS)],
                    marker="o", capsize=3, label=_LABELS.get(algo, algo))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("final cumulative regret")
    ax.legend(loc="upper left")


def _overlay_bounds(ax, table: BoundsTable) -> None:
    twin = ax.twinx()
    order = table.values.argsort()
    twin.plot(table.values[order], table.upper[order], color="#444444",
              linestyle="--", label="upper bound")
    twin.plot(table.values[order], table.lower[order], color="#444444",
              linestyle=":", label="lower bound")
    twin.set_ylabel("bound value (right axis)")
    twin.legend(loc="lower right")


def plot(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            if spec.kind == "regret_vs_t":
                _plot_regret_vs_t(ax, spec)
            elif spec.kind == "regret_vs_c":
                _plot_summary(ax, spec, "deviation budget C")
            else:
                _plot_summary(ax, spec, "graph degree d")
            if spec.bounds is not None:
                _overlay_bounds(ax, read_bounds(spec.bounds))
            if spec.title:
                ax.set_title(spec.title)
            _apply_scales(ax, spec)
            fig.tight_layout()
            fig.savefig(spec.out, metadata={"Software": "regretplots"})
        finally:
            plt.close(fig)
    return spec.out
