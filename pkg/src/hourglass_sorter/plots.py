"""Figure rendering for resource reports and variant comparisons.

Matplotlib is imported lazily with the Agg backend so the CLI stays usable
on headless machines and figure rendering never taxes plain runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .analysis import ResourceEstimate, VariantComparison


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_resource_figure(
    estimates: Sequence[ResourceEstimate], path: str | Path
) -> Path:
    """Plot LUT/REG/CARRY8 scaling against n, one series per width."""
    plt = _pyplot()
    path = Path(path)
    by_width: dict[int, list[ResourceEstimate]] = {}
    for est in estimates:
        by_width.setdefault(est.w, []).append(est)

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharex=True)
    panels = (
        ("LUT (fit)", lambda e: e.lut_estimate),
        ("registers", lambda e: e.reg_bits),
        ("CARRY8 blocks", lambda e: e.carry8_blocks),
    )
    for ax, (label, pick) in zip(axes, panels):
        for w in sorted(by_width):
            rows = sorted(by_width[w], key=lambda e: e.n)
            xs = [e.n for e in rows if pick(e) is not None]
            ys = [pick(e) for e in rows if pick(e) is not None]
            if xs:
                ax.plot(xs, ys, marker="o", label=f"w={w}")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log", base=2)
        ax.set_xlabel("array size n")
        ax.set_ylabel(label)
        ax.grid(True, which="both", alpha=0.3)
    axes[0].legend()
    fig.suptitle("Resource scaling of the sorting tree")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_compare_figure(comparison: VariantComparison, path: str | Path) -> Path:
    """Event raster of root transactions for both variants.

    Gaps between marks on the registered row are the bubbles that double
    buffering removes.  Requires reports carrying traces.
    """
    plt = _pyplot()
    path = Path(path)
    rows = []
    for name, report in (
        ("hourglass", comparison.hourglass),
        ("registered", comparison.registered),
    ):
        if report.trace is None:
            raise ValueError("comparison reports carry no traces to plot")
        rows.append((name, [rec.cycle for rec in report.trace if rec.root_transaction]))

    fig, ax = plt.subplots(figsize=(10, 2.8))
    ax.eventplot(
        [cycles for _, cycles in rows],
        lineoffsets=[1, 0],
        linelengths=0.8,
        colors=["tab:blue", "tab:red"],
    )
    ax.set_yticks([1, 0])
    ax.set_yticklabels([name for name, _ in rows])
    ax.set_xlabel("cycle")
    ax.set_title(
        f"Root transactions, n={comparison.n}: "
        f"{comparison.hourglass.total_cycles} vs "
        f"{comparison.registered.total_cycles} cycles "
        f"(ratio {comparison.cycle_ratio:.3f})"
    )
    ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
