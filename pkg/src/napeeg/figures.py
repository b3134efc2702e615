"""Figure emission: scatter plots and region-pair connectivity diagrams.

Each connectivity diagram gets a JSON sidecar listing its edges and
colors, which external tooling (and the test suite) can consume without
parsing SVG. SVG output is deterministic: the build date is suppressed
and the id hash salt is fixed.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "napeeg"

import matplotlib.pyplot as plt
import numpy as np

from .model import REGION_PAIRS, REGIONS, REGION_CODES
from .pipeline import AnalysisReport

_NODE_ANGLES = {
    code: math.pi / 2 - 2 * math.pi * k / len(REGIONS)
    for k, code in enumerate(REGION_CODES[r] for r in REGIONS)
}

POSITIVE_COLOR = "#c62828"  # red
NEGATIVE_COLOR = "#1565c0"  # blue
NEUTRAL_COLOR = "#bdbdbd"  # gray


def scatter_figure(x, y, xlabel: str, ylabel: str, title: str):
    """Scatter with axis ranges guaranteed to cover the data extrema."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fig, ax = plt.subplots(figsize=(4.0, 3.2))
    ax.scatter(x, y, color="#37474f", zorder=3)
    if x.size:
        ax.set_xlim(*_padded(x))
        ax.set_ylim(*_padded(y))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    return fig


def _padded(v: np.ndarray) -> tuple[float, float]:
    lo, hi = float(v.min()), float(v.max())
    pad = 0.05 * (hi - lo) if hi > lo else max(0.5, abs(hi) * 0.1)
    return lo - pad, hi + pad


def edge_diagram_figure(edge_colors: dict[str, str], title: str):
    """Pentagon of region nodes with the 15 pair edges.

    Within-region pairs draw as small loops at the node. Edge colors come
    from ``edge_colors`` (pair label -> css color); missing pairs render
    neutral.
    """
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    pos = {
        code: (math.cos(a), math.sin(a)) for code, a in _NODE_ANGLES.items()
    }
    for label in REGION_PAIRS:
        a, b = label.split("-")
        color = edge_colors.get(label, NEUTRAL_COLOR)
        wide = color != NEUTRAL_COLOR
        if a == b:
            x, y = pos[a]
            loop = plt.Circle(
                (x * 1.18, y * 1.18),
                0.1,
                fill=False,
                color=color,
                linewidth=2.0 if wide else 1.0,
            )
            ax.add_patch(loop)
        else:
            (x1, y1), (x2, y2) = pos[a], pos[b]
            ax.plot(
                [x1, x2],
                [y1, y2],
                color=color,
                linewidth=2.5 if wide else 1.0,
                zorder=1,
            )
    for code, (x, y) in pos.items():
        ax.add_patch(plt.Circle((x, y), 0.09, color="#263238", zorder=2))
        ax.text(
            x, y, code, color="white", ha="center", va="center", zorder=3, fontsize=10
        )
    ax.set_xlim(-1.45, 1.45)
    ax.set_ylim(-1.45, 1.45)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    return fig


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_figures(report: AnalysisReport, out_dir: str | Path, alpha: float = 0.05) -> list[Path]:
    """Write scatter SVGs and edge diagrams (SVG + JSON edge list) for a report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    # scatter plots for significant correlation cells with stored points
    for row in report.rows:
        if row.statistic_name != "r" or not row.significant:
            continue
        key = (row.task, row.metric, row.band, row.column)
        points = report.scatter_data.get(key)
        if points is None:
            continue
        fig = scatter_figure(
            points[0],
            points[1],
            xlabel=f"{row.metric} {row.band} {row.column}",
            ylabel=f"{row.task} outcome",
            title=f"{report.analysis}: r={row.statistic:.3f} p={row.p_value:.3g}",
        )
        name = f"{report.analysis}_scatter_{row.task}_{row.metric}_{row.band}_{row.column}.svg"
        _save(fig, out_dir / name)
        written.append(out_dir / name)

    # connectivity diagrams per (task, band) for wPLI rows
    wpli_rows = [r for r in report.rows if r.metric == "wpli" and r.column in REGION_PAIRS]
    tasks = sorted({r.task for r in wpli_rows})
    bands_in_order: list[str] = []
    for r in wpli_rows:
        if r.band not in bands_in_order:
            bands_in_order.append(r.band)
    for task in tasks:
        for band in bands_in_order:
            cell_rows = [r for r in wpli_rows if r.task == task and r.band == band]
            if not cell_rows:
                continue
            edges = []
            colors: dict[str, str] = {}
            for r in cell_rows:
                if r.significant:
                    color = POSITIVE_COLOR if r.statistic >= 0 else NEGATIVE_COLOR
                    colors[r.column] = color
                else:
                    color = NEUTRAL_COLOR
                edges.append(
                    {
                        "pair": r.column,
                        "statistic": None if math.isnan(r.statistic) else r.statistic,
                        "p_value": None if math.isnan(r.p_value) else r.p_value,
                        "significant": bool(r.significant),
                        "color": color,
                    }
                )
            stem = f"{report.analysis}_edges_{task}_{band}"
            (out_dir / f"{stem}.json").write_text(
                json.dumps(
                    {"analysis": report.analysis, "task": task, "band": band, "edges": edges},
                    indent=2,
                    sort_keys=True,
                ),
                encoding="utf-8",
            )
            fig = edge_diagram_figure(colors, title=f"{task} {band} ({report.analysis})")
            _save(fig, out_dir / f"{stem}.svg")
            written.append(out_dir / f"{stem}.svg")
            written.append(out_dir / f"{stem}.json")
    return written
