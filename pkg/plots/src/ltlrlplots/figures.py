"""Learning-curve figures from aggregate CSVs.

Input files are the harness aggregates: columns step, mean_edr, ci_low,
ci_high, method, task, difficulty, already smoothed and bootstrapped.
Rendering never recomputes statistics; the curves and bands show exactly
the values in the files. Output is byte-stable for identical inputs:
figures are drawn without global pyplot state, SVG ids use a fixed hash
salt, and no timestamps are embedded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import matplotlib
from matplotlib.figure import Figure

REQUIRED_COLUMNS = ("step", "mean_edr", "ci_low", "ci_high", "method", "task", "difficulty")

# Legend ordering and fixed colors for the four headline methods; other
# methods get stable fallback colors in first-encounter order.
METHOD_ORDER = ("drl2", "lcer", "count", "none")
DEFAULT_COLORS = {
    "drl2": "#1f77b4",
    "lcer": "#ff7f0e",
    "count": "#2ca02c",
    "none": "#d62728",
}
FALLBACK_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

DIFFICULTY_RANK = {"easy": 0, "medium": 1, "hard": 2}

LABELS = {
    "drl2": "DRL$^2$",
    "lcer": "LCER",
    "count": "count-based",
    "none": "no exploration",
}


class PlotError(ValueError):
    """An input CSV is missing, malformed, or empty."""


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[Path, ...]
    output: Path
    colors: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_COLORS))
    columns: int | None = None  # None: one row of panels
    x_label: str = "environment steps"
    y_label: str = "eventually discounted return"


def read_aggregate_csv(path) -> list[dict]:
    """Parse one aggregate CSV into typed rows.

    Raises PlotError naming any missing column, and for files with no
    data rows.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise PlotError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = [
            {
                "step": int(row["step"]),
                "mean_edr": float(row["mean_edr"]),
                "ci_low": float(row["ci_low"]),
                "ci_high": float(row["ci_high"]),
                "method": row["method"],
                "task": row["task"],
                "difficulty": row["difficulty"],
            }
            for row in reader
        ]
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def _panel_key(key: tuple[str, str]):
    task, difficulty = key
    return (task, DIFFICULTY_RANK.get(difficulty, len(DIFFICULTY_RANK)), difficulty)


def _method_key(method: str):
    try:
        return (METHOD_ORDER.index(method), method)
    except ValueError:
        return (len(METHOD_ORDER), method)


def _collect_panels(spec: FigureSpec) -> dict:
    """Group curves by (task, difficulty); one curve per method per panel."""
    if not spec.inputs:
        raise PlotError("no input CSVs")
    panels: dict[tuple[str, str], dict[str, list[dict]]] = {}
    schema_of: dict[tuple[str, str, str], Path] = {}
    for path in spec.inputs:
        for row in read_aggregate_csv(path):
            key = (row["task"], row["difficulty"])
            curve_key = (row["task"], row["difficulty"], row["method"])
            owner = schema_of.setdefault(curve_key, Path(path))
            if owner != Path(path):
                raise PlotError(
                    f"duplicate curve {curve_key} in {path} (already in {owner})"
                )
            panels.setdefault(key, {}).setdefault(row["method"], []).append(row)
    return {
        key: dict(sorted(panels[key].items(), key=lambda kv: _method_key(kv[0])))
        for key in sorted(panels, key=_panel_key)
    }


def _color_table(spec: FigureSpec, panels: dict) -> dict[str, str]:
    table = dict(spec.colors)
    spare = iter(FALLBACK_COLORS)
    for curves in panels.values():
        for method in curves:
            if method not in table:
                table[method] = next(spare, "#000000")
    return table


def plot_curves(spec: FigureSpec) -> Path:
    """Render one panel per (task, difficulty): smoothed-mean lines with
    shaded CI bands, one per method. Returns the output path."""
    panels = _collect_panels(spec)
    colors = _color_table(spec, panels)

    count = len(panels)
    cols = spec.columns or count
    rows = math.ceil(count / cols)
    fig = Figure(figsize=(4.0 * cols, 3.0 * rows), constrained_layout=True)
    axes = fig.subplots(rows, cols, squeeze=False, sharey=False)

    for index, (key, curves) in enumerate(panels.items()):
        ax = axes[index // cols][index % cols]
        for method, rows_ in curves.items():
            steps = [r["step"] for r in rows_]
            mean = [r["mean_edr"] for r in rows_]
            low = [r["ci_low"] for r in rows_]
            high = [r["ci_high"] for r in rows_]
            color = colors[method]
            ax.fill_between(steps, low, high, color=color, alpha=0.25, linewidth=0)
            ax.plot(steps, mean, color=color, label=LABELS.get(method, method))
        task, difficulty = key
        ax.set_title(f"{task} ({difficulty})")
        ax.set_xlabel(spec.x_label)
        ax.set_ylabel(spec.y_label)
        if index == 0:
            ax.legend(loc="upper left")
    for index in range(count, rows * cols):
        axes[index // cols][index % cols].set_axis_off()

    spec.output.parent.mkdir(parents=True, exist_ok=True)
    suffix = spec.output.suffix.lower()
    metadata = None
    if suffix == ".svg":
        metadata = {"Date": None}
    elif suffix == ".pdf":
        metadata = {"CreationDate": None}
    with matplotlib.rc_context({"svg.hashsalt": "ltlrl-plots", "svg.fonttype": "none"}):
        fig.savefig(spec.output, metadata=metadata)
    return spec.output
