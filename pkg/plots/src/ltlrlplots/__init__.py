"""Render learning-curve figures from aggregate CSVs."""

from .figures import DEFAULT_COLORS, FigureSpec, PlotError, plot_curves, read_aggregate_csv

__all__ = [
    "DEFAULT_COLORS",
    "FigureSpec",
    "PlotError",
    "plot_curves",
    "read_aggregate_csv",
]

__version__ = "0.1.0"
