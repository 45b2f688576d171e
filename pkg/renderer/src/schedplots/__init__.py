"""Batch renderer turning link-scheduling metric CSVs into static figures."""

from .render import prepare_bars_data, prepare_boxplot_data, prepare_curve_data, render
from .specs import FigureSpec, load_spec

__version__ = "0.1.0"
