"""Figure rendering for temrec sweep and comparison CSVs."""

from .render import MissingColumnError, PlotSpec, render_svp_comparison, render_sweep

__version__ = "0.1.0"
