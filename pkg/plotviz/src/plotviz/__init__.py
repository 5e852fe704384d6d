"""Figure rendering for ns3dvar run directories.

Consumes the primary package's CSV outputs (modes.csv, error.csv,
ensemble.csv) by schema only; no import of the primary package.
"""

from .render import render_ensemble_figure, render_forward_figure

__version__ = "0.1.0"

__all__ = ["render_forward_figure", "render_ensemble_figure"]
