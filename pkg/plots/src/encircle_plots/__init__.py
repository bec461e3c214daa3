"""Offline figures from simulation trace files.

Everything here works from the published trace.csv / meta.json contract
alone; the simulator package is never imported.
"""

__version__ = "0.1.0"

from .figures import KINDS, EmptyRangeError, MissingColumnError, PlotError, PlotSpec, render
from .trace import load_meta_nearby, load_trace, target_count, trace_column

__all__ = [
    "KINDS",
    "EmptyRangeError",
    "MissingColumnError",
    "PlotError",
    "PlotSpec",
    "render",
    "load_meta_nearby",
    "load_trace",
    "target_count",
    "trace_column",
]
