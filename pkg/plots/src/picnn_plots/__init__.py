"""Figure rendering for picnn experiment outputs."""
from .figures import KINDS, PlotJob, SchemaError, render, slope_fit

__all__ = ["KINDS", "PlotJob", "SchemaError", "render", "slope_fit"]

__version__ = "0.1.0"
