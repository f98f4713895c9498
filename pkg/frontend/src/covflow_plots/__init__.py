"""Figure rendering for covflow monitor and sweep outputs."""

from .render import PlotJob, SchemaError, render

__version__ = "0.1.0"

__all__ = ["PlotJob", "SchemaError", "render"]
