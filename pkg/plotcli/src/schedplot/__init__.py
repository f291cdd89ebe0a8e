"""Learning-curve figures from scheduling campaign CSVs."""

from .aggregate import PlotSpec, SchemeCurve, aggregate, moving_average, read_metrics
from .render import render

__all__ = ["PlotSpec", "SchemeCurve", "aggregate", "moving_average",
           "read_metrics", "render"]
__version__ = "0.1.0"
