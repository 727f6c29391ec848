"""Figure rendering for wave-equation simulation runs."""

from .plots import (FUNCTIONAL_COLUMNS, KINDS, MAX_HEATMAP_COLUMNS, PlotSpec,
                    RenderInfo, VizError, render)

__all__ = ["FUNCTIONAL_COLUMNS", "KINDS", "MAX_HEATMAP_COLUMNS", "PlotSpec",
           "RenderInfo", "VizError", "render"]

__version__ = "0.1.0"
