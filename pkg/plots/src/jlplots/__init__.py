"""Offline figure rendering for the solver's CSV/JSON artifacts.

Four figure kinds: per-path state trajectories (one panel per CSV), and
log-log plots of solver cost, limit value error, and limit policy gap,
each overlaying the slope the report fitted (never refit here).
"""

from .readers import (
    PlotInputError,
    SeriesData,
    TrajectoryData,
    expand_inputs,
    load_series,
    load_trajectory,
)
from .render import loglog_figure, save_png, trajectories_figure

__version__ = "0.1.0"
