"""figrender: figures from chainlab CSV/JSON outputs.

Consumes only the documented file formats (bifurcation.csv,
trajectory.csv, events.csv, report.json); all science stays upstream.
"""

from .io import SchemaMismatchError, read_bifurcation, read_ccm_report, \
    read_events, read_trajectory
from .render import (DEFAULT_DPI, RenderSpec, render, render_bifurcation,
                     render_ccm, render_trajectory, save)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_DPI",
    "RenderSpec",
    "SchemaMismatchError",
    "read_bifurcation",
    "read_ccm_report",
    "read_events",
    "read_trajectory",
    "render",
    "render_bifurcation",
    "render_ccm",
    "render_trajectory",
    "save",
    "__version__",
]
