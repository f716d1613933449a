"""Figure generation for splitting-integrator convergence CSVs."""

from .io import (
    CONVERGENCE_COLUMNS,
    ERRORFIELD_1D_COLUMNS,
    ERRORFIELD_2D_COLUMNS,
    SchemaError,
    load_convergence,
    load_errorfield,
)
from .plots import GUIDE_ORDERS, plot_convergence, plot_errorfield, plot_flows

__all__ = [
    "CONVERGENCE_COLUMNS",
    "ERRORFIELD_1D_COLUMNS",
    "ERRORFIELD_2D_COLUMNS",
    "GUIDE_ORDERS",
    "SchemaError",
    "load_convergence",
    "load_errorfield",
    "plot_convergence",
    "plot_errorfield",
    "plot_flows",
]

__version__ = "0.1.0"
