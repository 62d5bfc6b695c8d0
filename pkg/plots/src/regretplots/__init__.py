"""Figure generation for robustcb benchmark result files."""

from .figures import KINDS, FigureSpec, plot
from .schema import (
    BoundsTable,
    Curve,
    SchemaError,
    Summary,
    read_bounds,
    read_curve,
    read_summary,
)

__version__ = "0.1.0"
