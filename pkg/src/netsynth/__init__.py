"""Sensor network topology synthesis: minimum-count k-coverage with
line-of-sight and connectivity over gridded 2-D regions, via a lazy
SAT+convex loop and an integer-covering pipeline, with hierarchical scaling
and an independent verifier."""

__version__ = "0.1.0"

from .geometry import Cell, GridRegion, Point, SensorSpec
from .placements import Placement, Sensor

__all__ = [
    "Cell",
    "GridRegion",
    "Placement",
    "Point",
    "Sensor",
    "SensorSpec",
    "__version__",
]
