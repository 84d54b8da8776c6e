"""Lengths, distances, areas and balls for singular conformal metrics on the chart."""

from .area import area, ball_area, disc_integral
from .core import PolyCurve, SingularMetric
from .distance import (
    DistanceEstimate,
    DistanceField,
    distance,
    distance_closure,
    distance_field,
    metric_ball,
)
from .grid import GridGraph, build_grid
from .lengths import curve_length, segment_length

__all__ = [
    "DistanceEstimate",
    "DistanceField",
    "GridGraph",
    "PolyCurve",
    "SingularMetric",
    "area",
    "ball_area",
    "build_grid",
    "curve_length",
    "disc_integral",
    "distance",
    "distance_closure",
    "distance_field",
    "metric_ball",
    "segment_length",
]
