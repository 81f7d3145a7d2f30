"""Navigation forests on Poisson patterns and their traffic flow."""

from .geometry import CrossingSurface, Domain, surface_measure
from .navigation import (DEAD_END, ORIGIN_SINK, NavigationForest, NavigationScheme,
                         build_forest)
from .pointprocess import Affine, Constant, Grid, Radial, sample_pattern
from .flow import accumulate_traffic, crossing_set, max_deviation

__all__ = [
    "CrossingSurface", "Domain", "surface_measure", "DEAD_END", "ORIGIN_SINK",
    "NavigationForest", "NavigationScheme", "build_forest", "Affine", "Constant",
    "Grid", "Radial", "sample_pattern", "accumulate_traffic", "crossing_set",
    "max_deviation",
]
