"""Primal Visual Description toolkit.

Procedural <SVG, PVD> data generation, raster/vector conversion, incremental
path decomposition, deterministic primitive fitting, reconstruction-based
perception scoring, and low-level reasoning task benchmarks.
"""

__version__ = "0.1.0"

from .primitives import (  # noqa: F401
    Circle,
    Ellipse,
    Graph,
    Grid,
    LineSegment,
    PerceptionResult,
    Polygon,
    Polyline,
    PvdPrimitive,
    Rectangle,
    Scene,
    Style,
    Triangle,
    aggregate_perception,
    parse_perception,
    parse_primitive,
    serialize_primitive,
    validate,
)
