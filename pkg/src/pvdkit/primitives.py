"""Primal Visual Description (PVD) primitive types and their canonical text form.

The ontology has 9 shape types: circle, ellipse, rectangle, triangle, polygon,
line_segment, path, grid, graph. Every primitive carries an RGB color and a
style ("filled shape" / "outlined shape"); stroke-only kinds (line_segment,
path, grid, graph) are always outlined and carry an explicit line width.

Serialization is a canonical JSON object per primitive: "type" first, then
geometry fields, then "color", then "style". Numbers are emitted as integers
when integral, otherwise with two decimal places.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry

log = logging.getLogger(__name__)

Point = tuple[float, float]
Color = tuple[int, int, int]

DEFAULT_LINE_WIDTH = 3.0

# Relative / angular tolerances for the rectangle invariant. Tight enough to
# reject any real quadrilateral-vs-rectangle confusion, loose enough that the
# canonical 2-decimal serialization of a rotated rectangle stays valid.
RECT_SIDE_RTOL = 1e-3
RECT_ANGLE_ATOL = 1e-3


class Style(enum.Enum):
    FILLED = "filled shape"
    OUTLINED = "outlined shape"


class PvdError(Exception):
    """Base class for PVD format errors."""


class PvdValidationError(PvdError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class PvdParseError(PvdError):
    pass


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float
    color: Color
    style: Style = Style.FILLED
    type_name = "circle"


@dataclass(frozen=True)
class Ellipse:
    center: Point
    major_axis: float
    minor_axis: float
    rotation: float  # degrees in [0, 180)
    color: Color
    style: Style = Style.FILLED
    type_name = "ellipse"


@dataclass(frozen=True)
class Rectangle:
    vertices: tuple[Point, ...]
    color: Color
    style: Style = Style.FILLED
    type_name = "rectangle"


@dataclass(frozen=True)
class Triangle:
    vertices: tuple[Point, ...]
    color: Color
    style: Style = Style.FILLED
    type_name = "triangle"


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[Point, ...]
    color: Color
    style: Style = Style.FILLED
    type_name = "polygon"


@dataclass(frozen=True)
class LineSegment:
    endpoints: tuple[Point, Point]
    color: Color
    line_width: float = DEFAULT_LINE_WIDTH
    style: Style = field(default=Style.OUTLINED)
    type_name = "line_segment"


@dataclass(frozen=True)
class Polyline:
    """Open non-intersecting polyline; ontology type string "path"."""

    vertices: tuple[Point, ...]
    color: Color
    line_width: float = DEFAULT_LINE_WIDTH
    style: Style = field(default=Style.OUTLINED)
    type_name = "path"


@dataclass(frozen=True)
class Grid:
    size: tuple[int, int]  # (rows, cols)
    vertices: tuple[Point, ...]  # row-major, rows*cols entries
    edges: tuple[tuple[int, int], ...]
    color: Color
    line_width: float = DEFAULT_LINE_WIDTH
    style: Style = field(default=Style.OUTLINED)
    type_name = "grid"


@dataclass(frozen=True)
class Graph:
    vertices: tuple[Point, ...]
    edges: tuple[tuple[int, int], ...]
    color: Color
    line_width: float = DEFAULT_LINE_WIDTH
    style: Style = field(default=Style.OUTLINED)
    type_name = "graph"


PvdPrimitive = (
    Circle | Ellipse | Rectangle | Triangle | Polygon | LineSegment | Polyline | Grid | Graph
)

STROKE_TYPES = (LineSegment, Polyline, Grid, Graph)

_TYPE_MAP: dict[str, type] = {
    cls.type_name: cls
    for cls in (Circle, Ellipse, Rectangle, Triangle, Polygon, LineSegment, Polyline, Grid, Graph)
}


@dataclass(frozen=True)
class Scene:
    """Ordered list of primitives on a canvas; first object is bottom-most."""

    width: int
    height: int
    background: Color = (255, 255, 255)
    objects: tuple[PvdPrimitive, ...] = ()

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError("scene canvas must be at least 32x32")


@dataclass(frozen=True)
class PerceivedObject:
    key: str
    primitives: tuple[PvdPrimitive, ...]
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class PerceptionResult:
    """One entry per decomposed path; keys are object_0, object_1, ..."""

    objects: tuple[PerceivedObject, ...] = ()

    def __post_init__(self):
        for i, obj in enumerate(self.objects):
            if obj.key != f"object_{i}":
                raise ValueError(f"expected key object_{i}, got {obj.key!r}")

    def all_primitives(self) -> list[PvdPrimitive]:
        return [p for obj in self.objects for p in obj.primitives]


def from_entries(entries) -> PerceptionResult:
    """Build a PerceptionResult from an iterable of primitive lists."""
    objs = tuple(
        PerceivedObject(key=f"object_{i}", primitives=tuple(prims))
        for i, prims in enumerate(entries)
    )
    return PerceptionResult(objects=objs)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _finite(values) -> bool:
    for v in values:
        if not (isinstance(v, (int, float)) and abs(v) != float("inf") and v == v):
            return False
    return True


def _check_points(points, out: list[str]) -> bool:
    flat = [c for p in points for c in p]
    if not _finite(flat):
        out.append("coordinates must be finite")
        return False
    return True


def _check_color(color, out: list[str]):
    if len(color) != 3 or any(not isinstance(c, int) or not 0 <= c <= 255 for c in color):
        out.append("color channel out of range")


def _check_edges(vertices, edges, out: list[str], kind: str) -> bool:
    n = len(vertices)
    ok = True
    for e in edges:
        i, j = e
        if not (0 <= i < n and 0 <= j < n):
            out.append(f"{kind} edge references invalid vertex")
            ok = False
            continue
        if i == j:
            out.append(f"{kind} edge endpoints must be distinct")
            ok = False
    if not ok:
        return False
    # Union-find connectivity over all vertices.
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    roots = {find(i) for i in range(n)}
    if len(roots) > 1:
        out.append(f"{kind} edges must connect all vertices")
        return False
    return True


def validate(p: PvdPrimitive) -> list[str]:
    """Return every violated invariant (empty list means valid)."""
    out: list[str] = []
    _check_color(p.color, out)
    if isinstance(p, STROKE_TYPES):
        if p.style is not Style.OUTLINED:
            out.append(f"{p.type_name} style must be outlined shape")
        if not _finite([p.line_width]) or p.line_width < 1:
            out.append("line_width must be >= 1")

    if isinstance(p, Circle):
        _check_points([p.center], out)
        if not _finite([p.radius]) or p.radius <= 0:
            out.append("radius must be positive")
    elif isinstance(p, Ellipse):
        _check_points([p.center], out)
        if not _finite([p.major_axis]) or p.major_axis <= 0:
            out.append("major_axis must be positive")
        if not _finite([p.minor_axis]) or p.minor_axis <= 0:
            out.append("minor_axis must be positive")
        if _finite([p.major_axis, p.minor_axis]) and p.major_axis < p.minor_axis:
            out.append("major_axis must be >= minor_axis")
        if not _finite([p.rotation]) or not 0 <= p.rotation < 180:
            out.append("rotation must be in [0, 180)")
    elif isinstance(p, Rectangle):
        if len(p.vertices) != 4:
            out.append("rectangle requires 4 vertices")
        elif _check_points(p.vertices, out):
            v = np.asarray(p.vertices, dtype=float)
            sides = [v[(i + 1) % 4] - v[i] for i in range(4)]
            lens = [float(np.linalg.norm(s)) for s in sides]
            if min(lens) <= 0:
                out.append("rectangle has zero-length side")
            else:
                if (
                    abs(lens[0] - lens[2]) > RECT_SIDE_RTOL * max(lens[0], lens[2])
                    or abs(lens[1] - lens[3]) > RECT_SIDE_RTOL * max(lens[1], lens[3])
                ):
                    out.append("rectangle opposite sides must be equal")
                for i in range(4):
                    a, b = sides[i], sides[(i + 1) % 4]
                    cosv = float(a @ b) / (lens[i] * lens[(i + 1) % 4])
                    ang = math.acos(max(-1.0, min(1.0, cosv)))
                    if abs(ang - math.pi / 2) > RECT_ANGLE_ATOL:
                        out.append("rectangle corners must be perpendicular")
                        break
    elif isinstance(p, Triangle):
        if len(p.vertices) != 3:
            out.append("triangle requires 3 vertices")
        else:
            _check_points(p.vertices, out)
    elif isinstance(p, Polygon):
        if len(p.vertices) < 5:
            out.append("polygon requires >= 5 vertices")
        elif _check_points(p.vertices, out):
            if geometry.polyline_self_intersects(p.vertices, closed=True):
                out.append("polygon self-intersects")
    elif isinstance(p, LineSegment):
        if len(p.endpoints) != 2:
            out.append("line_segment requires 2 endpoints")
        else:
            _check_points(p.endpoints, out)
    elif isinstance(p, Polyline):
        if len(p.vertices) < 3:
            out.append("path requires >= 3 vertices")
        elif _check_points(p.vertices, out):
            if geometry.polyline_self_intersects(p.vertices, closed=False):
                out.append("path self-intersects")
    elif isinstance(p, Grid):
        rows, cols = p.size
        if rows < 2 or cols < 2:
            out.append("grid size must be at least 2x2")
        if len(p.vertices) != rows * cols:
            out.append("grid vertex count must equal rows*cols")
        elif _check_points(p.vertices, out):
            if _check_edges(p.vertices, p.edges, out, "grid"):
                for i, j in p.edges:
                    ri, ci = divmod(i, cols)
                    rj, cj = divmod(j, cols)
                    if abs(ri - rj) + abs(ci - cj) != 1:
                        out.append("grid edges must join 4-adjacent vertices")
                        break
    elif isinstance(p, Graph):
        if len(p.vertices) < 2:
            out.append("graph requires >= 2 vertices")
        elif _check_points(p.vertices, out):
            _check_edges(p.vertices, p.edges, out, "graph")
    else:
        out.append(f"unknown primitive type {type(p).__name__}")
    return out


# ---------------------------------------------------------------------------
# Canonical text serialization
# ---------------------------------------------------------------------------


def _fmt_num(x) -> str:
    q = round(float(x), 2)
    if q == int(q):
        return str(int(q))
    return f"{q:.2f}"


def _emit_value(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, bool):
        raise TypeError("booleans not part of the schema")
    if isinstance(v, (int, float)):
        return _fmt_num(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_emit_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _emit_object(items: list[tuple[str, object]]) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_emit_value(v)}" for k, v in items) + "}"


def _primitive_fields(p: PvdPrimitive) -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = [("type", p.type_name)]
    if isinstance(p, Circle):
        items += [("center", list(p.center)), ("radius", p.radius)]
    elif isinstance(p, Ellipse):
        items += [
            ("center", list(p.center)),
            ("major_axis", p.major_axis),
            ("minor_axis", p.minor_axis),
            ("rotation", p.rotation),
        ]
    elif isinstance(p, (Rectangle, Triangle, Polygon)):
        items += [("vertices", [list(v) for v in p.vertices])]
    elif isinstance(p, LineSegment):
        items += [
            ("endpoints", [list(v) for v in p.endpoints]),
            ("line_width", p.line_width),
        ]
    elif isinstance(p, Polyline):
        items += [
            ("vertices", [list(v) for v in p.vertices]),
            ("line_width", p.line_width),
        ]
    elif isinstance(p, Grid):
        items += [
            ("size", list(p.size)),
            ("vertices", [list(v) for v in p.vertices]),
            ("edges", [list(e) for e in p.edges]),
            ("line_width", p.line_width),
        ]
    elif isinstance(p, Graph):
        items += [
            ("vertices", [list(v) for v in p.vertices]),
            ("edges", [list(e) for e in p.edges]),
            ("line_width", p.line_width),
        ]
    items += [("color", list(p.color)), ("style", p.style.value)]
    return items


def serialize_primitive(p: PvdPrimitive) -> str:
    """Canonical single-line JSON text for one primitive."""
    violations = validate(p)
    if violations:
        raise PvdValidationError(violations)
    return _emit_object(_primitive_fields(p))


_REQUIRED_KEYS: dict[str, tuple[str, ...]] = {
    "circle": ("type", "center", "radius", "color", "style"),
    "ellipse": ("type", "center", "major_axis", "minor_axis", "rotation", "color", "style"),
    "rectangle": ("type", "vertices", "color", "style"),
    "triangle": ("type", "vertices", "color", "style"),
    "polygon": ("type", "vertices", "color", "style"),
    "line_segment": ("type", "endpoints", "line_width", "color", "style"),
    "path": ("type", "vertices", "line_width", "color", "style"),
    "grid": ("type", "size", "vertices", "edges", "line_width", "color", "style"),
    "graph": ("type", "vertices", "edges", "line_width", "color", "style"),
}


def _parse_point(v, key: str) -> Point:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise PvdParseError(f"{key} must be an [x, y] pair")
    x, y = v
    if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in (x, y)):
        raise PvdParseError(f"{key} must contain numbers")
    return (float(x), float(y))


def _parse_points(v, key: str) -> tuple[Point, ...]:
    if not isinstance(v, list):
        raise PvdParseError(f"{key} must be a list of points")
    return tuple(_parse_point(q, key) for q in v)


def _parse_color(v) -> Color:
    if not isinstance(v, list) or len(v) != 3:
        raise PvdParseError("color must be an [r, g, b] triple")
    for c in v:
        if not isinstance(c, int) or isinstance(c, bool) or not 0 <= c <= 255:
            raise PvdParseError("color channel out of range")
    return (v[0], v[1], v[2])


def _parse_style(v) -> Style:
    for s in Style:
        if s.value == v:
            return s
    raise PvdParseError(f"unknown style {v!r}")


def _parse_number(v, key: str) -> float:
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise PvdParseError(f"{key} must be a number")
    return float(v)


def primitive_from_dict(d: dict) -> PvdPrimitive:
    """Build and validate a primitive from a parsed JSON object."""
    if not isinstance(d, dict):
        raise PvdParseError("primitive must be a JSON object")
    t = d.get("type")
    if t is None:
        raise PvdParseError("missing field type")
    if t not in _TYPE_MAP:
        raise PvdParseError(f"unknown type {t!r}")
    required = _REQUIRED_KEYS[t]
    for k in required:
        if k not in d:
            raise PvdParseError(f"missing field {k}")
    for k in d:
        if k not in required:
            raise PvdParseError(f"unknown key {k}")

    color = _parse_color(d["color"])
    style = _parse_style(d["style"])
    if t == "circle":
        p: PvdPrimitive = Circle(
            center=_parse_point(d["center"], "center"),
            radius=_parse_number(d["radius"], "radius"),
            color=color,
            style=style,
        )
    elif t == "ellipse":
        p = Ellipse(
            center=_parse_point(d["center"], "center"),
            major_axis=_parse_number(d["major_axis"], "major_axis"),
            minor_axis=_parse_number(d["minor_axis"], "minor_axis"),
            rotation=_parse_number(d["rotation"], "rotation"),
            color=color,
            style=style,
        )
    elif t == "rectangle":
        p = Rectangle(vertices=_parse_points(d["vertices"], "vertices"), color=color, style=style)
    elif t == "triangle":
        p = Triangle(vertices=_parse_points(d["vertices"], "vertices"), color=color, style=style)
    elif t == "polygon":
        p = Polygon(vertices=_parse_points(d["vertices"], "vertices"), color=color, style=style)
    elif t == "line_segment":
        eps = _parse_points(d["endpoints"], "endpoints")
        if len(eps) != 2:
            raise PvdParseError("endpoints must contain exactly 2 points")
        p = LineSegment(
            endpoints=(eps[0], eps[1]),
            line_width=_parse_number(d["line_width"], "line_width"),
            color=color,
            style=style,
        )
    elif t == "path":
        p = Polyline(
            vertices=_parse_points(d["vertices"], "vertices"),
            line_width=_parse_number(d["line_width"], "line_width"),
            color=color,
            style=style,
        )
    elif t == "grid":
        size = d["size"]
        if not isinstance(size, list) or len(size) != 2:
            raise PvdParseError("size must be [rows, cols]")
        p = Grid(
            size=(int(size[0]), int(size[1])),
            vertices=_parse_points(d["vertices"], "vertices"),
            edges=_parse_edges(d["edges"]),
            line_width=_parse_number(d["line_width"], "line_width"),
            color=color,
            style=style,
        )
    else:  # graph
        p = Graph(
            vertices=_parse_points(d["vertices"], "vertices"),
            edges=_parse_edges(d["edges"]),
            line_width=_parse_number(d["line_width"], "line_width"),
            color=color,
            style=style,
        )
    violations = validate(p)
    if violations:
        raise PvdParseError("; ".join(violations))
    return p


def _parse_edges(v) -> tuple[tuple[int, int], ...]:
    if not isinstance(v, list):
        raise PvdParseError("edges must be a list of index pairs")
    out = []
    for e in v:
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(i, int) for e2 in [e] for i in e2):
            raise PvdParseError("edges must be a list of index pairs")
        out.append((e[0], e[1]))
    return tuple(out)


def parse_primitive(text: str) -> PvdPrimitive:
    """Parse one canonical primitive object from text."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PvdParseError(f"malformed primitive text: {exc}") from exc
    return primitive_from_dict(d)


def primitive_to_dict(p: PvdPrimitive) -> dict:
    """Plain-JSON dict form (numbers quantized as in serialization)."""
    return json.loads(serialize_primitive(p))


def primitives_equal(a: PvdPrimitive, b: PvdPrimitive, tol: float = 1e-9) -> bool:
    """Structural equality with a coordinate tolerance."""
    if type(a) is not type(b) or a.color != b.color or a.style != b.style:
        return False

    def close(u, v):
        return abs(u - v) <= tol

    def pts_close(us, vs):
        return len(us) == len(vs) and all(
            close(u[0], v[0]) and close(u[1], v[1]) for u, v in zip(us, vs)
        )

    if isinstance(a, Circle):
        return pts_close([a.center], [b.center]) and close(a.radius, b.radius)
    if isinstance(a, Ellipse):
        return (
            pts_close([a.center], [b.center])
            and close(a.major_axis, b.major_axis)
            and close(a.minor_axis, b.minor_axis)
            and close(a.rotation, b.rotation)
        )
    if isinstance(a, (Rectangle, Triangle, Polygon)):
        return pts_close(a.vertices, b.vertices)
    if isinstance(a, LineSegment):
        return pts_close(a.endpoints, b.endpoints) and close(a.line_width, b.line_width)
    if isinstance(a, Polyline):
        return pts_close(a.vertices, b.vertices) and close(a.line_width, b.line_width)
    if isinstance(a, Grid):
        return (
            a.size == b.size
            and pts_close(a.vertices, b.vertices)
            and a.edges == b.edges
            and close(a.line_width, b.line_width)
        )
    if isinstance(a, Graph):
        return (
            pts_close(a.vertices, b.vertices)
            and a.edges == b.edges
            and close(a.line_width, b.line_width)
        )
    return False


# ---------------------------------------------------------------------------
# Whole-image aggregation
# ---------------------------------------------------------------------------


def aggregate_perception(result: PerceptionResult) -> str:
    """Aggregate per-path primitive lists under object_i keys as one JSON map."""
    if not result.objects:
        log.warning("aggregating an empty perception result")
        return "{}"
    parts = []
    for obj in result.objects:
        prims = "[" + ", ".join(serialize_primitive(p) for p in obj.primitives) + "]"
        parts.append(f"{json.dumps(obj.key)}: {prims}")
    return "{" + ", ".join(parts) + "}"


def parse_perception(text: str) -> PerceptionResult:
    """Inverse of aggregate_perception."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PvdParseError(f"malformed perception text: {exc}") from exc
    if not isinstance(d, dict):
        raise PvdParseError("perception must be a JSON object")
    entries = []
    for i in range(len(d)):
        key = f"object_{i}"
        if key not in d:
            raise PvdParseError(f"missing key {key}")
        prims = d[key]
        if not isinstance(prims, list):
            raise PvdParseError(f"{key} must hold a list of primitives")
        entries.append([primitive_from_dict(q) for q in prims])
    return from_entries(entries)
