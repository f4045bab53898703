"""Interpreter for a small compass-and-straightedge construction language.

Statements have the form ``name[*] = line(pt, pt) | circle(pt, pt)`` where a
point expression is ``pN()`` (free point), ``pN(obj)`` (uniform on an
object), or ``pN(obj1, obj2)`` (uniform over the objects' intersection
points). A point name is bound on first use and reused afterwards. Starred
objects are construction helpers and are not rendered. circle(a, b) is
centered at a through b; line(a, b) is the segment from a to b.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ..primitives import Circle, LineSegment, Scene, Style

_STMT_RE = re.compile(
    r"^\s*(?P<name>[A-Za-z]\w*?)(?P<star>\*?)\s*=\s*(?P<kind>line|circle)\s*\("
    r"\s*(?P<p1>p\w+\s*\([^()]*\))\s*,\s*(?P<p2>p\w+\s*\([^()]*\))\s*\)\s*,?\s*$"
)
_POINT_RE = re.compile(r"^(?P<name>p\w+)\s*\(\s*(?P<args>[^()]*)\s*\)$")

PROGRAM_RETRY_BUDGET = 100
_CENTRAL_FRACTION = 0.6  # free points sample from the central 60% of canvas


class GeoError(Exception):
    pass


@dataclass(frozen=True)
class PointExpr:
    name: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Statement:
    name: str
    kind: str  # "line" | "circle"
    p1: PointExpr
    p2: PointExpr
    visible: bool


@dataclass(frozen=True)
class GeoProgram:
    statements: tuple[Statement, ...]


@dataclass
class GeoLine:
    a: np.ndarray
    b: np.ndarray


@dataclass
class GeoCircle:
    center: np.ndarray
    radius: float


def parse_program(lines) -> GeoProgram:
    """Parse statement strings; names must be unique, references defined."""
    statements = []
    defined: set[str] = set()
    for raw in lines:
        raw = raw.strip().strip('"')
        if not raw:
            continue
        m = _STMT_RE.match(raw)
        if not m:
            raise GeoError(f"malformed statement: {raw!r}")
        name = m.group("name")
        if name in defined:
            raise GeoError(f"duplicate object name {name!r}")
        exprs = []
        for g in ("p1", "p2"):
            pm = _POINT_RE.match(m.group(g).strip())
            if not pm:
                raise GeoError(f"malformed point expression in {raw!r}")
            args = tuple(a.strip() for a in pm.group("args").split(",") if a.strip())
            if len(args) > 2:
                raise GeoError(f"point takes at most 2 constraints: {raw!r}")
            for a in args:
                if a not in defined:
                    raise GeoError(f"reference to undefined object {a!r} in {raw!r}")
            exprs.append(PointExpr(name=pm.group("name"), args=args))
        statements.append(
            Statement(
                name=name,
                kind=m.group("kind"),
                p1=exprs[0],
                p2=exprs[1],
                visible=not m.group("star"),
            )
        )
        defined.add(name)
    if not statements:
        raise GeoError("empty program")
    return GeoProgram(statements=tuple(statements))


def _line_line(l1: GeoLine, l2: GeoLine) -> list[np.ndarray]:
    d1 = l1.b - l1.a
    d2 = l2.b - l2.a
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-12:
        return []
    t = ((l2.a[0] - l1.a[0]) * d2[1] - (l2.a[1] - l1.a[1]) * d2[0]) / denom
    u = ((l2.a[0] - l1.a[0]) * d1[1] - (l2.a[1] - l1.a[1]) * d1[0]) / denom
    if -1e-9 <= t <= 1 + 1e-9 and -1e-9 <= u <= 1 + 1e-9:
        return [l1.a + t * d1]
    return []


def _line_circle(l: GeoLine, c: GeoCircle) -> list[np.ndarray]:
    d = l.b - l.a
    f = l.a - c.center
    A = float(d @ d)
    B = 2.0 * float(f @ d)
    C = float(f @ f) - c.radius**2
    disc = B * B - 4 * A * C
    if disc < 0 or A < 1e-12:
        return []
    out = []
    for sign in (-1.0, 1.0):
        t = (-B + sign * math.sqrt(disc)) / (2 * A)
        if -1e-9 <= t <= 1 + 1e-9:
            out.append(l.a + t * d)
    return out


def _circle_circle(c1: GeoCircle, c2: GeoCircle) -> list[np.ndarray]:
    d = float(np.linalg.norm(c2.center - c1.center))
    if d < 1e-12 or d > c1.radius + c2.radius or d < abs(c1.radius - c2.radius):
        return []
    a = (c1.radius**2 - c2.radius**2 + d * d) / (2 * d)
    h2 = c1.radius**2 - a * a
    if h2 < 0:
        return []
    h = math.sqrt(h2)
    u = (c2.center - c1.center) / d
    mid = c1.center + a * u
    n = np.array([-u[1], u[0]])
    if h < 1e-9:
        return [mid]
    return [mid + h * n, mid - h * n]


def _intersections(o1, o2) -> list[np.ndarray]:
    if isinstance(o1, GeoLine) and isinstance(o2, GeoLine):
        return _line_line(o1, o2)
    if isinstance(o1, GeoLine) and isinstance(o2, GeoCircle):
        return _line_circle(o1, o2)
    if isinstance(o1, GeoCircle) and isinstance(o2, GeoLine):
        return _line_circle(o2, o1)
    return _circle_circle(o1, o2)


class _EmptyIntersection(Exception):
    pass


def _eval_point(expr: PointExpr, points, objects, canvas: int, r: np.random.Generator):
    if expr.name in points:
        return points[expr.name]
    if len(expr.args) == 0:
        lo = canvas * (1 - _CENTRAL_FRACTION) / 2
        hi = canvas - lo
        p = np.array([r.uniform(lo, hi), r.uniform(lo, hi)])
    elif len(expr.args) == 1:
        obj = objects[expr.args[0]]
        if isinstance(obj, GeoLine):
            t = r.uniform(0.0, 1.0)
            p = obj.a + t * (obj.b - obj.a)
        else:
            th = r.uniform(0.0, 2 * math.pi)
            p = obj.center + obj.radius * np.array([math.cos(th), math.sin(th)])
    else:
        candidates = _intersections(objects[expr.args[0]], objects[expr.args[1]])
        if not candidates:
            raise _EmptyIntersection(expr.name)
        p = candidates[int(r.integers(0, len(candidates)))]
    points[expr.name] = p
    return p


def interpret(
    prog: GeoProgram,
    canvas: int,
    rng,
    line_width: float = 3.0,
    color=(0, 0, 0),
) -> tuple[Scene, dict]:
    """Sample a concrete construction; returns (scene of visible objects,
    point bindings). Retries the whole program when an intersection is empty.
    """
    r = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    for _ in range(PROGRAM_RETRY_BUDGET):
        points: dict[str, np.ndarray] = {}
        objects: dict[str, GeoLine | GeoCircle] = {}
        try:
            for stmt in prog.statements:
                p1 = _eval_point(stmt.p1, points, objects, canvas, r)
                p2 = _eval_point(stmt.p2, points, objects, canvas, r)
                if stmt.kind == "line":
                    objects[stmt.name] = GeoLine(a=p1, b=p2)
                else:
                    radius = float(np.linalg.norm(p2 - p1))
                    if radius < 1e-9:
                        raise _EmptyIntersection(stmt.name)
                    objects[stmt.name] = GeoCircle(center=p1, radius=radius)
        except _EmptyIntersection:
            continue
        prims = []
        for stmt in prog.statements:
            if not stmt.visible:
                continue
            obj = objects[stmt.name]
            if isinstance(obj, GeoLine):
                prims.append(
                    LineSegment(
                        endpoints=(tuple(obj.a), tuple(obj.b)),
                        color=color, line_width=line_width,
                    )
                )
            else:
                prims.append(
                    Circle(
                        center=tuple(obj.center), radius=obj.radius,
                        color=color, style=Style.OUTLINED,
                    )
                )
        scene = Scene(width=canvas, height=canvas, objects=tuple(prims))
        bindings = {k: (float(v[0]), float(v[1])) for k, v in points.items()}
        return scene, bindings
    raise GeoError("construction retry budget exhausted")


# The two newly constructed angle concepts. A right triangle is built from
# the perpendicular bisector construction; the acute vertex sees the
# hypotenuse's complement, the obtuse vertex sits inside the triangle and
# sees the hypotenuse under more than a right angle.
ACUTE_ANGLE_PROGRAM = (
    "l1* = line(p1(), p2())",
    "c1* = circle(p1(), p2())",
    "c2* = circle(p2(), p1())",
    "l2* = line(p3(c1, c2), p4(c1, c2))",
    "l4 = line(p5(l1, l2), p7(l1))",
    "l5 = line(p6(l2), p7(l1))",
)

OBTUSE_ANGLE_PROGRAM = (
    "l1* = line(p1(), p2())",
    "c1* = circle(p1(), p2())",
    "c2* = circle(p2(), p1())",
    "l2* = line(p3(c1, c2), p4(c1, c2))",
    "l3* = line(p5(l1, l2), p6(l2))",
    "l4* = line(p5(l1, l2), p7(l1))",
    "l5* = line(p6(l2), p7(l1))",
    "l6* = line(p8(l3, l4), p9(l5))",
    "l100* = line(p5(c1, c2), p10(l6))",
    "c101* = circle(p5(c1, c2), p10(l6))",
    "c102* = circle(p10(l6), p5(c1, c2))",
    "l101* = line(p100(c101, c102), p101(c101, c102))",
    "l7 = line(p11(l100, l101), p6(l2))",
    "l8 = line(p11(l100, l101), p7(l1))",
)
