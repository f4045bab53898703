"""SVG subset parser/emitter and the vector document model.

Supported input: <svg> with width/height/viewBox, <path> elements using
M m L l H h V v C c Q q Z z with hex or rgb() fills, plus <rect>, <circle>
and <ellipse> normalized to paths. Everything else (transforms, groups,
strokes, gradients, text) is rejected with an error naming the offender.
Fill rule is even-odd throughout.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as etree
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .primitives import Color

_FLOAT_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


class SvgError(Exception):
    pass


# Commands: ("L", end) | ("C", c1, c2, end) | ("Q", c, end). A subpath starts
# at `start` and is always closed back to it.
@dataclass
class Subpath:
    start: tuple[float, float]
    commands: list[tuple] = field(default_factory=list)

    def flatten(self, tol: float) -> np.ndarray:
        pts = [self.start]
        cur = self.start
        for cmd in self.commands:
            if cmd[0] == "L":
                pts.append(cmd[1])
                cur = cmd[1]
            elif cmd[0] == "C":
                pts.extend(_flatten_cubic(cur, cmd[1], cmd[2], cmd[3], tol))
                cur = cmd[3]
            elif cmd[0] == "Q":
                c1 = _lerp(cur, cmd[1], 2.0 / 3.0)
                c2 = _lerp(cmd[2], cmd[1], 2.0 / 3.0)
                pts.extend(_flatten_cubic(cur, c1, c2, cmd[2], tol))
                cur = cmd[2]
            else:
                raise SvgError(f"unknown command {cmd[0]!r}")
        # Drop a duplicated closing vertex.
        if len(pts) > 1 and math.hypot(pts[-1][0] - pts[0][0], pts[-1][1] - pts[0][1]) < 1e-9:
            pts.pop()
        return np.array(pts, dtype=np.float64)

    def transformed(self, fn) -> "Subpath":
        cmds = []
        for cmd in self.commands:
            cmds.append((cmd[0], *[fn(p) for p in cmd[1:]]))
        return Subpath(start=fn(self.start), commands=cmds)


@dataclass
class VectorPath:
    fill: Color
    subpaths: list[Subpath]
    _area: float | None = field(default=None, repr=False)

    def flatten(self, tol: float = 0.25) -> list[np.ndarray]:
        return [sp.flatten(tol) for sp in self.subpaths]

    @property
    def area(self) -> float:
        """Even-odd filled area, assuming holes wind opposite to outers."""
        if self._area is None:
            signed = sum(geometry.polygon_signed_area(p) for p in self.flatten())
            self._area = abs(signed)
        return self._area

    def bbox(self) -> tuple[float, float, float, float]:
        pts = np.vstack(self.flatten())
        return (
            float(pts[:, 0].min()),
            float(pts[:, 1].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].max()),
        )


@dataclass
class VectorDocument:
    width: float
    height: float
    background: Color = (255, 255, 255)
    paths: list[VectorPath] = field(default_factory=list)

    def sorted_by_area(self) -> "VectorDocument":
        order = sorted(range(len(self.paths)), key=lambda i: -self.paths[i].area)
        return VectorDocument(
            width=self.width,
            height=self.height,
            background=self.background,
            paths=[self.paths[i] for i in order],
        )

    def single_path(self, index: int) -> "VectorDocument":
        return VectorDocument(
            width=self.width,
            height=self.height,
            background=self.background,
            paths=[self.paths[index]],
        )


def path_from_polygons(polys, fill: Color) -> VectorPath:
    subpaths = []
    for poly in polys:
        p = geometry.as_points(poly)
        sp = Subpath(start=(float(p[0, 0]), float(p[0, 1])))
        for q in p[1:]:
            sp.commands.append(("L", (float(q[0]), float(q[1]))))
        subpaths.append(sp)
    return VectorPath(fill=fill, subpaths=subpaths)


def flatten_path(path: VectorPath, tol: float) -> list[np.ndarray]:
    """Closed polylines approximating the path with chord error <= tol."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return path.flatten(tol)


def _lerp(a, b, t):
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def _flatten_cubic(p0, c1, c2, p1, tol: float, depth: int = 0) -> list[tuple[float, float]]:
    # Control-point distance to the chord bounds curve deviation (hull property).
    d1 = geometry.point_segment_distance(c1, p0, p1)
    d2 = geometry.point_segment_distance(c2, p0, p1)
    if max(d1, d2) <= tol or depth >= 24:
        return [p1]
    mid = lambda a, b: ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
    ab = mid(p0, c1)
    bc = mid(c1, c2)
    cd = mid(c2, p1)
    abc = mid(ab, bc)
    bcd = mid(bc, cd)
    m = mid(abc, bcd)
    return _flatten_cubic(p0, ab, abc, m, tol, depth + 1) + _flatten_cubic(
        m, bcd, cd, p1, tol, depth + 1
    )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_COMMANDS = set("MmLlHhVvCcQqZz")

_ALLOWED_ATTRS = {
    "svg": {"width", "height", "viewBox", "version", "style", "id", "baseProfile"},
    "path": {"d", "fill", "fill-rule", "id"},
    "rect": {"x", "y", "width", "height", "fill", "id"},
    "circle": {"cx", "cy", "r", "fill", "id"},
    "ellipse": {"cx", "cy", "rx", "ry", "fill", "id"},
}


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_length(value: str, what: str) -> float:
    v = value.strip()
    if v.endswith("px"):
        v = v[:-2]
    try:
        return float(v)
    except ValueError:
        raise SvgError(f"malformed {what}: {value!r}") from None


def _parse_fill(value: str | None) -> Color:
    if value is None:
        return (0, 0, 0)
    v = value.strip()
    if v == "none":
        raise SvgError("stroke-only paths unsupported (fill=\"none\")")
    if v.startswith("#"):
        h = v[1:]
        if len(h) == 3:
            h = "".join(c * 2 for c in h)
        if len(h) != 6 or not re.fullmatch(r"[0-9a-fA-F]{6}", h):
            raise SvgError(f"malformed fill color {value!r}")
        return (int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16))
    m = re.fullmatch(r"rgb\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)", v)
    if m:
        rgb = tuple(int(g) for g in m.groups())
        if any(c > 255 for c in rgb):
            raise SvgError(f"fill channel out of range in {value!r}")
        return rgb  # type: ignore[return-value]
    named = {"black": (0, 0, 0), "white": (255, 255, 255), "red": (255, 0, 0)}
    if v.lower() in named:
        return named[v.lower()]
    raise SvgError(f"unsupported fill {value!r}")


class _PathDataParser:
    def __init__(self, d: str):
        self.d = d
        self.pos = 0

    def _skip_sep(self):
        while self.pos < len(self.d) and (self.d[self.pos].isspace() or self.d[self.pos] == ","):
            self.pos += 1

    def next_token(self):
        self._skip_sep()
        if self.pos >= len(self.d):
            return None
        ch = self.d[self.pos]
        if ch.isalpha():
            self.pos += 1
            if ch not in _COMMANDS:
                raise SvgError(f"unsupported path command {ch!r} at position {self.pos - 1}")
            return ch
        m = _FLOAT_RE.match(self.d, self.pos)
        if not m:
            raise SvgError(f"malformed number at position {self.pos} in path data")
        self.pos = m.end()
        return float(m.group())

    def numbers(self, n: int) -> list[float]:
        out = []
        for _ in range(n):
            tok = self.next_token()
            if not isinstance(tok, float):
                raise SvgError(f"expected number at position {self.pos} in path data")
            out.append(tok)
        return out

    def peek_is_number(self) -> bool:
        save = self.pos
        self._skip_sep()
        ok = self.pos < len(self.d) and (
            self.d[self.pos].isdigit() or self.d[self.pos] in "+-."
        )
        self.pos = save
        return ok


def parse_path_data(d: str) -> list[Subpath]:
    parser = _PathDataParser(d)
    subpaths: list[Subpath] = []
    cur_sub: Subpath | None = None
    cur = (0.0, 0.0)
    start = (0.0, 0.0)
    cmd = None
    while True:
        tok = parser.next_token()
        if tok is None:
            break
        if isinstance(tok, str):
            cmd = tok
        else:
            raise SvgError(f"expected command at position {parser.pos} in path data")
        if cmd in "Mm":
            rel = cmd == "m"
            x, y = parser.numbers(2)
            cur = (cur[0] + x, cur[1] + y) if rel else (x, y)
            if cur_sub is not None and cur_sub.commands:
                subpaths.append(cur_sub)
            cur_sub = Subpath(start=cur)
            start = cur
            # Subsequent coordinate pairs are implicit line-tos.
            while parser.peek_is_number():
                x, y = parser.numbers(2)
                cur = (cur[0] + x, cur[1] + y) if rel else (x, y)
                cur_sub.commands.append(("L", cur))
        elif cmd in "LlHhVv":
            if cur_sub is None:
                raise SvgError("path data must start with a move command")
            while True:
                if cmd in "Ll":
                    x, y = parser.numbers(2)
                    nxt = (cur[0] + x, cur[1] + y) if cmd == "l" else (x, y)
                elif cmd in "Hh":
                    (x,) = parser.numbers(1)
                    nxt = (cur[0] + x, cur[1]) if cmd == "h" else (x, cur[1])
                else:
                    (y,) = parser.numbers(1)
                    nxt = (cur[0], cur[1] + y) if cmd == "v" else (cur[0], y)
                cur_sub.commands.append(("L", nxt))
                cur = nxt
                if not parser.peek_is_number():
                    break
        elif cmd in "CcQq":
            if cur_sub is None:
                raise SvgError("path data must start with a move command")
            while True:
                if cmd in "Cc":
                    xs = parser.numbers(6)
                    pts = [(xs[0], xs[1]), (xs[2], xs[3]), (xs[4], xs[5])]
                    if cmd == "c":
                        pts = [(cur[0] + px, cur[1] + py) for px, py in pts]
                    cur_sub.commands.append(("C", pts[0], pts[1], pts[2]))
                    cur = pts[2]
                else:
                    xs = parser.numbers(4)
                    pts = [(xs[0], xs[1]), (xs[2], xs[3])]
                    if cmd == "q":
                        pts = [(cur[0] + px, cur[1] + py) for px, py in pts]
                    cur_sub.commands.append(("Q", pts[0], pts[1]))
                    cur = pts[1]
                if not parser.peek_is_number():
                    break
        elif cmd in "Zz":
            if cur_sub is not None:
                if cur_sub.commands:
                    subpaths.append(cur_sub)
                cur = start
                cur_sub = Subpath(start=cur)
        else:  # pragma: no cover
            raise SvgError(f"unsupported path command {cmd!r}")
    if cur_sub is not None and cur_sub.commands:
        subpaths.append(cur_sub)
    if not subpaths:
        raise SvgError("path data contains no drawable subpath")
    return subpaths


_BG_RE = re.compile(r"^\s*background(?:-color)?\s*:\s*(.+?)\s*;?\s*$")


def parse_svg(text: str) -> VectorDocument:
    """Parse the supported SVG subset into pixel coordinates.

    Path order is preserved as authored.
    """
    try:
        root = etree.fromstring(text)
    except etree.ParseError as exc:
        raise SvgError(f"malformed SVG XML: {exc}") from exc
    if _localname(root.tag) != "svg":
        raise SvgError(f"unsupported element: {_localname(root.tag)}")
    _check_attrs(root, "svg")

    vb = root.get("viewBox")
    width = root.get("width")
    height = root.get("height")
    if vb is not None:
        parts = vb.replace(",", " ").split()
        if len(parts) != 4:
            raise SvgError(f"malformed viewBox: {vb!r}")
        minx, miny, vbw, vbh = (_parse_length(p, "viewBox entry") for p in parts)
    if width is None or height is None:
        if vb is None:
            raise SvgError("svg requires width/height or viewBox")
        w, h = vbw, vbh
    else:
        w = _parse_length(width, "width")
        h = _parse_length(height, "height")
    if vb is None:
        minx, miny, vbw, vbh = 0.0, 0.0, w, h
    if vbw <= 0 or vbh <= 0:
        raise SvgError("viewBox must have positive size")
    sx, sy = w / vbw, h / vbh

    def tx(p):
        return ((p[0] - minx) * sx, (p[1] - miny) * sy)

    background = (255, 255, 255)
    style = root.get("style")
    if style:
        m = _BG_RE.match(style)
        if not m:
            raise SvgError(f"unsupported svg style {style!r}")
        background = _parse_fill(m.group(1))

    paths: list[VectorPath] = []
    for child in root:
        tag = _localname(child.tag)
        if tag == "path":
            _check_attrs(child, "path")
            rule = child.get("fill-rule")
            if rule is not None and rule != "evenodd":
                raise SvgError(f"unsupported fill-rule {rule!r}")
            d = child.get("d")
            if d is None:
                raise SvgError("path element missing d attribute")
            fill = _parse_fill(child.get("fill"))
            subpaths = [sp.transformed(tx) for sp in parse_path_data(d)]
            paths.append(VectorPath(fill=fill, subpaths=subpaths))
        elif tag == "rect":
            _check_attrs(child, "rect")
            x = _parse_length(child.get("x", "0"), "x")
            y = _parse_length(child.get("y", "0"), "y")
            rw = _parse_length(child.get("width", "0"), "width")
            rh = _parse_length(child.get("height", "0"), "height")
            fill = _parse_fill(child.get("fill"))
            poly = [(x, y), (x + rw, y), (x + rw, y + rh), (x, y + rh)]
            paths.append(path_from_polygons([[tx(p) for p in poly]], fill))
        elif tag == "circle":
            _check_attrs(child, "circle")
            cx = _parse_length(child.get("cx", "0"), "cx")
            cy = _parse_length(child.get("cy", "0"), "cy")
            r = _parse_length(child.get("r", "0"), "r")
            fill = _parse_fill(child.get("fill"))
            poly = geometry.flatten_circle(cx, cy, r, 0.1)
            paths.append(path_from_polygons([[tx(p) for p in poly]], fill))
        elif tag == "ellipse":
            _check_attrs(child, "ellipse")
            cx = _parse_length(child.get("cx", "0"), "cx")
            cy = _parse_length(child.get("cy", "0"), "cy")
            rx = _parse_length(child.get("rx", "0"), "rx")
            ry = _parse_length(child.get("ry", "0"), "ry")
            fill = _parse_fill(child.get("fill"))
            poly = geometry.flatten_ellipse(cx, cy, rx, ry, 0.0, 0.1)
            paths.append(path_from_polygons([[tx(p) for p in poly]], fill))
        else:
            raise SvgError(f"unsupported element: {tag}")
    return VectorDocument(width=w, height=h, background=background, paths=paths)


def _check_attrs(el, kind: str) -> None:
    allowed = _ALLOWED_ATTRS[kind]
    for attr in el.attrib:
        name = _localname(attr)
        if attr.startswith("{"):  # namespaced (xmlns-qualified) attrs pass
            continue
        if name.startswith("xmlns"):
            continue
        if name not in allowed:
            raise SvgError(f"unsupported attribute: {name} on <{kind}>")


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _hex_color(c: Color) -> str:
    return "#{:02x}{:02x}{:02x}".format(*c)


def path_to_d(path: VectorPath) -> str:
    parts = []
    for sp in path.subpaths:
        parts.append(f"M {_fmt(sp.start[0])} {_fmt(sp.start[1])}")
        for cmd in sp.commands:
            if cmd[0] == "L":
                parts.append(f"L {_fmt(cmd[1][0])} {_fmt(cmd[1][1])}")
            elif cmd[0] == "C":
                c1, c2, p = cmd[1], cmd[2], cmd[3]
                parts.append(
                    "C "
                    + " ".join(_fmt(v) for v in (c1[0], c1[1], c2[0], c2[1], p[0], p[1]))
                )
            elif cmd[0] == "Q":
                c, p = cmd[1], cmd[2]
                parts.append("Q " + " ".join(_fmt(v) for v in (c[0], c[1], p[0], p[1])))
        parts.append("Z")
    return " ".join(parts)


def emit_path_element(path: VectorPath) -> str:
    return f'<path d="{path_to_d(path)}" fill="{_hex_color(path.fill)}" fill-rule="evenodd"/>'


def emit_svg(doc: VectorDocument) -> str:
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(doc.width)}" height="{_fmt(doc.height)}" '
        f'viewBox="0 0 {_fmt(doc.width)} {_fmt(doc.height)}" '
        f'style="background:{_hex_color(doc.background)}">'
    ]
    for path in doc.paths:
        lines.append("  " + emit_path_element(path))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
