"""Deterministic scanline rasterizer for scenes and vector documents.

No anti-aliasing: a pixel is painted iff its center falls inside the filled
region (even-odd rule). Strokes are rendered as per-segment quadrilaterals
plus disks at joints, each painted opaquely in sequence, so overlaps never
cancel. Curves are flattened with chord error <= 0.25 px before filling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import geometry
from .primitives import (
    Circle,
    Color,
    Ellipse,
    Graph,
    Grid,
    LineSegment,
    Polygon,
    Polyline,
    PvdPrimitive,
    Rectangle,
    Scene,
    Style,
    Triangle,
)

FLATTEN_TOL = 0.25


@dataclass
class RasterImage:
    """W x H RGB image, 8 bits per channel, row-major, origin top-left."""

    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("pixels must have shape (H, W, 3)")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def copy(self) -> "RasterImage":
        return RasterImage(self.pixels.copy())

    def same_as(self, other: "RasterImage") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


def blank(width: int, height: int, color: Color = (255, 255, 255)) -> RasterImage:
    px = np.empty((height, width, 3), dtype=np.uint8)
    px[:, :] = np.asarray(color, dtype=np.uint8)
    return RasterImage(px)


# ---------------------------------------------------------------------------
# Core even-odd scanline fill
# ---------------------------------------------------------------------------


def fill_polygons(px: np.ndarray, subpaths, color: Color) -> None:
    """Even-odd fill of one or more closed polygons into an RGB buffer."""
    _mask_or_fill(px.shape[0], px.shape[1], subpaths, px=px, color=color)


def polygon_mask(height: int, width: int, subpaths) -> np.ndarray:
    """Boolean coverage mask of an even-odd filled polygon set."""
    mask = np.zeros((height, width), dtype=bool)
    _mask_or_fill(height, width, subpaths, mask=mask)
    return mask


def _mask_or_fill(height, width, subpaths, px=None, color=None, mask=None) -> None:
    x0s, y0s, x1s, y1s = [], [], [], []
    for sp in subpaths:
        p = geometry.as_points(sp)
        if len(p) < 2:
            continue
        q = np.roll(p, -1, axis=0)
        x0s.append(p[:, 0])
        y0s.append(p[:, 1])
        x1s.append(q[:, 0])
        y1s.append(q[:, 1])
    if not x0s:
        return
    x0 = np.concatenate(x0s)
    y0 = np.concatenate(y0s)
    x1 = np.concatenate(x1s)
    y1 = np.concatenate(y1s)
    nonhoriz = y0 != y1
    x0, y0, x1, y1 = x0[nonhoriz], y0[nonhoriz], x1[nonhoriz], y1[nonhoriz]
    if len(x0) == 0:
        return
    ymin = max(0, int(math.floor(min(y0.min(), y1.min()) - 0.5)))
    ymax = min(height - 1, int(math.ceil(max(y0.max(), y1.max()))))
    if color is not None:
        col = np.asarray(color, dtype=np.uint8)
    slope = (x1 - x0) / (y1 - y0)
    for row in range(ymin, ymax + 1):
        yc = row + 0.5
        # Half-open span rule avoids double counting at shared vertices.
        sel = ((y0 <= yc) & (yc < y1)) | ((y1 <= yc) & (yc < y0))
        if not sel.any():
            continue
        xs = x0[sel] + (yc - y0[sel]) * slope[sel]
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            a = int(math.ceil(xs[k] - 0.5))
            b = int(math.ceil(xs[k + 1] - 0.5))
            a = max(a, 0)
            b = min(b, width)
            if a < b:
                if px is not None:
                    px[row, a:b] = col
                else:
                    mask[row, a:b] = True


# ---------------------------------------------------------------------------
# Primitive outlines
# ---------------------------------------------------------------------------


def _stroke_pieces(points: np.ndarray, width: float, closed: bool, joints: str = "interior"):
    """Quads per segment plus joint disks. joints: 'interior', 'all', 'none'."""
    pieces = []
    n = len(points)
    segs = range(n if closed else n - 1)
    half = width / 2.0
    for i in segs:
        a = points[i]
        b = points[(i + 1) % n]
        d = b - a
        L = math.hypot(d[0], d[1])
        if L < 1e-12:
            continue
        nx, ny = -d[1] / L * half, d[0] / L * half
        pieces.append(
            np.array(
                [
                    [a[0] + nx, a[1] + ny],
                    [b[0] + nx, b[1] + ny],
                    [b[0] - nx, b[1] - ny],
                    [a[0] - nx, a[1] - ny],
                ]
            )
        )
    if joints == "none":
        idx = []
    elif joints == "all" or closed:
        idx = list(range(n))
    else:
        idx = list(range(1, n - 1))
    for i in idx:
        pieces.append(geometry.flatten_circle(points[i][0], points[i][1], half, FLATTEN_TOL))
    return pieces


def primitive_fill_subpaths(p: PvdPrimitive) -> list[np.ndarray]:
    """Closed polygon(s) of the primitive's filled silhouette (style ignored)."""
    if isinstance(p, Circle):
        return [geometry.flatten_circle(p.center[0], p.center[1], p.radius, FLATTEN_TOL)]
    if isinstance(p, Ellipse):
        return [
            geometry.flatten_ellipse(
                p.center[0], p.center[1], p.major_axis, p.minor_axis, p.rotation, FLATTEN_TOL
            )
        ]
    if isinstance(p, (Rectangle, Triangle, Polygon)):
        return [geometry.as_points(p.vertices)]
    if isinstance(p, LineSegment):
        pts = geometry.as_points(p.endpoints)
        return [q for q in _stroke_pieces(pts, p.line_width, closed=False, joints="none")]
    if isinstance(p, Polyline):
        pts = geometry.as_points(p.vertices)
        return _stroke_pieces(pts, p.line_width, closed=False, joints="interior")
    if isinstance(p, (Grid, Graph)):
        pts = geometry.as_points(p.vertices)
        pieces = []
        half = p.line_width / 2.0
        for i, j in p.edges:
            pieces.extend(
                _stroke_pieces(np.array([pts[i], pts[j]]), p.line_width, False, joints="none")
            )
        degree = np.zeros(len(pts), dtype=int)
        for i, j in p.edges:
            degree[i] += 1
            degree[j] += 1
        for i in range(len(pts)):
            if degree[i] >= 1:
                pieces.append(geometry.flatten_circle(pts[i][0], pts[i][1], half, FLATTEN_TOL))
        return pieces
    raise TypeError(f"cannot outline {type(p).__name__}")


OUTLINE_WIDTH = 3.0  # stroke width used for outlined closed shapes


def primitive_paint_groups(p: PvdPrimitive) -> list[list[np.ndarray]]:
    """Painting plan: a list of polygon groups. Each group is filled with the
    even-odd rule; groups are painted sequentially (their union shows)."""
    if isinstance(p, (LineSegment, Polyline, Grid, Graph)):
        return [[piece] for piece in primitive_fill_subpaths(p)]
    if p.style is Style.FILLED:
        return [primitive_fill_subpaths(p)]
    # Outlined closed shapes: ring for smooth boundaries, stroked closed
    # polyline (quads + corner disks) for vertex shapes.
    w = OUTLINE_WIDTH
    if isinstance(p, Circle):
        outer = geometry.flatten_circle(p.center[0], p.center[1], p.radius + w / 2, FLATTEN_TOL)
        inner = geometry.flatten_circle(
            p.center[0], p.center[1], max(p.radius - w / 2, 0.1), FLATTEN_TOL
        )
        return [[outer, inner]]
    if isinstance(p, Ellipse):
        outer = geometry.flatten_ellipse(
            p.center[0], p.center[1], p.major_axis + w / 2, p.minor_axis + w / 2,
            p.rotation, FLATTEN_TOL,
        )
        inner = geometry.flatten_ellipse(
            p.center[0], p.center[1], max(p.major_axis - w / 2, 0.1),
            max(p.minor_axis - w / 2, 0.1), p.rotation, FLATTEN_TOL,
        )
        return [[outer, inner]]
    pts = geometry.as_points(p.vertices)
    return [[piece] for piece in _stroke_pieces(pts, w, closed=True)]


def _paint_primitive(px: np.ndarray, p: PvdPrimitive, sx: float, sy: float) -> None:
    scale = np.array([sx, sy])
    for group in primitive_paint_groups(p):
        fill_polygons(px, [poly * scale for poly in group], p.color)


def render_scene(scene: Scene, width: int | None = None, height: int | None = None) -> RasterImage:
    """Paint scene objects in list order onto the background."""
    w = width or scene.width
    h = height or scene.height
    if w < 1 or h < 1:
        raise ValueError("render target must be at least 1x1")
    sx = w / scene.width
    sy = h / scene.height
    img = blank(w, h, scene.background)
    for obj in scene.objects:
        _paint_primitive(img.pixels, obj, sx, sy)
    return img


def render_primitive(
    p: PvdPrimitive, width: int, height: int, background: Color = (255, 255, 255)
) -> RasterImage:
    scene = Scene(width=width, height=height, background=background, objects=(p,))
    return render_scene(scene)


def primitive_mask(p: PvdPrimitive, width: int, height: int, styled: bool = False) -> np.ndarray:
    """Coverage mask. styled=False gives the filled silhouette regardless of
    style; styled=True gives the pixels the primitive would actually paint."""
    if styled:
        mask = np.zeros((height, width), dtype=bool)
        for group in primitive_paint_groups(p):
            mask |= polygon_mask(height, width, group)
        return mask
    mask = np.zeros((height, width), dtype=bool)
    if isinstance(p, (LineSegment, Polyline, Grid, Graph)):
        for piece in primitive_fill_subpaths(p):
            mask |= polygon_mask(height, width, [piece])
    else:
        mask = polygon_mask(height, width, primitive_fill_subpaths(p))
    return mask


# ---------------------------------------------------------------------------
# Vector document rendering
# ---------------------------------------------------------------------------


def render_paths(doc, subset=None, width: int | None = None, height: int | None = None) -> RasterImage:
    """Render a subset of a VectorDocument's paths (all when subset is None)."""
    w = int(round(width or doc.width))
    h = int(round(height or doc.height))
    sx = w / doc.width
    sy = h / doc.height
    if subset is None:
        subset = range(len(doc.paths))
    subset = list(subset)
    for i in subset:
        if not 0 <= i < len(doc.paths):
            raise IndexError(f"path index {i} out of range")
    img = blank(w, h, doc.background)
    scale = np.array([sx, sy])
    for i in subset:
        path = doc.paths[i]
        polys = [poly * scale for poly in path.flatten(FLATTEN_TOL)]
        fill_polygons(img.pixels, polys, path.fill)
    return img


# ---------------------------------------------------------------------------
# PNG I/O
# ---------------------------------------------------------------------------


def write_png(img: RasterImage, path) -> None:
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def read_png(path) -> RasterImage:
    with Image.open(path) as im:
        im.load()
        if im.mode != "RGB":
            im = im.convert("RGB")
        return RasterImage(np.asarray(im, dtype=np.uint8).copy())
