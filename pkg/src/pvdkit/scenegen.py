"""Procedural generation of single-primitive and composition scenes.

Per-kind procedures follow the synthetic-data recipe: random parameters with
containment/area retry loops, centroid-angular ordering for polygons,
intersection-free growth for open paths, DFS-connected lattices for grids,
and Kruskal spanning trees plus extra edges for graphs. Compositions draw
2-3 same-color shapes with controlled pairwise overlap so the union renders
as a single unicolor region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, raster
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

KINDS = (
    "circle",
    "ellipse",
    "rectangle",
    "triangle",
    "polygon",
    "line_segment",
    "grid",
    "path",
    "graph",
)
COMPOSITION_KINDS = ("circle", "rectangle", "triangle", "line_segment")

RETRY_BUDGET = 1000

# Generation guards keeping shapes perceptible and unambiguous: polygon/path
# vertices must deviate visibly from their neighbours' chord and turns must
# stay away from straight angles, otherwise vertices are not recoverable
# from the rendered image.
MIN_VERTEX_DEVIATION = 6.0
MIN_TURN_DEG = 30.0
MIN_SEGMENT_LEN = 25.0


class GenerationError(Exception):
    pass


@dataclass
class GenConfig:
    canvas_min: int = 224
    canvas_max: int = 512
    filled_probability: float = 0.5
    min_contrast: int = 60  # sum over channels of |object - background|
    rotation_max: float = 360.0
    randomize_background: bool = False

    def __post_init__(self):
        if self.canvas_min < 64:
            raise ValueError("canvas_min must be at least 64")
        if not 0 <= self.filled_probability <= 1:
            raise ValueError("filled_probability must be in [0, 1]")


@dataclass
class AugmentParams:
    noise_probability: float = 0.1
    noise_ratio: tuple[float, float] = (0.01, 0.05)
    noise_intensity: tuple[float, float] = (0.1, 1.0)
    noise_dilate: tuple[int, int] = (1, 3)
    noise_size: tuple[int, int] = (1, 3)
    blur_probability: float = 0.1
    blur_radius: tuple[float, float] = (0.1, 0.5)

    def __post_init__(self):
        for name in ("noise_ratio", "noise_intensity", "blur_radius"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range must be ordered")


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_canvas(cfg: GenConfig, rng) -> tuple[int, int]:
    r = _rng(rng)
    w = int(r.integers(cfg.canvas_min, cfg.canvas_max + 1))
    h = int(r.integers(cfg.canvas_min, cfg.canvas_max + 1))
    return w, h


def sample_color(cfg: GenConfig, background: Color, rng) -> Color:
    r = _rng(rng)
    for _ in range(RETRY_BUDGET):
        c = tuple(int(x) for x in r.integers(0, 256, size=3))
        if sum(abs(a - b) for a, b in zip(c, background)) >= cfg.min_contrast:
            return c
    raise GenerationError("could not sample a contrasting color")


def sample_style(cfg: GenConfig, rng) -> Style:
    return Style.FILLED if _rng(rng).random() < cfg.filled_probability else Style.OUTLINED


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------


def order_by_centroid(points) -> np.ndarray:
    """Sort points by angle about their centroid (ties by radius).

    The closed polyline through the result is simple for points in general
    position. Raises on all-collinear input.
    """
    p = geometry.as_points(points)
    if len(p) < 3:
        raise GenerationError("need at least 3 points")
    i, j = geometry.farthest_pair(p)
    d = geometry.points_segment_distance(p, p[i], p[j])
    if d.max() < 1e-9:
        raise GenerationError("points are collinear")
    c = p.mean(axis=0)
    ang = np.arctan2(p[:, 1] - c[1], p[:, 0] - c[0])
    rad = np.linalg.norm(p - c, axis=1)
    order = np.lexsort((rad, ang))
    return p[order]


def kruskal_mst(points) -> list[tuple[int, int]]:
    """Minimum spanning tree edges by Euclidean length, ties broken by
    lexicographic (i, j)."""
    p = geometry.as_points(points)
    n = len(p)
    if n < 2:
        raise GenerationError("need at least 2 points")
    edges = sorted(
        (float(np.linalg.norm(p[i] - p[j])), i, j)
        for i in range(n)
        for j in range(i + 1, n)
    )
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    out = []
    for _, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            out.append((i, j))
            if len(out) == n - 1:
                break
    return out


def _polygon_inside_fraction(poly: np.ndarray, w: int, h: int) -> float:
    area = geometry.polygon_area(poly)
    if area <= 0:
        return 0.0
    clipped = geometry.clip_polygon_rect(poly, 0, 0, w, h)
    if len(clipped) < 3:
        return 0.0
    return geometry.polygon_area(clipped) / area


def _min_chord_deviation(poly: np.ndarray, closed: bool) -> float:
    n = len(poly)
    worst = math.inf
    rng_t = range(n) if closed else range(1, n - 1)
    for t in rng_t:
        a = poly[(t - 1) % n]
        b = poly[(t + 1) % n]
        worst = min(worst, geometry.point_segment_distance(poly[t], a, b))
    return worst


def _min_turn_deg(poly: np.ndarray, closed: bool) -> float:
    n = len(poly)
    worst = 180.0
    rng_t = range(n) if closed else range(1, n - 1)
    for t in rng_t:
        a = poly[(t - 1) % n]
        b = poly[(t + 1) % n]
        try:
            interior = geometry.angle_between(a - poly[t], b - poly[t])
        except ValueError:
            return 0.0
        worst = min(worst, interior)
    return worst


# ---------------------------------------------------------------------------
# Single-primitive generation
# ---------------------------------------------------------------------------


def _gen_circle(w, h, r):
    radius = r.uniform(max(10.0, 0.04 * min(w, h)), 0.42 * min(w, h))
    cx = r.uniform(radius, w - radius)
    cy = r.uniform(radius, h - radius)
    return Circle(center=(round(cx, 2), round(cy, 2)), radius=round(radius, 2), color=(0, 0, 0))


def _gen_ellipse(w, h, r):
    for _ in range(RETRY_BUDGET):
        major = r.uniform(max(14.0, 0.06 * min(w, h)), 0.45 * min(w, h))
        minor = r.uniform(max(10.0, 0.35 * major), major)
        rot = r.uniform(0.0, 180.0)
        cx = r.uniform(0.2 * w, 0.8 * w)
        cy = r.uniform(0.2 * h, 0.8 * h)
        poly = geometry.flatten_ellipse(cx, cy, major, minor, rot, 0.5)
        if _polygon_inside_fraction(poly, w, h) >= 0.95:
            return Ellipse(
                center=(round(cx, 2), round(cy, 2)),
                major_axis=round(major, 2), minor_axis=round(minor, 2),
                rotation=round(rot, 2), color=(0, 0, 0),
            )
    raise GenerationError("ellipse generation exhausted retries")


def _gen_rectangle(w, h, r):
    for _ in range(RETRY_BUDGET):
        rw = r.uniform(max(20.0, 0.08 * w), 0.6 * w)
        rh = r.uniform(max(20.0, 0.08 * h), 0.6 * h)
        if max(rw, rh) / min(rw, rh) > 6.0:
            continue  # extreme slivers read as thick line segments
        x0 = r.uniform(0, w - min(rw, w * 0.5))
        y0 = r.uniform(0, h - min(rh, h * 0.5))
        rot = r.uniform(0.0, 360.0)
        corners = np.array([[x0, y0], [x0 + rw, y0], [x0 + rw, y0 + rh], [x0, y0 + rh]])
        corners = geometry.rotate_points(corners, rot, center=corners.mean(axis=0))
        if _polygon_inside_fraction(corners, w, h) >= 0.95:
            if min(rw, rh) < 16:
                continue
            return Rectangle(
                vertices=tuple((round(float(x), 2), round(float(y), 2)) for x, y in corners),
                color=(0, 0, 0),
            )
    raise GenerationError("rectangle generation exhausted retries")


def _gen_triangle(w, h, r):
    for _ in range(RETRY_BUDGET):
        pts = np.column_stack([r.uniform(0, w, 3), r.uniform(0, h, 3)])
        if geometry.polygon_area(pts) < 0.02 * w * h:
            continue
        if _min_turn_deg(pts, closed=True) < 18.0:
            continue
        return Triangle(
            vertices=tuple((round(float(x), 2), round(float(y), 2)) for x, y in pts),
            color=(0, 0, 0),
        )
    raise GenerationError("triangle generation exhausted retries")


def _gen_polygon(w, h, r):
    for _ in range(RETRY_BUDGET):
        n = int(r.integers(5, 21))
        pts = np.column_stack([r.uniform(0.05 * w, 0.95 * w, n), r.uniform(0.05 * h, 0.95 * h, n)])
        try:
            poly = order_by_centroid(pts)
        except GenerationError:
            continue
        if geometry.polygon_area(poly) < 0.02 * w * h:
            continue
        if geometry.polyline_self_intersects(poly, closed=True):
            continue
        if _min_chord_deviation(poly, closed=True) < MIN_VERTEX_DEVIATION:
            continue
        if _min_turn_deg(poly, closed=True) < 15.0:
            continue
        if min(
            np.linalg.norm(poly[(i + 1) % len(poly)] - poly[i]) for i in range(len(poly))
        ) < 12.0:
            continue
        return Polygon(
            vertices=tuple((round(float(x), 2), round(float(y), 2)) for x, y in poly),
            color=(0, 0, 0),
        )
    raise GenerationError("polygon generation exhausted retries")


def _gen_line_segment(w, h, r):
    for _ in range(RETRY_BUDGET):
        a = np.array([r.uniform(0.05 * w, 0.95 * w), r.uniform(0.05 * h, 0.95 * h)])
        b = np.array([r.uniform(0.05 * w, 0.95 * w), r.uniform(0.05 * h, 0.95 * h)])
        if np.linalg.norm(b - a) >= max(MIN_SEGMENT_LEN, 0.12 * min(w, h)):
            return LineSegment(
                endpoints=(
                    (round(float(a[0]), 2), round(float(a[1]), 2)),
                    (round(float(b[0]), 2), round(float(b[1]), 2)),
                ),
                color=(0, 0, 0),
            )
    raise GenerationError("line segment generation exhausted retries")


def _gen_path(w, h, r):
    for _ in range(RETRY_BUDGET):
        n = int(r.integers(3, 17))
        pts = [np.array([r.uniform(0.05 * w, 0.95 * w), r.uniform(0.05 * h, 0.95 * h)])]
        ok = True
        for _k in range(1, n):
            placed = False
            for _attempt in range(60):
                q = np.array([r.uniform(0.05 * w, 0.95 * w), r.uniform(0.05 * h, 0.95 * h)])
                if np.linalg.norm(q - pts[-1]) < MIN_SEGMENT_LEN:
                    continue
                cand = pts + [q]
                arr = np.array(cand)
                if geometry.polyline_self_intersects(arr, closed=False):
                    continue
                if len(cand) >= 3:
                    if _min_turn_deg(arr, closed=False) < MIN_TURN_DEG:
                        continue
                    if _min_chord_deviation(arr, closed=False) < MIN_VERTEX_DEVIATION:
                        continue
                pts.append(q)
                placed = True
                break
            if not placed:
                ok = False
                break
        if ok and len(pts) >= 3:
            return Polyline(
                vertices=tuple((round(float(x), 2), round(float(y), 2)) for x, y in pts),
                color=(0, 0, 0),
            )
    raise GenerationError("path generation exhausted retries")


def _gen_grid(w, h, r):
    rows = int(r.integers(2, 7))
    cols = int(r.integers(2, 7))
    max_sx = (0.9 * w) / (cols - 1)
    max_sy = (0.9 * h) / (rows - 1)
    sx = r.uniform(min(30.0, max_sx), max_sx)
    sy = r.uniform(min(30.0, max_sy), max_sy)
    x0 = r.uniform(0.05 * w, w - sx * (cols - 1) - 0.05 * w)
    y0 = r.uniform(0.05 * h, h - sy * (rows - 1) - 0.05 * h)
    verts = [
        (round(x0 + c * sx, 2), round(y0 + rr * sy, 2))
        for rr in range(rows)
        for c in range(cols)
    ]
    # Randomized DFS spanning tree over the lattice.
    idx = lambda rr, c: rr * cols + c
    visited = {(0, 0)}
    stack = [(0, 0)]
    edges = set()
    while stack:
        rr, c = stack[-1]
        nbrs = [
            (rr + dr, c + dc)
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if 0 <= rr + dr < rows and 0 <= c + dc < cols and (rr + dr, c + dc) not in visited
        ]
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(r.integers(0, len(nbrs)))]
        visited.add(nxt)
        a, b = idx(rr, c), idx(*nxt)
        edges.add((min(a, b), max(a, b)))
        stack.append(nxt)
    # Random extra adjacent edges.
    for rr in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0)):
                r2, c2 = rr + dr, c + dc
                if r2 < rows and c2 < cols:
                    e = (idx(rr, c), idx(r2, c2))
                    if e not in edges and r.random() < 0.3:
                        edges.add(e)
    return Grid(size=(rows, cols), vertices=tuple(verts), edges=tuple(sorted(edges)), color=(0, 0, 0))


def _gen_graph(w, h, r):
    for _ in range(RETRY_BUDGET):
        n = int(r.integers(4, 17))
        pts = np.column_stack([r.uniform(0.08 * w, 0.92 * w, n), r.uniform(0.08 * h, 0.92 * h, n)])
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        if d.min() < max(28.0, 0.07 * min(w, h)):
            continue
        mst = kruskal_mst(pts)
        edges = set(mst)
        extra_budget = max(0, int(r.integers(0, max(1, n // 3) + 1)))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
        r.shuffle(pairs)
        for i, j in pairs[:extra_budget]:
            edges.add((i, j))
        return Graph(
            vertices=tuple((round(float(x), 2), round(float(y), 2)) for x, y in pts),
            edges=tuple(sorted(edges)),
            color=(0, 0, 0),
        )
    raise GenerationError("graph generation exhausted retries")


_GEN_FUNCS = {
    "circle": _gen_circle,
    "ellipse": _gen_ellipse,
    "rectangle": _gen_rectangle,
    "triangle": _gen_triangle,
    "polygon": _gen_polygon,
    "line_segment": _gen_line_segment,
    "path": _gen_path,
    "grid": _gen_grid,
    "graph": _gen_graph,
}


def _with_appearance(prim: PvdPrimitive, color: Color, style: Style) -> PvdPrimitive:
    from dataclasses import replace

    if isinstance(prim, (LineSegment, Polyline, Grid, Graph)):
        return replace(prim, color=color)
    return replace(prim, color=color, style=style)


def gen_primitive(kind: str, cfg: GenConfig, rng, style: Style | None = None) -> Scene:
    """Generate a one-object scene of the requested kind."""
    if kind not in _GEN_FUNCS:
        raise GenerationError(f"unknown kind {kind!r}")
    r = _rng(rng)
    w, h = sample_canvas(cfg, r)
    background = (
        sample_color(cfg, (-1000, -1000, -1000), r) if cfg.randomize_background else (255, 255, 255)
    )
    color = sample_color(cfg, background, r)
    if style is None:
        style = sample_style(cfg, r)
    prim = _GEN_FUNCS[kind](w, h, r)
    prim = _with_appearance(prim, color, style)
    return Scene(width=w, height=h, background=background, objects=(prim,))


# ---------------------------------------------------------------------------
# Compositions
# ---------------------------------------------------------------------------

MAX_INTERSECTION_RATIO = 0.7


def _shape_for_composition(kind: str, w, h, r) -> PvdPrimitive:
    return _GEN_FUNCS[kind](w, h, r)


def gen_composition(
    k: int,
    cfg: GenConfig,
    rng,
    first_kind: str | None = None,
    style: Style | None = None,
) -> Scene:
    """Generate k overlapping same-color shapes forming one connected region.

    Every added shape must overlap the union of the previous ones with an
    intersection ratio min(I/A, I/B) in (0, MAX_INTERSECTION_RATIO].
    """
    if not 2 <= k <= 3:
        raise GenerationError("composition size must be 2 or 3")
    r = _rng(rng)
    w, h = sample_canvas(cfg, r)
    background = (
        sample_color(cfg, (-1000, -1000, -1000), r) if cfg.randomize_background else (255, 255, 255)
    )
    color = sample_color(cfg, background, r)
    if style is None:
        style = sample_style(cfg, r)
    for _ in range(RETRY_BUDGET):
        kind0 = first_kind or COMPOSITION_KINDS[int(r.integers(0, len(COMPOSITION_KINDS)))]
        shapes = [_shape_for_composition(kind0, w, h, r)]
        union = raster.primitive_mask(shapes[0], w, h)
        ok = True
        for _i in range(1, k):
            placed = False
            for _attempt in range(80):
                kind = COMPOSITION_KINDS[int(r.integers(0, len(COMPOSITION_KINDS)))]
                cand = _shape_for_composition(kind, w, h, r)
                mask = raster.primitive_mask(cand, w, h)
                inter = int((mask & union).sum())
                if inter == 0:
                    continue
                ratio = inter / min(int(mask.sum()), int(union.sum()))
                if ratio > MAX_INTERSECTION_RATIO:
                    continue
                shapes.append(cand)
                union = union | mask
                placed = True
                break
            if not placed:
                ok = False
                break
        if ok:
            objs = tuple(_with_appearance(s, color, style) for s in shapes)
            return Scene(width=w, height=h, background=background, objects=objs)
    raise GenerationError("composition generation exhausted retries")


# ---------------------------------------------------------------------------
# Image augmentation
# ---------------------------------------------------------------------------


def apply_pixel_noise(
    img: raster.RasterImage,
    params: AugmentParams,
    rng,
    background: Color = (255, 255, 255),
) -> raster.RasterImage:
    """With the configured probability, fill a sampled fraction of the
    object's dilated region with small random-color noise blocks."""
    r = _rng(rng)
    if r.random() >= params.noise_probability:
        return img
    from scipy import ndimage

    px = img.pixels.copy()
    obj_mask = (px != np.asarray(background, dtype=np.uint8)).any(axis=2)
    if not obj_mask.any():
        return raster.RasterImage(px)
    dilate = int(r.integers(params.noise_dilate[0], params.noise_dilate[1] + 1))
    region = ndimage.binary_dilation(obj_mask, iterations=dilate)
    ratio = r.uniform(*params.noise_ratio)
    target = int(round(ratio * int(region.sum())))
    ys, xs = np.nonzero(region)
    h, w = region.shape
    changed = np.zeros_like(region)
    guard = 0
    while int(changed.sum()) < target and guard < 100000:
        guard += 1
        k = int(r.integers(0, len(xs)))
        size = int(r.integers(params.noise_size[0], params.noise_size[1] + 1))
        intensity = r.uniform(*params.noise_intensity)
        y0, x0 = ys[k], xs[k]
        y1, x1 = min(y0 + size, h), min(x0 + size, w)
        block = px[y0:y1, x0:x1].astype(np.float64)
        noise_color = r.integers(0, 256, size=3).astype(np.float64)
        blended = (1 - intensity) * block + intensity * noise_color
        px[y0:y1, x0:x1] = np.clip(np.round(blended), 0, 255).astype(np.uint8)
        changed[y0:y1, x0:x1] = True
    return raster.RasterImage(px)


def _gaussian_kernel_1d(sigma: float) -> np.ndarray:
    half = max(1, int(math.ceil(3 * sigma)))
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def apply_gaussian_blur(img: raster.RasterImage, params: AugmentParams, rng) -> raster.RasterImage:
    """With the configured probability, apply a separable Gaussian blur."""
    r = _rng(rng)
    if r.random() >= params.blur_probability:
        return img
    from scipy import ndimage

    radius = r.uniform(*params.blur_radius)
    kernel = _gaussian_kernel_1d(radius)
    out = img.pixels.astype(np.float64)
    for c in range(3):
        out[:, :, c] = ndimage.correlate1d(out[:, :, c], kernel, axis=0, mode="nearest")
        out[:, :, c] = ndimage.correlate1d(out[:, :, c], kernel, axis=1, mode="nearest")
    return raster.RasterImage(np.clip(np.round(out), 0, 255).astype(np.uint8))
