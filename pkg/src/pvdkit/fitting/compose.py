"""Greedy decoding of unicolor compositions into multiple primitives.

A merged path formed by overlapping same-color shapes is explained step by
step: propose candidate primitives anchored on the largest connected
unexplained region, score each by how much of the target it newly covers
minus spillover outside the target, accept the best, repeat. Scoring runs on
a downscaled work canvas; accepted primitives keep full-resolution
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import geometry, raster
from ..primitives import (
    Circle,
    Color,
    LineSegment,
    Rectangle,
    Style,
    Triangle,
    validate,
)
from ..vectorize import moore_trace
from .shapes import FitError, FitOptions, fit_circle, mask_residual

_SPILL_PENALTY = 2.0  # spilled pixel costs double a covered one
_MIN_REGION_PX = 12


@dataclass
class _Workspace:
    offset: np.ndarray
    scale: float
    target: np.ndarray  # appearance mask of the path on the work canvas
    xs: np.ndarray  # pixel-center coordinate grids
    ys: np.ndarray


def _make_workspace(polys, work_canvas: int) -> _Workspace:
    pts = np.vstack([geometry.as_points(p) for p in polys])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = max(6.0, 0.05 * float(max(hi[0] - lo[0], hi[1] - lo[1])))
    lo = lo - pad
    span = (hi - lo) + pad
    scale = min(1.0, work_canvas / float(max(span[0], span[1])))
    cw = max(16, int(math.ceil(span[0] * scale)))
    ch = max(16, int(math.ceil(span[1] * scale)))
    local = [(geometry.as_points(p) - lo) * scale for p in polys]
    target = raster.polygon_mask(ch, cw, local)
    yy, xx = np.mgrid[0:ch, 0:cw]
    return _Workspace(
        offset=lo, scale=scale, target=target,
        xs=xx.astype(np.float64) + 0.5, ys=yy.astype(np.float64) + 0.5,
    )


# ---------------------------------------------------------------------------
# Proposal generation (work-canvas coordinates)
# ---------------------------------------------------------------------------


def _region_contour(region: np.ndarray) -> np.ndarray:
    contour = moore_trace(region)
    if len(contour) < 3:
        rows, cols = np.nonzero(region)
        x0, x1 = cols.min(), cols.max() + 1
        y0, y1 = rows.min(), rows.max() + 1
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
    return contour


def _corner_points(contour: np.ndarray, tol: float, cap: int = 14) -> np.ndarray:
    simp = geometry.simplify_polyline(contour, tol, closed=True)
    while len(simp) > cap and tol < 64:
        tol *= 1.6
        simp = geometry.simplify_polyline(contour, tol, closed=True)
    return simp

def _circle_proposals(ws: _Workspace, region: np.ndarray, contours) -> list[dict]:
    out = []
    # Largest inscribed circle of the target, centered in the region.
    dist = ndimage.distance_transform_edt(ws.target)
    masked = np.where(region, dist, 0.0)
    idx = np.unravel_index(int(np.argmax(masked)), masked.shape)
    r = float(masked[idx])
    if r >= 2.0:
        out.append({"type": "circle", "cx": idx[1] + 0.5, "cy": idx[0] + 0.5, "r": r})
    # Kasa fits on smooth contour arcs between corners.
    for contour in contours:
        corners = _corner_points(contour, tol=3.0)
        if len(contour) < 8:
            continue
        corner_ids = sorted(
            int(np.argmin(np.linalg.norm(contour - c, axis=1))) for c in corners
        )
        arcs = []
        for a, b in zip(corner_ids, corner_ids[1:] + [corner_ids[0] + len(contour)]):
            ids = [(k % len(contour)) for k in range(a, b + 1)]
            if len(ids) >= 8:
                arcs.append(contour[ids])
        arcs.append(contour)
        for arc in arcs:
            try:
                (cx, cy), r, rms = fit_circle(arc)
            except FitError:
                continue
            if rms <= 2.5 and 2.0 <= r <= 4 * max(ws.target.shape):
                out.append({"type": "circle", "cx": cx, "cy": cy, "r": r})
    return out


def _rect_proposals(ws: _Workspace, region: np.ndarray, contours) -> list[dict]:
    out = []
    region_pts = _region_contour(region)
    hull = geometry.convex_hull(region_pts)
    if len(hull) >= 3:
        for i in range(len(hull)):
            d = hull[(i + 1) % len(hull)] - hull[i]
            L = np.linalg.norm(d)
            if L < 3:
                continue
            ux = d / L
            uy = np.array([-ux[1], ux[0]])
            xs = hull @ ux
            ys = hull @ uy
            corners = [
                xs.min() * ux + ys.min() * uy,
                xs.max() * ux + ys.min() * uy,
                xs.max() * ux + ys.max() * uy,
                xs.min() * ux + ys.max() * uy,
            ]
            out.append({"type": "rect", "corners": np.array(corners)})
    # Rectangles suggested by pairs of adjacent region corners, extruded to
    # the region's far side (recovers rects whose far corners are occluded).
    corners = _corner_points(region_pts, tol=3.0, cap=10)
    n = len(corners)
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        d = b - a
        L = np.linalg.norm(d)
        if L < 4:
            continue
        ux = d / L
        uy = np.array([-ux[1], ux[0]])
        depth_pts = (region_pts - a) @ uy
        for depth in (depth_pts.max(), depth_pts.min()):
            if abs(depth) < 4:
                continue
            out.append({
                "type": "rect",
                "corners": np.array([a, b, b + uy * depth, a + uy * depth]),
            })
    return out


def _triangle_proposals(ws: _Workspace, region: np.ndarray, contours) -> list[dict]:
    out = []
    sets = [_corner_points(_region_contour(region), tol=3.0)]
    for contour in contours:
        sets.append(_corner_points(contour, tol=3.0))
    for pts in sets:
        n = len(pts)
        if n < 3:
            continue
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    tri = np.array([pts[i], pts[j], pts[k]])
                    if geometry.polygon_area(tri) >= _MIN_REGION_PX:
                        out.append({"type": "triangle", "corners": tri})
    return out


def _line_proposals(ws: _Workspace, region: np.ndarray) -> list[dict]:
    ys, xs = np.nonzero(region)
    if len(xs) < _MIN_REGION_PX:
        return []
    pts = np.column_stack([xs + 0.5, ys + 0.5]).astype(np.float64)
    mean = pts.mean(axis=0)
    u, s, vt = np.linalg.svd(pts - mean, full_matrices=False)
    d = vt[0]
    t = (pts - mean) @ d
    length = float(t.max() - t.min())
    if length < 4:
        return []
    width = max(1.0, len(pts) / length)
    a = mean + t.min() * d
    b = mean + t.max() * d
    return [{"type": "line", "a": a, "b": b, "w": width}]


# ---------------------------------------------------------------------------
# Proposal scoring
# ---------------------------------------------------------------------------


def _proposal_mask(ws: _Workspace, prop: dict, style: Style) -> np.ndarray:
    xs, ys = ws.xs, ws.ys
    ring = style is Style.OUTLINED and prop["type"] != "line"
    w = raster.OUTLINE_WIDTH * ws.scale
    if prop["type"] == "circle":
        d2 = (xs - prop["cx"]) ** 2 + (ys - prop["cy"]) ** 2
        if ring:
            return (d2 <= (prop["r"] + w / 2) ** 2) & (d2 >= max(prop["r"] - w / 2, 0.1) ** 2)
        return d2 <= prop["r"] ** 2
    if prop["type"] in ("rect", "triangle"):
        corners = prop["corners"]
        inside = _poly_cover(xs, ys, corners)
        if ring:
            grown = geometry.offset_polygon(corners, w / 2)
            shrunk = geometry.offset_polygon(corners, -w / 2)
            return _poly_cover(xs, ys, grown) & ~_poly_cover(xs, ys, shrunk)
        return inside
    if prop["type"] == "line":
        a, b = prop["a"], prop["b"]
        d = b - a
        L = float(np.linalg.norm(d))
        d = d / L
        n = np.array([-d[1], d[0]])
        px = xs - a[0]
        py = ys - a[1]
        t = px * d[0] + py * d[1]
        lat = np.abs(px * n[0] + py * n[1])
        return (t >= 0) & (t <= L) & (lat <= prop["w"] / 2)
    raise ValueError(prop["type"])


def _poly_cover(xs: np.ndarray, ys: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd point-in-polygon over coordinate grids (convex or not)."""
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if y0 == y1:
            continue
        cond = ((ys >= min(y0, y1)) & (ys < max(y0, y1)))
        xcross = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (xs < xcross)
    return inside


def _to_global(ws: _Workspace, prop: dict, color: Color, style: Style):
    s = ws.scale
    off = ws.offset
    if prop["type"] == "circle":
        return Circle(
            center=(prop["cx"] / s + off[0], prop["cy"] / s + off[1]),
            radius=prop["r"] / s, color=color, style=style,
        )
    if prop["type"] == "rect":
        corners = prop["corners"] / s + off
        from .shapes import _regularize_rectangle

        return Rectangle(
            vertices=tuple(map(tuple, _regularize_rectangle(corners))),
            color=color, style=style,
        )
    if prop["type"] == "triangle":
        corners = prop["corners"] / s + off
        return Triangle(vertices=tuple(map(tuple, corners)), color=color, style=style)
    a = prop["a"] / s + off
    b = prop["b"] / s + off
    return LineSegment(
        endpoints=(tuple(a), tuple(b)), color=color,
        line_width=max(1.0, prop["w"] / s),
    )


def _coverage_residual(explained: np.ndarray, target: np.ndarray) -> float:
    union = float((explained | target).sum())
    if union == 0:
        return 0.0
    return 1.0 - float((explained & target).sum()) / union


def _greedy(
    ws: _Workspace,
    contours,
    opts: FitOptions,
    color: Color,
    style: Style,
    first_type: str | None,
):
    accepted: list = []
    explained = np.zeros_like(ws.target)
    residual = _coverage_residual(explained, ws.target)
    for step in range(opts.max_composite):
        unexplained = ws.target & ~explained
        if unexplained.sum() < _MIN_REGION_PX:
            break
        lab, n = ndimage.label(unexplained, structure=np.ones((3, 3), dtype=int))
        sizes = ndimage.sum_labels(np.ones_like(lab), lab, index=range(1, n + 1))
        region = lab == (1 + int(np.argmax(sizes)))
        if region.sum() < _MIN_REGION_PX:
            break
        proposals = (
            _circle_proposals(ws, region, contours)
            + _rect_proposals(ws, region, contours)
            + _triangle_proposals(ws, region, contours)
            + _line_proposals(ws, region)
        )
        if step == 0 and first_type is not None:
            proposals = [p for p in proposals if p["type"] == first_type]
        best = None
        best_gain = 0.0
        for prop in proposals:
            mask = _proposal_mask(ws, prop, style)
            gain = float((mask & unexplained).sum()) - _SPILL_PENALTY * float(
                (mask & ~ws.target).sum()
            )
            if gain > best_gain:
                best = (prop, mask)
                best_gain = gain
        if best is None:
            break
        prop, mask = best
        prim = _to_global(ws, prop, color, style)
        if validate(prim):
            break
        # Dilate bookkeeping by 1px: quantization crumbs along an accepted
        # boundary must not seed later proposals.
        explained = explained | ndimage.binary_dilation(mask, np.ones((3, 3), dtype=bool))
        accepted.append(prim)
        new_residual = _coverage_residual(explained & ws.target, ws.target)
        improvement = residual - new_residual
        residual = new_residual
        if residual <= opts.residual_threshold or improvement < 0.005:
            break
    return accepted, residual


def decode_composition(
    path,
    opts: FitOptions | None = None,
    color: Color = (0, 0, 0),
    style: Style = Style.FILLED,
) -> list:
    """Greedy residual fitting over {circle, rectangle, triangle, line segment}.

    The greedy is restarted once per forced first type (plus a free run);
    the run that explains the path within threshold using the fewest
    primitives wins. This prevents an over-extended first shape from
    swallowing its overlap partner.
    """
    opts = opts or FitOptions()
    polys = path.flatten(opts.flatten_tol)
    if not polys:
        return []
    ws = _make_workspace(polys, work_canvas=160)
    contours = [(geometry.as_points(p) - ws.offset) * ws.scale for p in polys]
    best: tuple | None = None
    for first in (None, "circle", "rect", "triangle", "line"):
        accepted, residual = _greedy(ws, contours, opts, color, style, first)
        if not accepted:
            continue
        reached = residual <= opts.residual_threshold
        key = (not reached, len(accepted), residual)
        if best is None or key < best[0]:
            best = (key, accepted)
    return best[1] if best else []
