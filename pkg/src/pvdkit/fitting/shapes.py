"""Geometric least-squares fits and closed-shape classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import geometry, metrics, raster
from ..primitives import (
    Circle,
    Color,
    Ellipse,
    Polygon,
    PvdPrimitive,
    Rectangle,
    Style,
    Triangle,
)

# Model-selection complexity ranks.
COMPLEXITY = {
    "line_segment": 1,
    "circle": 2,
    "rectangle": 3,
    "triangle": 3,
    "ellipse": 4,
    "polygon": 5,
    "path": 5,
    "grid": 6,
    "graph": 7,
    "composition": 8,
}


class FitError(Exception):
    pass


@dataclass
class FitOptions:
    flatten_tol: float = 0.5
    simplify_tol: float = 2.0
    residual_threshold: float = 0.05  # acceptance gate for single-primitive fits
    max_composite: int = 3
    complexity_penalty: float = 0.01  # per complexity rank
    conic_rms_tol: float = 1.5  # px; circle/ellipse acceptance in classify_closed
    work_canvas: int = 192  # residual rendering resolution cap
    vectorize_tol: float = 0.4  # contour simplification used for perception
    corner_merge_dist: float = 4.0  # collapse corner-rounding double vertices
    resample_step: float = 2.0  # densification step for the conic-type gate

    def __post_init__(self):
        for name in ("flatten_tol", "simplify_tol", "residual_threshold",
                     "max_composite", "complexity_penalty", "conic_rms_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class FitCandidate:
    primitives: list[PvdPrimitive]
    residual: float
    complexity: int
    kind: str = ""
    meta: dict = field(default_factory=dict)

    def score(self, penalty: float) -> float:
        return self.residual + penalty * self.complexity


# ---------------------------------------------------------------------------
# Point-set fits
# ---------------------------------------------------------------------------


def _collinear(p: np.ndarray, tol: float = 1e-7) -> bool:
    if len(p) < 3:
        return True
    i, j = geometry.farthest_pair(p)
    if np.allclose(p[i], p[j]):
        return True
    d = geometry.points_segment_distance(p, p[i], p[j])
    return bool(d.max() < tol)


def fit_circle(points) -> tuple[tuple[float, float], float, float]:
    """Algebraic (Kasa) least-squares circle fit.

    Minimizes the conic residual sum((x^2 + y^2 + Dx + Ey + F)^2) through its
    3x3 normal equations; returns (center, radius, rms of geometric distances).
    """
    p = geometry.as_points(points)
    if len(p) < 3:
        raise FitError("circle fit needs at least 3 points")
    if _collinear(p):
        raise FitError("circle fit is degenerate: points are collinear")
    mean = p.mean(axis=0)
    q = p - mean  # centering conditions the normal matrix
    x, y = q[:, 0], q[:, 1]
    z = x * x + y * y
    A = np.array(
        [
            [np.dot(x, x), np.dot(x, y), x.sum()],
            [np.dot(x, y), np.dot(y, y), y.sum()],
            [x.sum(), y.sum(), float(len(p))],
        ]
    )
    b = -np.array([np.dot(x, z), np.dot(y, z), z.sum()])
    try:
        D, E, F = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise FitError("circle fit is degenerate: singular normal system") from exc
    r2 = (D * D + E * E) / 4.0 - F
    if not np.isfinite(r2) or r2 <= 0:
        raise FitError("circle fit is degenerate: nonpositive radius")
    cx, cy = -D / 2.0 + mean[0], -E / 2.0 + mean[1]
    radius = math.sqrt(r2)
    dists = np.hypot(p[:, 0] - cx, p[:, 1] - cy) - radius
    rms = float(np.sqrt(np.mean(dists * dists)))
    return (float(cx), float(cy)), float(radius), rms


def fit_ellipse(points) -> tuple[tuple[float, float], float, float, float, float]:
    """Direct least-squares conic fit constrained to an ellipse (4ac - b^2 > 0).

    Numerically stable Halir-Flusser decomposition of the Fitzgibbon problem.
    Returns (center, semi_major, semi_minor, rotation_deg in [0, 180), rms),
    where rms approximates geometric distance via the Sampson error.
    """
    p = geometry.as_points(points)
    if len(p) < 6:
        raise FitError("ellipse fit needs at least 6 points")
    if _collinear(p):
        raise FitError("ellipse fit is degenerate: points are collinear")
    mean = p.mean(axis=0)
    scale = float(np.linalg.norm(p - mean, axis=1).mean())
    if scale <= 0:
        raise FitError("ellipse fit is degenerate: coincident points")
    q = (p - mean) / scale
    x, y = q[:, 0], q[:, 1]
    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    try:
        T = -np.linalg.solve(S3, S2.T)
    except np.linalg.LinAlgError as exc:
        raise FitError("ellipse fit is degenerate: singular scatter system") from exc
    M = S1 + S2 @ T
    M = np.array([M[2] / 2.0, -M[1], M[0] / 2.0])
    try:
        eigval, eigvec = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise FitError("ellipse fit failed: eigenproblem did not converge") from exc
    cond = 4.0 * eigvec[0] * eigvec[2] - eigvec[1] ** 2
    ok = np.isreal(eigval) & (cond > 0)
    if not ok.any():
        raise FitError("no ellipse solution: data is hyperbolic or degenerate")
    a1 = np.real(eigvec[:, np.argmax(ok)])
    conic = np.concatenate([a1, T @ a1])

    # Undo normalization: conic in homogeneous matrix form, then H^T Q H.
    A, B, C, D, E, F = conic
    Q = np.array([[A, B / 2, D / 2], [B / 2, C, E / 2], [D / 2, E / 2, F]])
    H = np.array(
        [[1 / scale, 0, -mean[0] / scale], [0, 1 / scale, -mean[1] / scale], [0, 0, 1]]
    )
    Q = H.T @ Q @ H
    A, B, C = Q[0, 0], 2 * Q[0, 1], Q[1, 1]
    D, E, F = 2 * Q[0, 2], 2 * Q[1, 2], Q[2, 2]
    disc = B * B - 4 * A * C
    if disc >= 0:
        raise FitError("no ellipse solution: non-elliptic conic")
    cx = (2 * C * D - B * E) / disc
    cy = (2 * A * E - B * D) / disc
    at_center = A * cx * cx + B * cx * cy + C * cy * cy + D * cx + E * cy + F
    m = np.array([[A, B / 2], [B / 2, C]])
    lam, vec = np.linalg.eigh(m)
    with np.errstate(invalid="ignore", divide="ignore"):
        axes2 = -at_center / lam
    if not np.all(np.isfinite(axes2)) or np.any(axes2 <= 0):
        raise FitError("no ellipse solution: degenerate axes")
    axes = np.sqrt(axes2)
    order = np.argsort(-axes)
    major, minor = float(axes[order[0]]), float(axes[order[1]])
    vmaj = vec[:, order[0]]
    rotation = math.degrees(math.atan2(vmaj[1], vmaj[0])) % 180.0
    if (major - minor) / major < 1e-3:
        rotation = 0.0  # near-circular: orientation is meaningless

    # Sampson distances on the original points.
    px, py = p[:, 0], p[:, 1]
    g = A * px * px + B * px * py + C * py * py + D * px + E * py + F
    gx = 2 * A * px + B * py + D
    gy = B * px + 2 * C * py + E
    grad = np.hypot(gx, gy)
    grad[grad < 1e-12] = 1e-12
    d = np.abs(g) / grad
    rms = float(np.sqrt(np.mean(d * d)))
    return (float(cx), float(cy)), major, minor, float(rotation), rms


def simplify_polyline(points, tol: float, closed: bool = False) -> np.ndarray:
    """Split-merge (Ramer-Douglas-Peucker) simplification; see geometry module."""
    return geometry.simplify_polyline(points, tol, closed=closed)


# ---------------------------------------------------------------------------
# Residual rendering
# ---------------------------------------------------------------------------


def _residual_canvas(target_polys, work_canvas: int):
    pts = np.vstack([geometry.as_points(p) for p in target_polys])
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    w_box = x1 - x0
    h_box = y1 - y0
    pad = max(12.0, 0.3 * max(w_box, h_box))
    x0 -= pad
    y0 -= pad
    w_box += 2 * pad
    h_box += 2 * pad
    scale = 1.0
    if max(w_box, h_box) > work_canvas:
        scale = work_canvas / max(w_box, h_box)
    cw = max(16, int(math.ceil(w_box * scale)))
    ch = max(16, int(math.ceil(h_box * scale)))
    offset = np.array([x0, y0])
    return offset, scale, cw, ch


def _mask_image(mask: np.ndarray) -> raster.RasterImage:
    px = np.where(mask, 0, 255).astype(np.uint8)
    return raster.RasterImage(np.stack([px, px, px], axis=2))


def _paint_groups_mask(groups, offset, scale, cw, ch) -> np.ndarray:
    mask = np.zeros((ch, cw), dtype=bool)
    for group in groups:
        polys = [(geometry.as_points(g) - offset) * scale for g in group]
        mask |= raster.polygon_mask(ch, cw, polys)
    return mask


def candidate_mask(primitives, offset, scale, cw, ch) -> np.ndarray:
    mask = np.zeros((ch, cw), dtype=bool)
    for prim in primitives:
        groups = raster.primitive_paint_groups(prim)
        mask |= _paint_groups_mask(groups, offset, scale, cw, ch)
    return mask


def silhouette_residual(primitives, target_polys, opts: FitOptions) -> float:
    """1 - SSIM between the rendered candidate and the rendered target path,
    both painted black-on-white on a padded crop around the target."""
    offset, scale, cw, ch = _residual_canvas(target_polys, opts.work_canvas)
    tgt_polys = [(geometry.as_points(p) - offset) * scale for p in target_polys]
    tgt = raster.polygon_mask(ch, cw, tgt_polys)
    cand = candidate_mask(primitives, offset, scale, cw, ch)
    return mask_residual(cand, tgt)


def mask_residual(cand: np.ndarray, tgt: np.ndarray) -> float:
    return 1.0 - metrics.ssim(_mask_image(cand), _mask_image(tgt))


# ---------------------------------------------------------------------------
# Closed-shape classification
# ---------------------------------------------------------------------------


def _regularize_rectangle(corners: np.ndarray) -> np.ndarray:
    """Snap 4 approximate corners to an exact rectangle (least-squares-ish)."""
    edges = np.roll(corners, -1, axis=0) - corners
    lens = np.linalg.norm(edges, axis=1)
    # Average edge directions folded mod 90 degrees, weighted by length.
    ang = np.arctan2(edges[:, 1], edges[:, 0]) % (math.pi / 2)
    theta = math.atan2(
        float(np.sum(lens * np.sin(4 * ang))), float(np.sum(lens * np.cos(4 * ang)))
    ) / 4.0
    c, s = math.cos(-theta), math.sin(-theta)
    center = corners.mean(axis=0)
    local = (corners - center) @ np.array([[c, -s], [s, c]]).T
    hw = float(np.mean(np.abs(local[:, 0])))
    hh = float(np.mean(np.abs(local[:, 1])))
    box = np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
    out = box @ np.array([[math.cos(theta), -math.sin(theta)],
                          [math.sin(theta), math.cos(theta)]]).T + center
    # Keep the cyclic order aligned with the input corners.
    d = np.linalg.norm(out - corners[0], axis=1)
    k = int(np.argmin(d))
    out = np.roll(out, -k, axis=0)
    if np.linalg.norm(out[1] - corners[1]) > np.linalg.norm(out[-1] - corners[1]):
        out = np.roll(out[::-1], 1, axis=0)
    return out


def is_rectangle(corners: np.ndarray, side_rtol: float = 0.05, angle_tol_deg: float = 5.0) -> bool:
    if len(corners) != 4:
        return False
    edges = np.roll(corners, -1, axis=0) - corners
    lens = np.linalg.norm(edges, axis=1)
    if lens.min() <= 0:
        return False
    if abs(lens[0] - lens[2]) > side_rtol * max(lens[0], lens[2]):
        return False
    if abs(lens[1] - lens[3]) > side_rtol * max(lens[1], lens[3]):
        return False
    for i in range(4):
        a, b = edges[i], edges[(i + 1) % 4]
        ang = geometry.angle_between(a, b)
        if abs(ang - 90.0) > angle_tol_deg:
            return False
    return True


def _merge_close_vertices(pts: np.ndarray, dist: float) -> np.ndarray:
    """Collapse runs of near-coincident vertices (corner-rounding artifacts)."""
    if len(pts) < 4:
        return pts
    groups = [[0]]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[groups[-1][-1]]) <= dist:
            groups[-1].append(i)
        else:
            groups.append([i])
    # Wrap-around: first and last group may be one corner.
    if len(groups) > 1 and np.linalg.norm(pts[groups[0][0]] - pts[groups[-1][-1]]) <= dist:
        groups[0] = groups.pop() + groups[0]
    return np.array([pts[g].mean(axis=0) for g in groups])


def _resample_closed(pts: np.ndarray, step: float) -> np.ndarray:
    """Uniformly subdivide polygon edges so conic fits see the full boundary."""
    out = []
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        L = float(np.linalg.norm(b - a))
        k = max(1, int(math.ceil(L / step)))
        for t in range(k):
            out.append(a + (b - a) * (t / k))
    return np.array(out)


def classify_closed(
    polyline,
    opts: FitOptions | None = None,
    color: Color = (0, 0, 0),
    style: Style = Style.FILLED,
) -> FitCandidate | None:
    """Classify a closed simple polyline as one of the filled-shape types.

    Cascade: 3 simplified vertices -> triangle; 4 -> rectangle (opposite sides
    within 5%, corners within 5 degrees) else quadrilateral-polygon; 5 or more
    -> circle if its rms fits within tolerance, else ellipse, else polygon.
    The conic rms gates run on an arclength-resampled boundary, otherwise a
    handful of concyclic corner vertices (every rectangle is cyclic) would
    pass them; accepted parameters are refit on the original on-curve points.
    """
    opts = opts or FitOptions()
    pts = geometry.as_points(polyline)
    if len(pts) < 3:
        return None
    simp = geometry.simplify_polyline(pts, opts.simplify_tol, closed=True)
    simp = _merge_close_vertices(simp, opts.corner_merge_dist)
    n = len(simp)
    if n < 3:
        return None
    prim: PvdPrimitive
    if n == 3:
        prim = Triangle(vertices=_tup(simp), color=color, style=style)
        kind = "triangle"
    elif n == 4:
        if is_rectangle(simp):
            prim = Rectangle(vertices=_tup(_regularize_rectangle(simp)), color=color, style=style)
            kind = "rectangle"
        else:
            prim = Polygon(vertices=_tup(simp), color=color, style=style)
            kind = "polygon"
    else:
        kind = "polygon"
        prim = Polygon(vertices=_tup(simp), color=color, style=style)
        dense = _resample_closed(pts, opts.resample_step)
        try:
            center, radius, rms = fit_circle(dense)
            if rms <= opts.conic_rms_tol:
                try:
                    center, radius, _ = fit_circle(pts)  # on-curve points: unbiased radius
                except FitError:
                    pass
                prim = Circle(center=center, radius=radius, color=color, style=style)
                kind = "circle"
        except FitError:
            pass
        if kind == "polygon":
            try:
                ecenter, major, minor, rot, erms = fit_ellipse(dense)
                if erms <= opts.conic_rms_tol:
                    try:
                        ecenter, major, minor, rot, _ = fit_ellipse(pts)
                    except FitError:
                        pass
                    prim = Ellipse(
                        center=ecenter, major_axis=major, minor_axis=minor,
                        rotation=rot, color=color, style=style,
                    )
                    kind = "ellipse"
            except FitError:
                pass
    residual = silhouette_residual([_silhouette_version(prim)], [pts], opts)
    return FitCandidate(
        primitives=[prim], residual=residual, complexity=COMPLEXITY[kind], kind=kind
    )


def _silhouette_version(prim: PvdPrimitive) -> PvdPrimitive:
    """Residuals for closed shapes compare filled silhouettes."""
    if prim.style is Style.FILLED:
        return prim
    from dataclasses import replace

    return replace(prim, style=Style.FILLED)


def _tup(arr: np.ndarray) -> tuple:
    return tuple((float(x), float(y)) for x, y in arr)


def detect_style(path) -> Style:
    """Outlined iff the path has a hole covering at least half the outer area."""
    polys = path.flatten(0.5)
    if not polys:
        raise FitError("empty path")
    areas = [geometry.polygon_area(p) for p in polys]
    outer_idx = int(np.argmax(areas))
    outer = areas[outer_idx]
    if outer <= 0:
        return Style.FILLED
    holes = [a for i, a in enumerate(areas) if i != outer_idx]
    if any(a >= 0.5 * outer for a in holes):
        return Style.OUTLINED
    return Style.FILLED
