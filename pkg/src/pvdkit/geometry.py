"""Planar geometry helpers shared across generation, rasterization and fitting.

All coordinates are pixel coordinates: origin top-left, x rightward, y
downward. Polygons are plain (N, 2) float arrays; no wrapper classes.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-9


def as_points(pts) -> np.ndarray:
    """Coerce a point sequence to an (N, 2) float64 array."""
    a = np.asarray(pts, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got shape {a.shape}")
    return a


def polygon_signed_area(pts) -> float:
    """Shoelace signed area. Positive = counterclockwise in a y-down frame."""
    p = as_points(pts)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_area(pts) -> float:
    return abs(polygon_signed_area(pts))


def polygon_centroid(pts) -> tuple[float, float]:
    """Area centroid; falls back to vertex mean for degenerate polygons."""
    p = as_points(pts)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < EPS:
        return float(x.mean()), float(y.mean())
    cx = float(((x + xn) * cross).sum() / (6.0 * a))
    cy = float(((y + yn) * cross).sum() / (6.0 * a))
    return cx, cy


def polyline_length(pts) -> float:
    p = as_points(pts)
    if len(p) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p, eps: float = EPS) -> bool:
    """p collinear with a-b is assumed; checks p within the segment's box."""
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def segments_intersect(p1, p2, p3, p4, eps: float = EPS) -> bool:
    """True if closed segments p1-p2 and p3-p4 share any point."""
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True
    if abs(d1) <= eps and _on_segment(p3, p4, p1, eps):
        return True
    if abs(d2) <= eps and _on_segment(p3, p4, p2, eps):
        return True
    if abs(d3) <= eps and _on_segment(p1, p2, p3, eps):
        return True
    if abs(d4) <= eps and _on_segment(p1, p2, p4, eps):
        return True
    return False


def segment_intersection_point(p1, p2, p3, p4) -> tuple[float, float] | None:
    """Intersection point of two segments, or None (parallel/disjoint).

    Collinear overlaps return None: there is no single intersection point.
    """
    r = (p2[0] - p1[0], p2[1] - p1[1])
    s = (p4[0] - p3[0], p4[1] - p3[1])
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) < EPS:
        return None
    qp = (p3[0] - p1[0], p3[1] - p1[1])
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    if -EPS <= t <= 1 + EPS and -EPS <= u <= 1 + EPS:
        return (p1[0] + t * r[0], p1[1] + t * r[1])
    return None


def polyline_self_intersects(pts, closed: bool, eps: float = EPS) -> bool:
    """Check a polyline for self-intersection between non-adjacent segments.

    Adjacent segments legitimately share a vertex and are skipped; for closed
    polylines the last-first edge is adjacent to both neighbours.
    """
    p = as_points(pts)
    n = len(p)
    segs = [(p[i], p[(i + 1) % n]) for i in range(n if closed else n - 1)]
    m = len(segs)
    for i in range(m):
        for j in range(i + 1, m):
            if j == i + 1:
                continue
            if closed and i == 0 and j == m - 1:
                continue
            if segments_intersect(segs[i][0], segs[i][1], segs[j][0], segs[j][1], eps):
                return True
    return False


def convex_hull(pts) -> np.ndarray:
    """Andrew's monotone chain. Returns hull vertices in CCW order (y-down)."""
    p = as_points(pts)
    order = np.lexsort((p[:, 1], p[:, 0]))
    p = p[order]
    uniq = [p[0]]
    for q in p[1:]:
        if abs(q[0] - uniq[-1][0]) > EPS or abs(q[1] - uniq[-1][1]) > EPS:
            uniq.append(q)
    p = np.array(uniq)
    if len(p) <= 2:
        return p
    lower: list[np.ndarray] = []
    for q in p:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], q) <= EPS:
            lower.pop()
        lower.append(q)
    upper: list[np.ndarray] = []
    for q in p[::-1]:
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], q) <= EPS:
            upper.pop()
        upper.append(q)
    return np.array(lower[:-1] + upper[:-1])


def farthest_pair(pts) -> tuple[int, int]:
    """Indices of the two points at maximal distance (hull-based)."""
    p = as_points(pts)
    if len(p) == 2:
        return 0, 1
    hull = convex_hull(p)
    if len(hull) == 1:
        return 0, 0
    # Hull is small for our inputs; the quadratic scan over it is fine.
    best, pair = -1.0, (0, 0)
    for i in range(len(hull)):
        d = np.linalg.norm(hull - hull[i], axis=1)
        j = int(np.argmax(d))
        if d[j] > best:
            best, pair = float(d[j]), (i, j)
    # Map hull vertices back to original indices.
    out = []
    for h in pair:
        d = np.linalg.norm(p - hull[h], axis=1)
        out.append(int(np.argmin(d)))
    return out[0], out[1]


def point_segment_distance(pt, a, b) -> float:
    ax, ay = a
    bx, by = b
    px, py = pt
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 < EPS:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def points_segment_distance(pts, a, b) -> np.ndarray:
    """Vectorized distance from many points to one segment."""
    p = as_points(pts)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = b - a
    L2 = float(d @ d)
    if L2 < EPS:
        return np.linalg.norm(p - a, axis=1)
    t = np.clip(((p - a) @ d) / L2, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.linalg.norm(p - proj, axis=1)


def clip_polygon_rect(pts, x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon against an axis-aligned rectangle."""
    poly = [tuple(q) for q in as_points(pts)]

    def clip_half(poly, inside, intersect):
        out = []
        n = len(poly)
        for i in range(n):
            cur, nxt = poly[i], poly[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return out

    def x_cut(c, n, x):
        t = (x - c[0]) / (n[0] - c[0])
        return (x, c[1] + t * (n[1] - c[1]))

    def y_cut(c, n, y):
        t = (y - c[1]) / (n[1] - c[1])
        return (c[0] + t * (n[0] - c[0]), y)

    poly = clip_half(poly, lambda p: p[0] >= x0, lambda c, n: x_cut(c, n, x0))
    if poly:
        poly = clip_half(poly, lambda p: p[0] <= x1, lambda c, n: x_cut(c, n, x1))
    if poly:
        poly = clip_half(poly, lambda p: p[1] >= y0, lambda c, n: y_cut(c, n, y0))
    if poly:
        poly = clip_half(poly, lambda p: p[1] <= y1, lambda c, n: y_cut(c, n, y1))
    return np.array(poly, dtype=np.float64) if poly else np.zeros((0, 2))


def rotate_points(pts, angle_deg: float, center=(0.0, 0.0)) -> np.ndarray:
    p = as_points(pts)
    th = math.radians(angle_deg)
    c, s = math.cos(th), math.sin(th)
    q = p - np.asarray(center, dtype=np.float64)
    return np.column_stack(
        [q[:, 0] * c - q[:, 1] * s, q[:, 0] * s + q[:, 1] * c]
    ) + np.asarray(center, dtype=np.float64)


def angle_between(v1, v2) -> float:
    """Unsigned angle between two vectors, in degrees [0, 180]."""
    n1 = math.hypot(*v1)
    n2 = math.hypot(*v2)
    if n1 < EPS or n2 < EPS:
        raise ValueError("zero-length vector")
    cosv = (v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)
    return math.degrees(math.acos(max(-1.0, min(1.0, cosv))))


def offset_polygon(pts, delta: float, miter_limit: float = 4.0) -> np.ndarray:
    """Offset a simple polygon outward by `delta` (inward if negative).

    Outward is determined from the polygon's winding. Uses miter joins,
    clamped to `miter_limit * |delta|` at sharp corners.
    """
    p = as_points(pts)
    n = len(p)
    if n < 3 or abs(delta) < EPS:
        return p.copy()
    sign = 1.0 if polygon_signed_area(p) > 0 else -1.0
    out = np.empty_like(p)
    for i in range(n):
        prev = p[i - 1]
        cur = p[i]
        nxt = p[(i + 1) % n]
        d1 = cur - prev
        d2 = nxt - cur
        l1 = np.linalg.norm(d1)
        l2 = np.linalg.norm(d2)
        if l1 < EPS or l2 < EPS:
            out[i] = cur
            continue
        d1 /= l1
        d2 /= l2
        # Edge normals pointing away from the interior for CCW (+) winding.
        n1 = sign * np.array([d1[1], -d1[0]])
        n2 = sign * np.array([d2[1], -d2[0]])
        bis = n1 + n2
        bl = np.linalg.norm(bis)
        if bl < EPS:
            out[i] = cur + delta * n1
            continue
        bis /= bl
        scale = 1.0 / max(float(bis @ n1), 1.0 / miter_limit)
        out[i] = cur + delta * scale * bis
    return out


def flatten_circle(cx: float, cy: float, r: float, tol: float = 0.25) -> np.ndarray:
    """Polygonal approximation of a circle with chord error <= tol."""
    r = abs(r)
    if r <= tol:
        n = 8
    else:
        step = 2.0 * math.acos(max(-1.0, 1.0 - tol / r))
        n = max(8, int(math.ceil(2.0 * math.pi / step)))
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th)])


def flatten_ellipse(
    cx: float,
    cy: float,
    a: float,
    b: float,
    rotation_deg: float,
    tol: float = 0.25,
) -> np.ndarray:
    """Polygonal approximation of a rotated ellipse (a = semi-major)."""
    rmax = max(abs(a), abs(b))
    if rmax <= tol:
        n = 8
    else:
        step = 2.0 * math.acos(max(-1.0, 1.0 - tol / rmax))
        n = max(12, int(math.ceil(2.0 * math.pi / step)))
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.column_stack([a * np.cos(th), b * np.sin(th)])
    return rotate_points(pts, rotation_deg) + np.array([cx, cy])


def _rdp_keep(p: np.ndarray, tol: float) -> np.ndarray:
    """Ramer-Douglas-Peucker split phase; returns kept indices (open chain)."""
    n = len(p)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b <= a + 1:
            continue
        d = points_segment_distance(p[a + 1 : b], p[a], p[b])
        k = int(np.argmax(d))
        if d[k] > tol:
            m = a + 1 + k
            keep[m] = True
            stack.append((a, m))
            stack.append((m, b))
    return np.nonzero(keep)[0]


def _merge_pass(p: np.ndarray, idx: np.ndarray, tol: float) -> np.ndarray:
    """Drop kept vertices whose removal keeps the span deviation within tol."""
    idx = list(idx)
    changed = True
    while changed and len(idx) > 2:
        changed = False
        i = 1
        while i < len(idx) - 1:
            a, b = idx[i - 1], idx[i + 1]
            span = p[a : b + 1]
            if len(span) > 2 and points_segment_distance(span[1:-1], p[a], p[b]).max() <= tol:
                idx.pop(i)
                changed = True
            else:
                i += 1
    return np.array(idx, dtype=int)


def simplify_polyline(points, tol: float, closed: bool = False) -> np.ndarray:
    """Split-merge polyline simplification (RDP split plus a merge sweep).

    Endpoints of open chains are preserved. Closed chains are split at the
    farthest-point pair so both halves keep their extreme vertices. tol = 0
    returns the input unchanged.
    """
    p = as_points(points)
    if tol <= 0 or len(p) <= 2:
        return p.copy()
    if not closed:
        idx = _rdp_keep(p, tol)
        idx = _merge_pass(p, idx, tol)
        return p[idx]
    i, j = farthest_pair(p)
    if i == j:
        return p[:1].copy()
    if i > j:
        i, j = j, i
    rolled = np.roll(p, -i, axis=0)
    cut = j - i
    first = rolled[: cut + 1]
    second = np.vstack([rolled[cut:], rolled[:1]])
    idx1 = _merge_pass(first, _rdp_keep(first, tol), tol)
    idx2 = _merge_pass(second, _rdp_keep(second, tol), tol)
    out = np.vstack([first[idx1[:-1]], second[idx2[:-1]]])
    return out


def min_area_rect(pts) -> tuple[np.ndarray, float]:
    """Minimum-area oriented bounding rectangle via rotating calipers.

    Returns (4 corner points, area). Corners are in boundary order.
    """
    hull = convex_hull(pts)
    if len(hull) < 3:
        p = as_points(pts)
        lo, hi = p.min(axis=0), p.max(axis=0)
        corners = np.array([lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]])
        return corners, float(np.prod(hi - lo))
    best_area = math.inf
    best = None
    for i in range(len(hull)):
        d = hull[(i + 1) % len(hull)] - hull[i]
        L = np.linalg.norm(d)
        if L < EPS:
            continue
        ux = d / L
        uy = np.array([-ux[1], ux[0]])
        xs = hull @ ux
        ys = hull @ uy
        w = xs.max() - xs.min()
        h = ys.max() - ys.min()
        area = float(w * h)
        if area < best_area:
            x0, x1 = xs.min(), xs.max()
            y0, y1 = ys.min(), ys.max()
            corners = np.array(
                [
                    x0 * ux + y0 * uy,
                    x1 * ux + y0 * uy,
                    x1 * ux + y1 * uy,
                    x0 * ux + y1 * uy,
                ]
            )
            best_area = area
            best = corners
    return best, best_area
