"""End-to-end perception: vectorize, decompose, fit each selected path.

Candidate generation per path: style detection picks the route (outlined
ring, stroke network, or filled closed shape); composition decoding runs
when no tight single-primitive explanation exists. Model selection minimizes
residual + penalty * complexity; the generic traced-polygon fallback defers
to a composition that explains the path within threshold, since a traced
polygon reconstructs any silhouette and would otherwise always win.
"""

from __future__ import annotations

import numpy as np

from .. import geometry, raster
from ..decompose import DEFAULT_THRESHOLD, decompose
from ..primitives import (
    Ellipse,
    PerceivedObject,
    PerceptionResult,
    Polygon,
    Polyline,
    Rectangle,
    Style,
    Triangle,
    Circle,
    validate,
)
from ..svgio import VectorDocument, VectorPath
from ..vectorize import VectorizeOptions, vectorize
from .compose import decode_composition
from .shapes import (
    COMPLEXITY,
    FitCandidate,
    FitError,
    FitOptions,
    classify_closed,
    detect_style,
    fit_circle,
    fit_ellipse,
    silhouette_residual,
    _merge_close_vertices,
)
from .strokes import estimate_stroke_width, fit_stroke_network

# Parameter count per primitive kind, for polygon-vs-composition arbitration.
_DESCRIPTION_LENGTH = {
    "circle": 3,
    "ellipse": 5,
    "rectangle": 5,
    "triangle": 6,
    "line_segment": 5,
}
_DL_WEIGHT = 0.002
_MAX_COMPOSABLE_CORNERS = 14


def _outer_and_holes(path: VectorPath, tol: float):
    polys = path.flatten(tol)
    areas = [geometry.polygon_area(p) for p in polys]
    outer_idx = int(np.argmax(areas))
    outer = polys[outer_idx]
    holes = [p for i, p in enumerate(polys) if i != outer_idx]
    return polys, outer, holes


def _is_stroke_like(path: VectorPath, polys, holes) -> bool:
    w_est = estimate_stroke_width(polys)
    if len(holes) >= 2:
        return True
    pts = np.vstack(polys)
    span = float(max(pts[:, 0].max() - pts[:, 0].min(), pts[:, 1].max() - pts[:, 1].min()))
    return w_est <= 8.0 and w_est <= 0.15 * span


def _refine_outlined(cand: FitCandidate, outer, holes, opts: FitOptions) -> FitCandidate:
    """Average outer- and hole-contour fits so parameters sit on the stroke
    midline instead of the outer boundary."""
    if not holes:
        return cand
    hole = max(holes, key=geometry.polygon_area)
    prim = cand.primitives[0]
    try:
        if isinstance(prim, Circle):
            (hx, hy), hr, _ = fit_circle(hole)
            prim = Circle(
                center=((prim.center[0] + hx) / 2, (prim.center[1] + hy) / 2),
                radius=(prim.radius + hr) / 2, color=prim.color, style=prim.style,
            )
        elif isinstance(prim, Ellipse):
            (hx, hy), hmaj, hmin, _, _ = fit_ellipse(hole)
            prim = Ellipse(
                center=((prim.center[0] + hx) / 2, (prim.center[1] + hy) / 2),
                major_axis=(prim.major_axis + hmaj) / 2,
                minor_axis=(prim.minor_axis + hmin) / 2,
                rotation=prim.rotation, color=prim.color, style=prim.style,
            )
        elif isinstance(prim, (Rectangle, Triangle, Polygon)):
            hsimp = geometry.simplify_polyline(hole, opts.simplify_tol, closed=True)
            hsimp = _merge_close_vertices(hsimp, opts.corner_merge_dist)
            verts = np.asarray(prim.vertices, dtype=float)
            if len(hsimp) == len(verts):
                matched = []
                used = set()
                ok = True
                for v in verts:
                    d = np.linalg.norm(hsimp - v, axis=1)
                    k = int(np.argmin(d))
                    if k in used or d[k] > 4 * raster.OUTLINE_WIDTH:
                        ok = False
                        break
                    used.add(k)
                    matched.append((v + hsimp[k]) / 2)
                if ok:
                    mid = np.array(matched)
                    if isinstance(prim, Rectangle):
                        from .shapes import _regularize_rectangle

                        mid = _regularize_rectangle(mid)
                    prim = type(prim)(
                        vertices=tuple(map(tuple, mid)),
                        color=prim.color, style=prim.style,
                    )
    except FitError:
        return cand
    if validate(prim):
        return cand
    return FitCandidate(
        primitives=[prim], residual=cand.residual,
        complexity=cand.complexity, kind=cand.kind, meta=cand.meta,
    )


def _fallback_candidates(path: VectorPath, outer, opts: FitOptions) -> FitCandidate | None:
    """Last-resort path primitive over the simplified outer contour."""
    simp = geometry.simplify_polyline(outer, opts.simplify_tol, closed=True)
    if len(simp) >= 3:
        prim = Polyline(
            vertices=tuple(map(tuple, simp)), color=path.fill,
            line_width=max(1.0, estimate_stroke_width([outer])),
        )
        if not validate(prim):
            residual = silhouette_residual([prim], [outer], opts)
            return FitCandidate(
                primitives=[prim], residual=residual,
                complexity=COMPLEXITY["path"], kind="path",
                meta={"low_confidence": True},
            )
    corners, _ = geometry.min_area_rect(outer)
    from .shapes import _regularize_rectangle

    prim = Rectangle(
        vertices=tuple(map(tuple, _regularize_rectangle(corners))), color=path.fill
    )
    if validate(prim):
        return None
    residual = silhouette_residual([prim], [outer], opts)
    return FitCandidate(
        primitives=[prim], residual=residual,
        complexity=COMPLEXITY["rectangle"], kind="rectangle",
        meta={"low_confidence": True},
    )


def _description_length(cand: FitCandidate) -> float:
    total = 0.0
    for p in cand.primitives:
        if isinstance(p, (Polygon, Triangle, Rectangle)):
            base = _DESCRIPTION_LENGTH.get(p.type_name)
            total += base if base is not None else 2 * len(p.vertices)
        elif isinstance(p, Polyline):
            total += 2 * len(p.vertices) + 1
        else:
            total += _DESCRIPTION_LENGTH.get(p.type_name, 8)
    return total


def fit_path(path: VectorPath, opts: FitOptions | None = None) -> tuple[FitCandidate, dict]:
    """Fit one single-path document's path; returns (winner, diagnostics)."""
    opts = opts or FitOptions()
    polys, outer, holes = _outer_and_holes(path, opts.flatten_tol)
    style = detect_style(path)
    candidates: list[FitCandidate] = []

    if style is Style.OUTLINED:
        cand = classify_closed(outer, opts, color=path.fill, style=Style.OUTLINED)
        if cand is not None:
            cand = _refine_outlined(cand, outer, holes, opts)
            cand.residual = silhouette_residual(cand.primitives, polys, opts)
            candidates.append(cand)
        if len(holes) >= 2:
            stroke = fit_stroke_network(path, opts, color=path.fill)
            if stroke is not None:
                candidates.append(stroke)
    elif _is_stroke_like(path, polys, holes):
        stroke = fit_stroke_network(path, opts, color=path.fill)
        if stroke is not None:
            candidates.append(stroke)
        if stroke is None or stroke.residual > opts.residual_threshold:
            cand = classify_closed(outer, opts, color=path.fill, style=Style.FILLED)
            if cand is not None:
                candidates.append(cand)
    else:
        cand = classify_closed(outer, opts, color=path.fill, style=style)
        if cand is not None:
            candidates.append(cand)

    candidates = [c for c in candidates if not any(validate(p) for p in c.primitives)]

    # Composition decoding when nothing structural explains the path tightly.
    structural = [c for c in candidates if c.kind != "polygon"]
    best_structural = min((c.residual for c in structural), default=float("inf"))
    polygon_cand = next((c for c in candidates if c.kind == "polygon"), None)
    composition = None
    many_corners = (
        polygon_cand is not None
        and len(polygon_cand.primitives[0].vertices) > _MAX_COMPOSABLE_CORNERS
    )
    if best_structural > opts.residual_threshold and not many_corners:
        prims = decode_composition(path, opts, color=path.fill, style=style)
        if len(prims) >= 2 and not any(validate(p) for p in prims):
            residual = silhouette_residual(prims, polys, opts)
            composition = FitCandidate(
                primitives=list(prims), residual=residual,
                complexity=COMPLEXITY["composition"], kind="composition",
            )
            candidates.append(composition)

    if not candidates:
        fallback = _fallback_candidates(path, outer, opts)
        if fallback is None:
            raise FitError("no viable candidate for path")
        return fallback, {"kinds_tried": [], "fallback": True}

    chosen = min(candidates, key=lambda c: c.score(opts.complexity_penalty))
    # A traced polygon reconstructs any filled silhouette near-perfectly, so
    # rank-based selection can never favor a composition; arbitrate that one
    # pairing by description length instead.
    if (
        chosen.kind == "polygon"
        and composition is not None
        and composition.residual <= opts.residual_threshold
    ):
        dl_poly = chosen.residual + _DL_WEIGHT * _description_length(chosen)
        dl_comp = composition.residual + _DL_WEIGHT * _description_length(composition)
        if dl_comp < dl_poly:
            chosen = composition
    return chosen, {"kinds_tried": [c.kind for c in candidates]}


def perceive(
    img: raster.RasterImage,
    opts: FitOptions | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> PerceptionResult:
    """Vectorize, decompose, and fit every selected path of an image."""
    opts = opts or FitOptions()
    doc = vectorize(img, VectorizeOptions(simplify_tol=opts.vectorize_tol))
    return perceive_document(doc, opts, threshold)


def perceive_document(
    doc: VectorDocument,
    opts: FitOptions | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> PerceptionResult:
    opts = opts or FitOptions()
    report = decompose(doc, threshold)
    objects = []
    for out_idx, (path_idx, sub) in enumerate(report.selected):
        cand, diag = fit_path(sub.paths[0], opts)
        meta = {
            "path_index": path_idx,
            "kind": cand.kind,
            "residual": round(cand.residual, 6),
        }
        if cand.meta.get("low_confidence") or diag.get("fallback"):
            meta["low_confidence"] = True
        objects.append(
            PerceivedObject(
                key=f"object_{out_idx}", primitives=tuple(cand.primitives), meta=meta
            )
        )
    return PerceptionResult(objects=tuple(objects))
