"""Raster-to-vector conversion.

Pipeline: exact-color layering (with speckle merging), 8-connected components
per layer, Moore-neighbor boundary tracing of each component and its holes,
split-merge polyline simplification, and a half-pixel outward offset that
moves traced pixel-center contours onto the true region boundary. One
VectorPath per component, holes as extra even-odd subpaths, paths sorted by
area descending.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import geometry, raster, svgio
from .primitives import Color
from .svgio import SvgError, VectorDocument, VectorPath, path_from_polygons

_EIGHT = np.ones((3, 3), dtype=int)

# Clockwise Moore neighbourhood starting at west, as (dc, dr).
_MOORE = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)]


@dataclass
class VectorizeOptions:
    simplify_tol: float = 1.5
    speckle_fraction: float = 0.0005  # colors below this share of pixels merge away


class VectorizeError(Exception):
    pass


# ---------------------------------------------------------------------------
# Contour tracing
# ---------------------------------------------------------------------------


def moore_trace(mask: np.ndarray) -> np.ndarray:
    """Trace the outer boundary of the True region (assumed 8-connected).

    Returns boundary pixel centers (x, y) in order. The walk is a
    deterministic map over (pixel, backtrack) states, so the first repeated
    state closes the boundary cycle exactly once.
    """
    rows, cols = np.nonzero(mask)
    if len(rows) == 0:
        return np.zeros((0, 2))
    r0 = int(rows.min())
    c0 = int(cols[rows == r0].min())
    h, w = mask.shape

    def filled(c, r):
        return 0 <= r < h and 0 <= c < w and mask[r, c]

    # The west neighbour of the topmost-leftmost pixel is background.
    cur = (c0, r0)
    prev_dir = 0
    contour: list[tuple[int, int]] = []
    seen: dict[tuple, int] = {}
    while True:
        state = (cur, prev_dir)
        if state in seen:
            return _centers(contour[seen[state]:])
        seen[state] = len(contour)
        contour.append(cur)
        nxt = None
        for k in range(1, 9):
            idx = (prev_dir + k) % 8
            dc, dr = _MOORE[idx]
            cand = (cur[0] + dc, cur[1] + dr)
            if filled(cand[0], cand[1]):
                back_dc, back_dr = _MOORE[(prev_dir + k - 1) % 8]
                back = (cur[0] + back_dc, cur[1] + back_dr)
                nxt = (cand, _MOORE.index((back[0] - cand[0], back[1] - cand[1])))
                break
        if nxt is None:
            return _centers(contour)  # isolated pixel
        cur, prev_dir = nxt


def _centers(contour) -> np.ndarray:
    pts = np.asarray(contour, dtype=np.float64) + 0.5
    if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    # Collapse immediate duplicates left by the stopping rule.
    keep = [0]
    for i in range(1, len(pts)):
        if not np.allclose(pts[i], pts[keep[-1]]):
            keep.append(i)
    return pts[keep]


def simplify_contour(pts: np.ndarray, tol: float) -> np.ndarray:
    """Split-merge simplification of a closed contour."""
    if len(pts) <= 4 or tol <= 0:
        return pts
    return geometry.simplify_polyline(pts, tol, closed=True)


def _bbox_polygon(mask: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(mask)
    x0, x1 = cols.min(), cols.max() + 1
    y0, y1 = rows.min(), rows.max() + 1
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64)


def trace_component(comp_mask: np.ndarray, tol: float) -> list[np.ndarray]:
    """Outer contour plus hole contours of one component, simplified and
    offset onto the true region boundary."""
    out: list[np.ndarray] = []
    outer = moore_trace(comp_mask)
    if len(outer) < 3:
        out.append(_bbox_polygon(comp_mask))
    else:
        poly = simplify_contour(outer, tol)
        if len(poly) >= 3:
            out.append(geometry.offset_polygon(poly, 0.5))
        else:
            out.append(_bbox_polygon(comp_mask))
    # Holes: complement regions not touching the bounding-box frame.
    rows, cols = np.nonzero(comp_mask)
    r0, r1 = rows.min(), rows.max()
    c0, c1 = cols.min(), cols.max()
    window = comp_mask[r0 : r1 + 1, c0 : c1 + 1]
    inv = ~window
    lab, n = ndimage.label(inv, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    if n:
        border = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])))
        for hole_id in range(1, n + 1):
            if hole_id in border:
                continue
            hole = lab == hole_id
            contour = moore_trace(hole)
            if len(contour) < 3:
                hp = _bbox_polygon(hole)
                hp += np.array([c0, r0], dtype=np.float64)
                out.append(hp)
                continue
            poly = simplify_contour(contour, tol)
            if len(poly) < 3:
                poly = contour
            poly = geometry.offset_polygon(poly, 0.5)
            poly = poly + np.array([c0, r0], dtype=np.float64)
            out.append(poly[::-1])  # holes wind opposite to the outer contour
    return out


# ---------------------------------------------------------------------------
# Color layering
# ---------------------------------------------------------------------------


def _encode_colors(px: np.ndarray) -> np.ndarray:
    p = px.astype(np.uint32)
    return (p[:, :, 0] << 16) | (p[:, :, 1] << 8) | p[:, :, 2]


def _decode_color(code: int) -> Color:
    return (int(code >> 16) & 255, int(code >> 8) & 255, int(code) & 255)


def color_layers(px: np.ndarray, speckle_fraction: float):
    """Split an image into exact-color layers, merging rare colors into the
    nearest frequent one. Returns (codes image, background code, kept codes)."""
    codes = _encode_colors(px)
    flat = codes.ravel()
    uniq, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    total = flat.size
    threshold = max(1, int(round(speckle_fraction * total)))
    keep = counts >= threshold
    if not keep.any():
        keep = counts == counts.max()
    kept_codes = uniq[keep]
    kept_rgb = np.array([_decode_color(c) for c in kept_codes], dtype=np.float64)
    remap = np.empty(len(uniq), dtype=np.uint32)
    for i, code in enumerate(uniq):
        if keep[i]:
            remap[i] = code
        else:
            rgb = np.array(_decode_color(code), dtype=np.float64)
            d = np.linalg.norm(kept_rgb - rgb, axis=1)
            remap[i] = kept_codes[int(np.argmin(d))]
    merged = remap[inverse].reshape(codes.shape)
    kept_uniq, kept_counts = np.unique(merged.ravel(), return_counts=True)
    background = int(kept_uniq[int(np.argmax(kept_counts))])
    return merged, background, [int(c) for c in kept_uniq]


# ---------------------------------------------------------------------------
# Main entry points
# ---------------------------------------------------------------------------


def vectorize(img: raster.RasterImage, opts: VectorizeOptions | None = None) -> VectorDocument:
    """Convert a raster image into an even-odd filled vector document."""
    opts = opts or VectorizeOptions()
    px = img.pixels
    h, w = px.shape[:2]
    merged, background, kept = color_layers(px, opts.speckle_fraction)
    paths: list[VectorPath] = []
    for code in kept:
        if code == background:
            continue
        mask = merged == code
        lab, n = ndimage.label(mask, structure=_EIGHT)
        fill = _decode_color(code)
        objects = ndimage.find_objects(lab)
        for comp_id in range(1, n + 1):
            sl = objects[comp_id - 1]
            comp = np.zeros_like(mask)
            comp[sl] = lab[sl] == comp_id
            polys = trace_component(comp, opts.simplify_tol)
            paths.append(path_from_polygons(polys, fill))
    doc = VectorDocument(width=float(w), height=float(h),
                         background=_decode_color(background), paths=paths)
    return doc.sorted_by_area()


def vectorize_external(img: raster.RasterImage, command_template: str) -> VectorDocument:
    """Run an external raster-to-SVG converter and parse its output.

    The template must contain {input} and {output} placeholders, e.g.
    "vtracer --input {input} --output {output}".
    """
    if "{input}" not in command_template or "{output}" not in command_template:
        raise VectorizeError("command template must contain {input} and {output}")
    with tempfile.TemporaryDirectory(prefix="pvdkit-vec-") as tmp:
        in_path = Path(tmp) / "input.png"
        out_path = Path(tmp) / "output.svg"
        raster.write_png(img, in_path)
        cmd = [
            part.replace("{input}", str(in_path)).replace("{output}", str(out_path))
            for part in shlex.split(command_template)
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=300)
        except FileNotFoundError as exc:
            raise VectorizeError(f"external vectorizer not found: {cmd[0]}") from exc
        if proc.returncode != 0:
            raise VectorizeError(
                f"external vectorizer failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        if not out_path.exists():
            raise VectorizeError("external vectorizer produced no output file")
        try:
            doc = svgio.parse_svg(out_path.read_text())
        except SvgError as exc:
            raise VectorizeError(f"cannot parse external vectorizer output: {exc}") from exc
    return doc.sorted_by_area()
