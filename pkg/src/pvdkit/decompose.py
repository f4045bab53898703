"""Incremental decomposition: select salient paths, skip noise.

Paths are visited in area-descending order. Each path's gain is the marginal
reduction of the pixel difference between the partial render and the full
render, normalized by total canvas energy (255 * 3 * W * H) so the threshold
is resolution-independent. Paths whose gain falls below the threshold are
skipped and never revisited.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import raster
from .svgio import VectorDocument

DEFAULT_THRESHOLD = 0.002


class DecomposeError(Exception):
    pass


def pixel_diff(a: raster.RasterImage, b: raster.RasterImage) -> int:
    """Sum of absolute per-channel differences over all pixels."""
    if a.pixels.shape != b.pixels.shape:
        raise DecomposeError(
            f"image dimensions differ: {a.pixels.shape} vs {b.pixels.shape}"
        )
    return int(
        np.abs(a.pixels.astype(np.int32) - b.pixels.astype(np.int32)).sum()
    )


@dataclass
class DecomposeReport:
    selected: list[tuple[int, VectorDocument]] = field(default_factory=list)
    skipped: list[tuple[int, float]] = field(default_factory=list)
    threshold: float = DEFAULT_THRESHOLD
    trace: list[dict] = field(default_factory=list)

    def selected_indices(self) -> list[int]:
        return [i for i, _ in self.selected]


def decompose(doc: VectorDocument, threshold: float = DEFAULT_THRESHOLD) -> DecomposeReport:
    """Greedy single-pass path selection by marginal pixel-difference gain.

    Indices in the report refer to the area-sorted document order.
    """
    if not 0 < threshold < 1:
        raise DecomposeError("threshold must be in (0, 1)")
    doc = doc.sorted_by_area()
    report = DecomposeReport(threshold=threshold)
    if not doc.paths:
        return report
    w = int(round(doc.width))
    h = int(round(doc.height))
    full = raster.render_paths(doc, width=w, height=h)
    denom = 255.0 * 3.0 * w * h
    canvas = raster.blank(w, h, doc.background)
    residual = pixel_diff(canvas, full)
    scale = np.array([w / doc.width, h / doc.height])
    for i, path in enumerate(doc.paths):
        candidate = canvas.copy()
        polys = [poly * scale for poly in path.flatten(raster.FLATTEN_TOL)]
        raster.fill_polygons(candidate.pixels, polys, path.fill)
        new_residual = pixel_diff(candidate, full)
        gain = (residual - new_residual) / denom
        accepted = gain >= threshold
        report.trace.append(
            {
                "index": i,
                "gain": max(gain, 0.0),
                "accepted": accepted,
                "residual_after": (new_residual if accepted else residual) / denom,
            }
        )
        if accepted:
            report.selected.append((i, doc.single_path(i)))
            canvas = candidate
            residual = new_residual
        else:
            report.skipped.append((i, max(gain, 0.0)))
    return report
