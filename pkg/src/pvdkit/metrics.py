"""Perception-quality scoring and correlation analyses.

SSIM follows the original formulation: 11x11 Gaussian window (sigma 1.5),
K1 = 0.01, K2 = 0.03, dynamic range 255, computed on Rec.601 luminance and
averaged over fully valid windows only.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import raster, svgio
from .primitives import PerceptionResult, Scene, validate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window % 2 == 0 or self.window < 3:
            raise ValueError("window must be odd and >= 3")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("K1 and K2 must be positive")


class MetricError(Exception):
    pass


def _luminance(img: raster.RasterImage) -> np.ndarray:
    px = img.pixels.astype(np.float64)
    return 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    half = window // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable 2D correlation keeping only fully covered windows."""
    half = len(kernel) // 2
    tmp = ndimage.correlate1d(a, kernel, axis=0, mode="nearest")
    tmp = ndimage.correlate1d(tmp, kernel, axis=1, mode="nearest")
    return tmp[half:-half, half:-half]


def ssim(a: raster.RasterImage, b: raster.RasterImage, params: SsimParams | None = None) -> float:
    """Mean structural similarity over sliding Gaussian windows."""
    params = params or SsimParams()
    if a.pixels.shape != b.pixels.shape:
        raise MetricError("image dimensions differ")
    if min(a.width, a.height) < params.window:
        raise MetricError(f"image smaller than the {params.window}px SSIM window")
    x = _luminance(a)
    y = _luminance(b)
    kernel = _gaussian_kernel(params.window, params.sigma)
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    xx = _filter_valid(x * x, kernel)
    yy = _filter_valid(y * y, kernel)
    xy = _filter_valid(x * y, kernel)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def perception_score(original: raster.RasterImage, perception: PerceptionResult) -> float:
    """SSIM between the original image and the perception's reconstruction.

    The reconstruction canvas matches the original; its background is the
    original's most frequent color.
    """
    bad = [
        (obj.key, v)
        for obj in perception.objects
        for p in obj.primitives
        for v in validate(p)
    ]
    if bad:
        raise MetricError(f"unreconstructable primitives: {bad}")
    px = original.pixels.reshape(-1, 3)
    codes = (
        px[:, 0].astype(np.int64) * 65536 + px[:, 1].astype(np.int64) * 256 + px[:, 2]
    )
    uniq, counts = np.unique(codes, return_counts=True)
    code = int(uniq[int(np.argmax(counts))])
    background = (code >> 16 & 255, code >> 8 & 255, code & 255)
    scene = Scene(
        width=original.width,
        height=original.height,
        background=background,
        objects=tuple(perception.all_primitives()),
    )
    recon = raster.render_scene(scene)
    return ssim(original, recon)


# ---------------------------------------------------------------------------
# Regression and density estimation
# ---------------------------------------------------------------------------


def linreg(xs, ys) -> tuple[float, float, float]:
    """Ordinary least squares fit; returns (slope, intercept, pearson r).

    r is defined as 0 when ys is constant.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if len(x) < 2 or len(x) != len(y):
        raise MetricError("need at least 2 paired points")
    sx = x.std()
    if sx == 0:
        raise MetricError("xs are all equal; regression undefined")
    mx, my = x.mean(), y.mean()
    cov = ((x - mx) * (y - my)).mean()
    slope = cov / (sx * sx)
    intercept = my - slope * mx
    sy = y.std()
    r = 0.0 if sy == 0 else float(cov / (sx * sy))
    return float(slope), float(intercept), r


def silverman_bandwidth(values: np.ndarray) -> float:
    n = len(values)
    sigma = float(values.std(ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sigma, iqr / 1.34) if iqr > 0 else sigma
    return 0.9 * spread * n ** (-0.2)


def kde(values, bandwidth: float | None = None, grid_size: int = 256):
    """Gaussian KDE sampled on a regular grid spanning [min-3h, max+3h].

    Returns (grid, density). Bandwidth defaults to Silverman's rule.
    """
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        raise MetricError("need at least 2 values for a density estimate")
    h = silverman_bandwidth(v) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise MetricError("zero bandwidth: all values identical")
    grid = np.linspace(v.min() - 3 * h, v.max() + 3 * h, grid_size)
    z = (grid[:, None] - v[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(v) * h * math.sqrt(2 * math.pi))
    return grid, dens


# ---------------------------------------------------------------------------
# Correlation report
# ---------------------------------------------------------------------------


@dataclass
class CorrelationReport:
    task_points: list[dict] = field(default_factory=list)
    regression: dict | None = None
    kde_correct: dict | None = None
    kde_incorrect: dict | None = None
    notes: list[str] = field(default_factory=list)
    # Slots reserved for externally computed embedding similarities.
    clip_score: float | None = None
    dinov2_score: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "task_level": {
                    "points": self.task_points,
                    "regression": self.regression,
                },
                "instance_level": {
                    "kde_correct": self.kde_correct,
                    "kde_incorrect": self.kde_incorrect,
                },
                "clip_score": self.clip_score,
                "dinov2_score": self.dinov2_score,
                "notes": self.notes,
            },
            indent=2,
        )


def correlation_report(records) -> CorrelationReport:
    """Task-level regression and instance-level KDE of perception scores.

    Each record is a mapping with keys: task, score, correct.
    """
    records = list(records)
    report = CorrelationReport()
    if len(records) < 2:
        raise MetricError("need at least 2 records")

    by_task: dict[str, list] = {}
    for rec in records:
        by_task.setdefault(rec["task"], []).append(rec)
    for task, recs in sorted(by_task.items()):
        scores = [r["score"] for r in recs]
        acc = sum(1 for r in recs if r["correct"]) / len(recs)
        report.task_points.append(
            {"task": task, "mean_score": float(np.mean(scores)), "accuracy": acc}
        )
    if len(report.task_points) >= 2:
        xs = [p["mean_score"] for p in report.task_points]
        ys = [p["accuracy"] for p in report.task_points]
        try:
            slope, intercept, r = linreg(xs, ys)
            report.regression = {"slope": slope, "intercept": intercept, "r": r}
        except MetricError as exc:
            report.notes.append(f"task-level regression omitted: {exc}")
    else:
        report.notes.append("task-level regression omitted: fewer than 2 tasks")

    for flag, attr in ((True, "kde_correct"), (False, "kde_incorrect")):
        scores = [r["score"] for r in records if bool(r["correct"]) is flag]
        label = "correct" if flag else "incorrect"
        if len(scores) < 2:
            report.notes.append(f"instance-level KDE omitted for {label}: fewer than 2 scores")
            continue
        try:
            grid, dens = kde(scores)
            setattr(report, attr, {"grid": grid.tolist(), "density": dens.tolist()})
        except MetricError as exc:
            report.notes.append(f"instance-level KDE omitted for {label}: {exc}")
    return report


# ---------------------------------------------------------------------------
# SVG plots (rendered through this package's own emitter)
# ---------------------------------------------------------------------------

_PLOT_W, _PLOT_H = 480, 320
_MARGIN = 40


def _plot_frame() -> list[svgio.VectorPath]:
    frame = []
    x0, y0 = _MARGIN, _MARGIN
    x1, y1 = _PLOT_W - _MARGIN, _PLOT_H - _MARGIN
    for a, b in (((x0, y1), (x1, y1)), ((x0, y0), (x0, y1))):
        frame.append(_line_path(a, b, 2.0, (0, 0, 0)))
    return frame


def _line_path(a, b, width: float, color) -> svgio.VectorPath:
    import numpy as _np

    d = _np.array([b[0] - a[0], b[1] - a[1]], dtype=float)
    L = float(_np.hypot(*d))
    if L == 0:
        L = 1.0
    n = _np.array([-d[1], d[0]]) / L * (width / 2)
    quad = [
        (a[0] + n[0], a[1] + n[1]),
        (b[0] + n[0], b[1] + n[1]),
        (b[0] - n[0], b[1] - n[1]),
        (a[0] - n[0], a[1] - n[1]),
    ]
    return svgio.path_from_polygons([quad], color)


def _scale_fn(xs, ys):
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1

    def fn(x, y):
        px = _MARGIN + (x - x_lo) / (x_hi - x_lo) * (_PLOT_W - 2 * _MARGIN)
        py = _PLOT_H - _MARGIN - (y - y_lo) / (y_hi - y_lo) * (_PLOT_H - 2 * _MARGIN)
        return px, py

    return fn


def scatter_plot_svg(report: CorrelationReport) -> str:
    """Task-level scatter with the fitted regression line."""
    from . import geometry

    paths = _plot_frame()
    pts = report.task_points
    if pts:
        xs = [p["mean_score"] for p in pts]
        ys = [p["accuracy"] for p in pts]
        to_px = _scale_fn(xs, ys)
        for p in pts:
            cx, cy = to_px(p["mean_score"], p["accuracy"])
            circ = geometry.flatten_circle(cx, cy, 4.0, 0.2)
            paths.append(svgio.path_from_polygons([circ], (31, 119, 180)))
        if report.regression:
            slope = report.regression["slope"]
            intercept = report.regression["intercept"]
            a = to_px(min(xs), slope * min(xs) + intercept)
            b = to_px(max(xs), slope * max(xs) + intercept)
            paths.append(_line_path(a, b, 1.5, (214, 39, 40)))
    doc = svgio.VectorDocument(width=_PLOT_W, height=_PLOT_H, paths=paths)
    return svgio.emit_svg(doc)


def density_plot_svg(report: CorrelationReport) -> str:
    """Instance-level KDE curves: correct (blue) vs incorrect (orange)."""
    paths = _plot_frame()
    curves = [
        (report.kde_correct, (31, 119, 180)),
        (report.kde_incorrect, (255, 127, 14)),
    ]
    xs_all = [x for c, _ in curves if c for x in c["grid"]]
    ys_all = [y for c, _ in curves if c for y in c["density"]]
    if xs_all:
        to_px = _scale_fn(xs_all, ys_all)
        for curve, color in curves:
            if not curve:
                continue
            pts = [to_px(x, y) for x, y in zip(curve["grid"], curve["density"])]
            for a, b in zip(pts[:-1], pts[1:]):
                paths.append(_line_path(a, b, 1.5, color))
    doc = svgio.VectorDocument(width=_PLOT_W, height=_PLOT_H, paths=paths)
    return svgio.emit_svg(doc)
