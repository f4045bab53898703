"""Deterministic decoding of vectorized paths into PVD primitives."""

from .compose import decode_composition
from .pipeline import fit_path, perceive, perceive_document
from .shapes import (
    FitCandidate,
    FitError,
    FitOptions,
    classify_closed,
    detect_style,
    fit_circle,
    fit_ellipse,
    simplify_polyline,
)
from .strokes import fit_stroke_network

__all__ = [
    "FitCandidate",
    "FitError",
    "FitOptions",
    "classify_closed",
    "decode_composition",
    "detect_style",
    "fit_circle",
    "fit_ellipse",
    "fit_path",
    "fit_stroke_network",
    "perceive",
    "perceive_document",
    "simplify_polyline",
]
