"""Assembly of the <SVG, PVD> training dataset.

Each record pairs the single SVG path obtained by render -> vectorize with
the ground-truth primitive list, as line-delimited JSON. The default
composition mirrors the 160K recipe: 10K per single concept (20K polygon),
5K per filled composition concept, 10K per outlined composition concept.
Records are deterministic given (seed, spec): every record derives its own
child generator from the master seed and its block/index position.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import raster, scenegen, svgio, vectorize
from .primitives import Style, primitive_to_dict, validate
from .scenegen import COMPOSITION_KINDS, KINDS, AugmentParams, GenConfig

log = logging.getLogger(__name__)

_SINGLE_DEFAULTS = {
    "circle": 10_000,
    "ellipse": 10_000,
    "rectangle": 10_000,
    "triangle": 10_000,
    "polygon": 20_000,
    "line_segment": 10_000,
    "grid": 10_000,
    "path": 10_000,
    "graph": 10_000,
}
_COMP_FILLED_DEFAULT = 5_000
_COMP_OUTLINED_DEFAULT = 10_000

_REGEN_ATTEMPTS = 10


@dataclass
class DatasetSpec:
    singles: dict[str, int] = field(default_factory=dict)
    compositions_filled: dict[str, int] = field(default_factory=dict)
    compositions_outlined: dict[str, int] = field(default_factory=dict)

    @classmethod
    def default(cls, divisor: int = 1) -> "DatasetSpec":
        return cls(
            singles={k: v // divisor for k, v in _SINGLE_DEFAULTS.items()},
            compositions_filled={k: _COMP_FILLED_DEFAULT // divisor for k in COMPOSITION_KINDS},
            compositions_outlined={
                k: _COMP_OUTLINED_DEFAULT // divisor for k in COMPOSITION_KINDS
            },
        )

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        spec = cls(
            singles=dict(d.get("singles", {})),
            compositions_filled=dict(d.get("compositions_filled", {})),
            compositions_outlined=dict(d.get("compositions_outlined", {})),
        )
        for k in spec.singles:
            if k not in KINDS:
                raise ValueError(f"unknown single concept {k!r}")
        for block in (spec.compositions_filled, spec.compositions_outlined):
            for k in block:
                if k not in COMPOSITION_KINDS:
                    raise ValueError(f"unknown composition concept {k!r}")
        if any(
            v < 0
            for d2 in (spec.singles, spec.compositions_filled, spec.compositions_outlined)
            for v in d2.values()
        ):
            raise ValueError("counts must be nonnegative")
        return spec

    def total(self) -> int:
        return (
            sum(self.singles.values())
            + sum(self.compositions_filled.values())
            + sum(self.compositions_outlined.values())
        )

    def blocks(self):
        """Deterministic iteration order of (block_id, group, concept, count)."""
        bid = 0
        for kind in KINDS:
            if self.singles.get(kind, 0) > 0:
                yield bid, "single", kind, self.singles[kind]
            bid += 1
        for kind in COMPOSITION_KINDS:
            if self.compositions_filled.get(kind, 0) > 0:
                yield bid, "composition_filled", kind, self.compositions_filled[kind]
            bid += 1
        for kind in COMPOSITION_KINDS:
            if self.compositions_outlined.get(kind, 0) > 0:
                yield bid, "composition_outlined", kind, self.compositions_outlined[kind]
            bid += 1


def _generate_record(group, kind, cfg, aug, child: np.random.Generator):
    if group == "single":
        scene = scenegen.gen_primitive(kind, cfg, child)
    else:
        style = Style.FILLED if group == "composition_filled" else Style.OUTLINED
        k = 2 + int(child.random() < 0.4)
        scene = scenegen.gen_composition(k, cfg, child, first_kind=kind, style=style)
    img = raster.render_scene(scene)
    if aug is not None:
        img = apply_augmentations(img, aug, child, scene.background)
    doc = vectorize.vectorize(img)
    if len(doc.paths) != 1:
        return None
    bad = [v for obj in scene.objects for v in validate(obj)]
    if bad:
        return None
    return scene, doc


def apply_augmentations(
    img: raster.RasterImage, aug: AugmentParams, rng, background
) -> raster.RasterImage:
    img = scenegen.apply_pixel_noise(img, aug, rng, background=background)
    img = scenegen.apply_gaussian_blur(img, aug, rng)
    return img


def build_dataset(
    spec: DatasetSpec,
    cfg: GenConfig,
    out_path,
    seed: int,
    augment: AugmentParams | None = None,
) -> int:
    """Stream dataset records to a JSONL file; returns the record count."""
    written = 0
    skipped = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for bid, group, kind, count in spec.blocks():
            for i in range(count):
                result = None
                used_attempt = 0
                for attempt in range(_REGEN_ATTEMPTS):
                    child = np.random.default_rng(
                        np.random.SeedSequence((seed, bid, i, attempt))
                    )
                    result = _generate_record(group, kind, cfg, augment, child)
                    used_attempt = attempt
                    if result is not None:
                        break
                if result is None:
                    skipped += 1
                    log.warning("skipping %s/%s record %d: no single-path render", group, kind, i)
                    continue
                scene, doc = result
                style = scene.objects[0].style.value
                record = {
                    "id": f"{group}-{kind}-{i:06d}",
                    "svg": svgio.emit_path_element(doc.paths[0]),
                    "pvd": [primitive_to_dict(p) for p in scene.objects],
                    "meta": {
                        "kind": kind,
                        "group": group,
                        "style": style,
                        "canvas": [scene.width, scene.height],
                        "background": list(scene.background),
                        "seed": [seed, bid, i, used_attempt],
                    },
                }
                fh.write(json.dumps(record) + "\n")
                written += 1
    if skipped:
        log.warning("dataset build skipped %d records", skipped)
    return written


def read_dataset(path):
    """Iterate parsed records of a dataset file."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
