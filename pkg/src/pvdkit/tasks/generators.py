"""Construction of the low-level reasoning task instances.

Three task families are generated from scratch: angle classification
(acute/obtuse via the compass-and-straightedge programs), length comparison
(two axis-aligned non-intersecting segments, unequal pairs differ by more
than 15% of the shorter), and maze solving (2x2 or 3x3).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import geometry, raster
from ..primitives import LineSegment, Scene
from . import geoclidean, maze as maze_mod

ANGLE_MARGIN_DEG = 5.0  # regenerate instances within this margin of 90
LENGTH_GAP_FRACTION = 0.15  # unequal pairs exceed this relative gap

ANGLE_QUESTION = (
    "The image shows two line segments that share one endpoint, forming an "
    "angle at the shared point. Is the angle acute or obtuse?"
)
LENGTH_QUESTION = (
    "The image shows two line segments. Are the two line segments equal in "
    "length, or not equal?"
)
MAZE_QUESTION = (
    "The image shows a maze. The red circle marks the start position and the "
    "red star marks the end position. Give a sequence of moves (up, down, "
    "left, right) that goes from the start to the end without crossing any "
    "wall."
)


@dataclass
class TaskInstance:
    id: str
    image: raster.RasterImage
    question: str
    gold: str
    meta: dict = field(default_factory=dict)

    def write(self, directory: Path, records_fh) -> None:
        """Append one JSONL record and write the instance image."""
        directory = Path(directory)
        image_name = f"{self.id}.png"
        raster.write_png(self.image, directory / image_name)
        rec = {
            "id": self.id,
            "image": image_name,
            "question": self.question,
            "gold": self.gold,
            "meta": self.meta,
        }
        records_fh.write(json.dumps(rec) + "\n")


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# Angle classification
# ---------------------------------------------------------------------------


def _measure_shared_angle(scene: Scene) -> tuple[tuple[float, float], float]:
    segs = [o for o in scene.objects if isinstance(o, LineSegment)]
    if len(segs) != 2:
        raise ValueError(f"expected 2 visible segments, got {len(segs)}")
    (a1, a2), (b1, b2) = segs[0].endpoints, segs[1].endpoints
    best = None
    for p, q in ((a1, a2), (a2, a1)):
        for u, v in ((b1, b2), (b2, b1)):
            d = math.hypot(p[0] - u[0], p[1] - u[1])
            if best is None or d < best[0]:
                best = (d, p, q, v)
    d, vertex, other1, other2 = best
    if d > 1e-3:
        raise ValueError("segments do not share an endpoint")
    ang = geometry.angle_between(
        (other1[0] - vertex[0], other1[1] - vertex[1]),
        (other2[0] - vertex[0], other2[1] - vertex[1]),
    )
    return vertex, ang


def gen_angle_task(label: str, rng, index: int = 0, canvas: int = 512) -> TaskInstance:
    """Instance whose measured angle matches the label with a safety margin."""
    if label not in ("acute", "obtuse"):
        raise ValueError("label must be 'acute' or 'obtuse'")
    r = _rng(rng)
    program = geoclidean.parse_program(
        geoclidean.ACUTE_ANGLE_PROGRAM if label == "acute" else geoclidean.OBTUSE_ANGLE_PROGRAM
    )
    for _ in range(geoclidean.PROGRAM_RETRY_BUDGET):
        scene, bindings = geoclidean.interpret(program, canvas, r)
        segs = [o for o in scene.objects if isinstance(o, LineSegment)]
        if len(segs) != 2:
            continue
        if min(math.dist(*s.endpoints) for s in segs) < 0.06 * canvas:
            continue  # too short to perceive
        try:
            vertex, ang = _measure_shared_angle(scene)
        except ValueError:
            continue
        if label == "acute" and ang >= 90.0 - ANGLE_MARGIN_DEG:
            continue
        if label == "obtuse" and ang <= 90.0 + ANGLE_MARGIN_DEG:
            continue
        return TaskInstance(
            id=f"angle-{label}-{index:04d}",
            image=raster.render_scene(scene),
            question=ANGLE_QUESTION,
            gold=label,
            meta={
                "task": "angle",
                "vertex": [round(vertex[0], 2), round(vertex[1], 2)],
                "angle_deg": round(ang, 3),
                "segments": [[list(p) for p in s.endpoints] for s in segs],
            },
        )
    raise geoclidean.GeoError(f"could not generate a {label} angle instance")


# ---------------------------------------------------------------------------
# Length comparison
# ---------------------------------------------------------------------------


def _axis_segment(r: np.random.Generator, canvas: int, length: float) -> LineSegment:
    horizontal = bool(r.random() < 0.5)
    if horizontal:
        x0 = r.uniform(0.05 * canvas, 0.95 * canvas - length)
        y0 = r.uniform(0.05 * canvas, 0.95 * canvas)
        a, b = (x0, y0), (x0 + length, y0)
    else:
        x0 = r.uniform(0.05 * canvas, 0.95 * canvas)
        y0 = r.uniform(0.05 * canvas, 0.95 * canvas - length)
        a, b = (x0, y0), (x0, y0 + length)
    return LineSegment(
        endpoints=((round(a[0], 2), round(a[1], 2)), (round(b[0], 2), round(b[1], 2))),
        color=(0, 0, 0),
    )


def _segments_clear(s1: LineSegment, s2: LineSegment, clearance: float) -> bool:
    (a1, b1), (a2, b2) = s1.endpoints, s2.endpoints
    if geometry.segments_intersect(a1, b1, a2, b2):
        return False
    d = min(
        geometry.point_segment_distance(a2, a1, b1),
        geometry.point_segment_distance(b2, a1, b1),
        geometry.point_segment_distance(a1, a2, b2),
        geometry.point_segment_distance(b1, a2, b2),
    )
    return d >= clearance


def gen_length_task(label: str, rng, index: int = 0, canvas: int = 512) -> TaskInstance:
    """Two non-intersecting axis-aligned segments, equal or clearly unequal."""
    if label not in ("equal", "not-equal"):
        raise ValueError("label must be 'equal' or 'not-equal'")
    r = _rng(rng)
    for _ in range(1000):
        len1 = float(r.uniform(0.12 * canvas, 0.55 * canvas))
        if label == "equal":
            len2 = len1
        else:
            factor = float(r.uniform(1.25, 2.0))
            len2 = len1 * factor
            if len2 > 0.85 * canvas:
                continue
        s1 = _axis_segment(r, canvas, len1)
        s2 = _axis_segment(r, canvas, len2)
        if not _segments_clear(s1, s2, clearance=12.0):
            continue
        scene = Scene(width=canvas, height=canvas, objects=(s1, s2))
        L1 = math.dist(*s1.endpoints)
        L2 = math.dist(*s2.endpoints)
        if label == "not-equal" and abs(L1 - L2) <= LENGTH_GAP_FRACTION * min(L1, L2):
            continue
        if label == "equal" and L1 != L2:
            continue
        return TaskInstance(
            id=f"length-{label}-{index:04d}",
            image=raster.render_scene(scene),
            question=LENGTH_QUESTION,
            gold=label,
            meta={
                "task": "length",
                "lengths": [round(L1, 2), round(L2, 2)],
                "segments": [[list(p) for p in s.endpoints] for s in (s1, s2)],
            },
        )
    raise ValueError(f"could not generate a {label} length instance")


# ---------------------------------------------------------------------------
# Maze solving
# ---------------------------------------------------------------------------


def gen_maze_task(n: int, rng, index: int = 0, canvas: int = 512) -> TaskInstance:
    if n not in (2, 3):
        raise ValueError("maze size must be 2 or 3")
    r = _rng(rng)
    spec = maze_mod.generate_maze(n, r)
    scene = maze_mod.render_maze_scene(spec, canvas=canvas)
    return TaskInstance(
        id=f"maze{n}x{n}-{index:04d}",
        image=raster.render_scene(scene),
        question=MAZE_QUESTION,
        gold=", ".join(spec.solution),
        meta={"task": f"maze{n}", "maze": spec.to_dict()},
    )


TASK_GENERATORS = {
    "angle": lambda rng, i: gen_angle_task("acute" if i % 2 == 0 else "obtuse", rng, i),
    "length": lambda rng, i: gen_length_task("equal" if i % 2 == 0 else "not-equal", rng, i),
    "maze2": lambda rng, i: gen_maze_task(2, rng, i),
    "maze3": lambda rng, i: gen_maze_task(3, rng, i),
}


def generate_task_set(task: str, n: int, seed: int, out_dir) -> list[TaskInstance]:
    """Write n instances (images + records.jsonl) of one task family."""
    if task not in TASK_GENERATORS:
        raise ValueError(f"unknown task {task!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    instances = []
    with open(out_dir / "records.jsonl", "w", encoding="utf-8") as fh:
        for i in range(n):
            rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
            inst = TASK_GENERATORS[task](rng, i)
            inst.write(out_dir, fh)
            instances.append(inst)
    return instances
