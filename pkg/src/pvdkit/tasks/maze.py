"""Perfect-maze generation, rendering, and move-sequence evaluation.

Mazes are n x n cell grids carved by randomized depth-first search, so the
open-passage cell graph is a spanning tree and every start/end pair has a
unique simple solution, recovered by breadth-first search. The rendering
marks the start cell with a red filled circle and the end cell with a red
five-pointed star (a simple 10-vertex polygon).
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..primitives import Circle, LineSegment, Polygon, Scene

Cell = tuple[int, int]  # (row, col), origin top-left

MOVES = {
    "up": (-1, 0),
    "down": (1, 0),
    "left": (0, -1),
    "right": (0, 1),
}
_SYNONYMS = {
    "up": "up", "u": "up", "north": "up", "n": "up",
    "down": "down", "d": "down", "south": "down", "s": "down",
    "left": "left", "l": "left", "west": "left", "w": "left",
    "right": "right", "r": "right", "east": "right", "e": "right",
}

_TOKEN_SPLIT = re.compile(r"[\s,;>-]+")

MAZE_COLOR = (0, 0, 0)
MARKER_COLOR = (220, 20, 20)
WALL_WIDTH = 5.0


@dataclass(frozen=True)
class MazeSpec:
    n: int
    passages: frozenset[tuple[Cell, Cell]]  # open edges of the cell graph
    start: Cell
    end: Cell
    solution: tuple[str, ...] = field(default=())

    def has_passage(self, a: Cell, b: Cell) -> bool:
        return (a, b) in self.passages or (b, a) in self.passages

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "passages": sorted([list(a), list(b)] for a, b in self.passages),
            "start": list(self.start),
            "end": list(self.end),
            "solution": list(self.solution),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MazeSpec":
        return cls(
            n=int(d["n"]),
            passages=frozenset(
                (tuple(a), tuple(b)) for a, b in d["passages"]
            ),
            start=tuple(d["start"]),
            end=tuple(d["end"]),
            solution=tuple(d["solution"]),
        )


def generate_maze(n: int, rng) -> MazeSpec:
    """Randomized-DFS perfect maze with random distinct start/end cells."""
    if n < 2:
        raise ValueError("maze size must be at least 2")
    r = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    start_cell = (int(r.integers(0, n)), int(r.integers(0, n)))
    visited = {start_cell}
    stack = [start_cell]
    passages: set[tuple[Cell, Cell]] = set()
    while stack:
        cell = stack[-1]
        nbrs = []
        for dr, dc in MOVES.values():
            nxt = (cell[0] + dr, cell[1] + dc)
            if 0 <= nxt[0] < n and 0 <= nxt[1] < n and nxt not in visited:
                nbrs.append(nxt)
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(r.integers(0, len(nbrs)))]
        visited.add(nxt)
        passages.add((cell, nxt))
        stack.append(nxt)
    cells = [(i, j) for i in range(n) for j in range(n)]
    start = cells[int(r.integers(0, len(cells)))]
    end = start
    while end == start:
        end = cells[int(r.integers(0, len(cells)))]
    solution = solve_maze(n, passages, start, end)
    return MazeSpec(
        n=n, passages=frozenset(passages), start=start, end=end, solution=tuple(solution)
    )


def solve_maze(n: int, passages, start: Cell, end: Cell) -> list[str]:
    """Breadth-first search over open passages; returns the move list."""
    open_set = set(passages) | {(b, a) for a, b in passages}
    prev: dict[Cell, tuple[Cell, str]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == end:
            break
        for move, (dr, dc) in MOVES.items():
            nxt = (cell[0] + dr, cell[1] + dc)
            if (
                0 <= nxt[0] < n and 0 <= nxt[1] < n
                and nxt not in seen
                and (cell, nxt) in open_set
            ):
                seen.add(nxt)
                prev[nxt] = (cell, move)
                queue.append(nxt)
    if end not in seen:
        raise ValueError("maze has no path from start to end")
    moves: list[str] = []
    cur = end
    while cur != start:
        cur, move = prev[cur]
        moves.append(move)
    moves.reverse()
    return moves


def star_polygon(cx: float, cy: float, outer_r: float, points: int = 5) -> Polygon:
    """Simple 2*points-gon alternating outer/inner radii (a solid star)."""
    inner_r = outer_r * math.cos(math.radians(72)) / math.cos(math.radians(36))
    verts = []
    for k in range(2 * points):
        r = outer_r if k % 2 == 0 else inner_r
        th = -math.pi / 2 + k * math.pi / points
        verts.append((round(cx + r * math.cos(th), 2), round(cy + r * math.sin(th), 2)))
    return Polygon(vertices=tuple(verts), color=MARKER_COLOR)


def render_maze_scene(spec: MazeSpec, canvas: int = 512, margin: float = 64.0) -> Scene:
    """Walls as black segments, start circle and end star in red."""
    n = spec.n
    span = canvas - 2 * margin
    cell = span / n
    x0 = y0 = margin

    def corner(r, c):
        return (round(x0 + c * cell, 2), round(y0 + r * cell, 2))

    walls: list[LineSegment] = []

    def wall(a, b):
        walls.append(LineSegment(endpoints=(a, b), color=MAZE_COLOR, line_width=WALL_WIDTH))

    # Border walls (always present).
    wall(corner(0, 0), corner(0, n))
    wall(corner(n, 0), corner(n, n))
    wall(corner(0, 0), corner(n, 0))
    wall(corner(0, n), corner(n, n))
    # Internal walls: between 4-adjacent cells without a passage.
    for r in range(n):
        for c in range(n):
            if c + 1 < n and not spec.has_passage((r, c), (r, c + 1)):
                wall(corner(r, c + 1), corner(r + 1, c + 1))
            if r + 1 < n and not spec.has_passage((r, c), (r + 1, c)):
                wall(corner(r + 1, c), corner(r + 1, c + 1))

    def center(cellpos):
        r, c = cellpos
        return (x0 + (c + 0.5) * cell, y0 + (r + 0.5) * cell)

    sx, sy = center(spec.start)
    ex, ey = center(spec.end)
    markers = [
        Circle(center=(round(sx, 2), round(sy, 2)), radius=round(cell * 0.16, 2),
               color=MARKER_COLOR),
        star_polygon(ex, ey, cell * 0.24),
    ]
    return Scene(width=canvas, height=canvas, objects=tuple(walls + markers))


def parse_moves(text: str) -> list[str] | None:
    """Normalize a predicted move list; None when any token is unknown."""
    text = text.strip().lower()
    m = re.search(r"answer\s*[:=]\s*(.+)", text, flags=re.S)
    if m:
        text = m.group(1)
    tokens = [t for t in _TOKEN_SPLIT.split(text) if t]
    moves = []
    for t in tokens:
        t = t.strip(".,;:!()[]'\"")
        if not t:
            continue
        if t not in _SYNONYMS:
            return None
        moves.append(_SYNONYMS[t])
    return moves or None


def eval_maze_explain(spec: MazeSpec, predicted: str) -> tuple[bool, str]:
    """Simulate a predicted move sequence; legal moves must follow passages."""
    moves = parse_moves(predicted)
    if moves is None:
        return False, "parse"
    cur = spec.start
    for k, move in enumerate(moves):
        dr, dc = MOVES[move]
        nxt = (cur[0] + dr, cur[1] + dc)
        if not (0 <= nxt[0] < spec.n and 0 <= nxt[1] < spec.n):
            return False, f"illegal move at step {k + 1}: leaves the grid"
        if not spec.has_passage(cur, nxt):
            return False, f"illegal move at step {k + 1}: crosses a wall"
        cur = nxt
    if cur != spec.end:
        return False, "does not reach the end"
    return True, "ok"


def eval_maze(spec: MazeSpec, predicted: str) -> bool:
    ok, _ = eval_maze_explain(spec, predicted)
    return ok
