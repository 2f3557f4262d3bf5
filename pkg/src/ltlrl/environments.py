"""Gridworld dynamics, labeling functions, and the benchmark task catalog.

Tasks are loaded from bundled JSON layout files. Coordinates use a
bottom-left origin with y increasing northward. Rectangles are inclusive
[x0, y0, x1, y1] cell ranges.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .automata import Ldba, load_automaton, validate_ldba
from .datafiles import data_path, list_bundled
from .ltl import Formula, Letter, parse

NORTH, SOUTH, EAST, WEST, STAY = range(5)
ACTION_NAMES = ("north", "south", "east", "west", "stay")
ACTION_DELTAS = ((0, 1), (0, -1), (1, 0), (-1, 0), (0, 0))

Cell = tuple[int, int]
Rect = tuple[int, int, int, int]


class LayoutError(ValueError):
    """A task layout document is malformed or inconsistent."""


class UnknownTask(KeyError):
    """No bundled task matches the requested (name, difficulty)."""


def _check_rect(rect: object) -> Rect:
    if (
        not isinstance(rect, (list, tuple))
        or len(rect) != 4
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in rect)
    ):
        raise LayoutError(f"rectangle must be four integers, got {rect!r}")
    x0, y0, x1, y1 = rect
    if x1 < x0 or y1 < y0:
        raise LayoutError(f"rectangle {rect!r} has negative extent")
    return (x0, y0, x1, y1)


def rect_cells(rect: Rect) -> list[Cell]:
    x0, y0, x1, y1 = rect
    return [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]


def _in_rect(cell: Cell, rect: Rect) -> bool:
    x0, y0, x1, y1 = rect
    return x0 <= cell[0] <= x1 and y0 <= cell[1] <= y1


@dataclass(frozen=True)
class GridWorld:
    """A rectangular grid with impassable cells and unit cardinal moves."""

    width: int
    height: int
    blocked: frozenset[Cell]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked

    def move(self, cell: Cell, action: int) -> Cell:
        """Apply one action; moves off-grid or into blocked cells do nothing."""
        dx, dy = ACTION_DELTAS[action]
        nxt = (cell[0] + dx, cell[1] + dy)
        return nxt if self.passable(nxt) else cell

    def cells(self) -> list[Cell]:
        """All passable cells in row-major (y outer, x inner) order."""
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if (x, y) not in self.blocked
        ]


@dataclass(frozen=True)
class Labeling:
    """Ordered (atom, rectangles) pairs mapping cells to letters."""

    regions: tuple[tuple[str, tuple[Rect, ...]], ...]

    def letter(self, cell: Cell) -> Letter:
        return frozenset(
            atom
            for atom, rects in self.regions
            if any(_in_rect(cell, rect) for rect in rects)
        )


@dataclass(frozen=True)
class EnvState:
    """Caller-held episode state: position plus the last executed action."""

    cell: Cell
    last_action: int | None = None


@dataclass(frozen=True)
class TaskBundle:
    name: str
    difficulty: str
    grid: GridWorld
    labeling: Labeling
    start: Cell
    formula_text: str
    formula: Formula
    automaton_file: str
    automaton: Ldba
    episode_length: int
    sticky_prob: float = 0.0
    start_region: Rect | None = None

    def label(self, cell: Cell) -> Letter:
        return self.labeling.letter(cell)

    def reset_env(self, rng) -> EnvState:
        if self.start_region is None:
            return EnvState(self.start)
        cells = rect_cells(self.start_region)
        return EnvState(cells[int(rng.integers(len(cells)))])

    def step_env(self, state: EnvState, action: int, rng) -> EnvState:
        executed = action
        if (
            self.sticky_prob > 0.0
            and state.last_action is not None
            and rng.random() < self.sticky_prob
        ):
            executed = state.last_action
        return EnvState(self.grid.move(state.cell, executed), executed)


def sticky_wrapper(task: TaskBundle, p: float) -> TaskBundle:
    """With probability p, repeat the previously executed action instead."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"sticky probability must be in [0, 1], got {p}")
    return dataclasses.replace(task, sticky_prob=p)


def random_start_wrapper(task: TaskBundle, region) -> TaskBundle:
    """Reset by drawing the start cell uniformly from a rectangle."""
    rect = _check_rect(region)
    for cell in rect_cells(rect):
        if not task.grid.passable(cell):
            raise LayoutError(f"start region cell {cell} is blocked or off-grid")
    return dataclasses.replace(task, start_region=rect)


_TASK_FIELDS = {
    "name": str,
    "difficulty": str,
    "width": int,
    "height": int,
    "blocked": list,
    "start": list,
    "regions": dict,
    "formula": str,
    "automaton": str,
    "episode_length": int,
}


def load_task(path) -> TaskBundle:
    """Load and validate a task layout document and its automaton."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise LayoutError(f"{path.name}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise LayoutError(f"{path.name}: document must be an object")
    missing = _TASK_FIELDS.keys() - doc.keys()
    extra = doc.keys() - _TASK_FIELDS.keys()
    if missing or extra:
        raise LayoutError(f"{path.name}: missing fields {sorted(missing)}, unknown fields {sorted(extra)}")
    for key, kind in _TASK_FIELDS.items():
        if not isinstance(doc[key], kind) or (kind is int and isinstance(doc[key], bool)):
            raise LayoutError(f"{path.name}: field {key!r} must be {kind.__name__}")

    width, height = doc["width"], doc["height"]
    if width < 1 or height < 1:
        raise LayoutError(f"{path.name}: grid dimensions must be positive")
    bounds: Rect = (0, 0, width - 1, height - 1)

    blocked: set[Cell] = set()
    for raw in doc["blocked"]:
        rect = _check_rect(raw)
        if not (_in_rect(rect[:2], bounds) and _in_rect(rect[2:], bounds)):
            raise LayoutError(f"{path.name}: blocked rectangle {raw!r} leaves the grid")
        blocked.update(rect_cells(rect))
    grid = GridWorld(width, height, frozenset(blocked))

    if len(doc["start"]) != 2 or not all(isinstance(v, int) for v in doc["start"]):
        raise LayoutError(f"{path.name}: start must be a cell [x, y]")
    start: Cell = (doc["start"][0], doc["start"][1])
    if not grid.passable(start):
        raise LayoutError(f"{path.name}: start cell {start} is blocked or off-grid")

    automaton = load_automaton(data_path("automata", doc["automaton"]))
    validate_ldba(automaton)

    regions = []
    for atom, raw_rects in doc["regions"].items():
        if atom not in automaton.atoms:
            raise LayoutError(f"{path.name}: region atom {atom!r} not in the automaton alphabet")
        if not isinstance(raw_rects, list) or not raw_rects:
            raise LayoutError(f"{path.name}: region {atom!r} must list rectangles")
        rects = []
        for raw in raw_rects:
            rect = _check_rect(raw)
            if not (_in_rect(rect[:2], bounds) and _in_rect(rect[2:], bounds)):
                raise LayoutError(f"{path.name}: region rectangle {raw!r} leaves the grid")
            rects.append(rect)
        regions.append((atom, tuple(rects)))

    formula = parse(doc["formula"], automaton.atoms)
    if doc["episode_length"] < 1:
        raise LayoutError(f"{path.name}: episode_length must be positive")

    return TaskBundle(
        name=doc["name"],
        difficulty=doc["difficulty"],
        grid=grid,
        labeling=Labeling(tuple(regions)),
        start=start,
        formula_text=doc["formula"],
        formula=formula,
        automaton_file=doc["automaton"],
        automaton=automaton,
        episode_length=doc["episode_length"],
    )


def _task_file(name: str, difficulty: str) -> str:
    return f"{name.replace('-', '_')}_{difficulty}.json"


def make_task(name: str, difficulty: str) -> TaskBundle:
    """Build a bundled benchmark task by name and difficulty."""
    if (name, difficulty) not in catalog():
        raise UnknownTask(f"no bundled task {name!r} at difficulty {difficulty!r}")
    return load_task(data_path("tasks", _task_file(name, difficulty)))


def catalog() -> list[tuple[str, str]]:
    """All bundled (name, difficulty) pairs, sorted."""
    entries = []
    for filename in list_bundled("tasks"):
        stem = filename[: -len(".json")]
        base, _, difficulty = stem.rpartition("_")
        entries.append((base.replace("_", "-"), difficulty))
    return sorted(entries)
