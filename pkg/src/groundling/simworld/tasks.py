"""Task suites over the symbolic world.

Suites live as JSON documents under ``suites/`` next to this module; golden
action sequences for the canonical layouts live under ``data/``.  The
hard suite mirrors a ten-task desk benchmark whose instructions carry zero,
one, or two vocabulary-novel terms.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources

from . import fixtures
from .core import GRID, Entity, Scene

SUITE_NAMES = ("easy", "medium", "hard", "original")


class InvalidSuite(ValueError):
    pass


@dataclass(frozen=True)
class TaskDef:
    id: str
    instruction: str
    novel_terms: tuple[str, ...]
    entities: tuple[dict, ...]
    goal: dict
    plan_text: str

    def canonical_scene(self) -> Scene:
        return self._build(jitter_rng=None)

    def random_scene(self, rng: random.Random) -> Scene:
        return self._build(jitter_rng=rng)

    def _build(self, jitter_rng: random.Random | None) -> Scene:
        scene = Scene()
        cells = None
        if jitter_rng is not None:
            free = [(x, y) for x in range(1, GRID) for y in range(1, GRID)]
            cells = jitter_rng.sample(free, len(self.entities))
        for i, spec in enumerate(self.entities):
            name = spec["name"]
            appearance = fixtures.NOVEL_APPEARANCE.get(name)
            if appearance is not None:
                tags, drop = appearance["tags"], appearance["drop"]
                detector_name = None
            else:
                tags = fixtures.DETECTOR_LEXICON[name]
                drop, detector_name = 0, name
            pos = tuple(spec["pos"]) if cells is None else cells[i]
            visible = tags if jitter_rng is None or drop == 0 else \
                sorted(jitter_rng.sample(tags, len(tags) - drop))
            scene.add(Entity(
                name=name, kind=spec["kind"], vocab_name=spec["vocab_name"],
                tags=list(tags), pos=pos, detector_name=detector_name,
                tag_drop=drop, visible_tags=frozenset(visible),
                state=spec.get("state"),
            ))
        return scene

    def goal_satisfied(self, scene: Scene) -> bool:
        g = self.goal
        if g["pred"] == "state":
            return scene.entities[g["entity"]].state == g["value"]
        if g["pred"] == "in":
            e = scene.entities[g["obj"]]
            return e.container == g["container"] and not e.held
        if g["pred"] == "on":
            e = scene.entities[g["obj"]]
            return e.support == g["target"] and not e.held
        if g["pred"] == "near_or_on":
            e, t = scene.entities[g["obj"]], scene.entities[g["target"]]
            if e.held:
                return False
            if e.support == g["target"] or e.container == g["target"]:
                return True
            dx = abs(e.pos[0] - t.pos[0])
            dy = abs(e.pos[1] - t.pos[1])
            return max(dx, dy) <= 1
        raise ValueError(f"unknown goal predicate {g['pred']!r}")


def _suite_path(name: str):
    return resources.files(__package__) / "suites" / f"{name}.json"


def load_suite(name: str) -> list[TaskDef]:
    if name not in SUITE_NAMES:
        raise InvalidSuite(f"unknown suite {name!r}; expected one of {SUITE_NAMES}")
    data = json.loads(_suite_path(name).read_text(encoding="utf-8"))
    tasks = []
    for t in data["tasks"]:
        tasks.append(TaskDef(
            id=t["id"], instruction=t["instruction"],
            novel_terms=tuple(t["novel_terms"]),
            entities=tuple(t["entities"]), goal=t["goal"],
            plan_text=t["plan"],
        ))
    return tasks


def planner_fixture() -> dict[str, str]:
    """Instruction -> ideal planner output, across all suites."""
    out = {}
    for name in SUITE_NAMES:
        for task in load_suite(name):
            out[task.instruction.strip().lower()] = task.plan_text
    return out


_MOVES = {
    "E": (1, 0, 0, 0), "W": (-1, 0, 0, 0),
    "N": (0, -1, 0, 0), "S": (0, 1, 0, 0),
    "UP": (0, 0, 1, 0), "DN": (0, 0, -1, 0),
    "G": (0, 0, 0, 1), "O": (0, 0, 0, -1),
}


def move_to_action(token: str) -> list[float]:
    dx, dy, dz, grip = _MOVES[token]
    return [float(dx), float(dy), float(dz), 0.0, 0.0, 0.0, float(grip)]


def golden_actions(task_id: str) -> list[list[float]]:
    """Hand-written action sequence solving ``task_id`` from its canonical
    layout; used as the goal-soundness oracle."""
    path = resources.files(__package__) / "data" / "golden_actions.json"
    table = json.loads(path.read_text(encoding="utf-8"))
    if task_id not in table:
        raise KeyError(task_id)
    return [move_to_action(tok) for tok in table[task_id]]
