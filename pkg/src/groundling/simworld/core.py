"""Deterministic symbolic pick-and-place world.

An 8x8 grid of named entities plus a gripper.  Actions are 7-vectors
(end-effector delta pose + gripper command) interpreted quantized: one cell
of translation per step, discrete height, and a gripper close/open that
grasps, releases, or actuates fixtures.  Illegal actions are no-ops, so the
step function is total and the world is value-deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

GRID = 8
CELL_PX = 32
MAX_HEIGHT = 3

GRABBABLE_KINDS = {"object", "vessel", "dish"}
STATEFUL_KINDS = {"device", "container"}


@dataclass
class Entity:
    name: str
    kind: str  # object | vessel | dish | surface | device | container
    vocab_name: str
    tags: list[str]
    pos: tuple[int, int]
    detector_name: str | None = None
    tag_drop: int = 0
    visible_tags: frozenset[str] = frozenset()
    state: str | None = None  # open/closed, on/off, or None
    support: str | None = None  # resting on this entity
    container: str | None = None  # inside this entity
    held: bool = False

    def __post_init__(self):
        if not self.visible_tags:
            self.visible_tags = frozenset(self.tags)


@dataclass
class Gripper:
    cell: tuple[int, int] = (0, 0)
    height: int = 0
    holding: str | None = None


@dataclass
class Scene:
    entities: dict[str, Entity] = field(default_factory=dict)
    gripper: Gripper = field(default_factory=Gripper)
    order: list[str] = field(default_factory=list)

    def add(self, entity: Entity):
        self.entities[entity.name] = entity
        self.order.append(entity.name)

    def copy(self) -> "Scene":
        out = Scene(gripper=replace(self.gripper), order=list(self.order))
        out.entities = {n: replace(e, tags=list(e.tags)) for n, e in self.entities.items()}
        return out

    def stack_height(self, name: str, _depth: int = 0) -> int:
        e = self.entities[name]
        parent = e.support or e.container
        if parent is None or _depth > len(self.entities):
            return 0
        return 1 + self.stack_height(parent, _depth + 1)


def _quant(v: float) -> int:
    if v > 0.5:
        return 1
    if v < -0.5:
        return -1
    return 0


def _top_candidate(scene: Scene, names: list[str]) -> str | None:
    if not names:
        return None
    return max(names, key=lambda n: (scene.stack_height(n), scene.order.index(n)))


def step(scene: Scene, action) -> Scene:
    """Apply one quantized action in place and return the scene."""
    if len(action) != 7 or not all(math.isfinite(float(a)) for a in action):
        return scene
    dx, dy, dz, grip = _quant(action[0]), _quant(action[1]), _quant(action[2]), float(action[6])
    g = scene.gripper
    g.cell = (min(GRID - 1, max(0, g.cell[0] + dx)),
              min(GRID - 1, max(0, g.cell[1] + dy)))
    g.height = min(MAX_HEIGHT, max(0, g.height + dz))
    if g.holding:
        scene.entities[g.holding].pos = g.cell

    if grip > 0.5 and g.holding is None:
        here = [n for n, e in scene.entities.items() if e.pos == g.cell]
        grabbable = [n for n in here
                     if scene.entities[n].kind in GRABBABLE_KINDS
                     and not _in_closed_container(scene, n)]
        target = _top_candidate(scene, grabbable)
        if target is not None:
            ent = scene.entities[target]
            ent.held = True
            ent.support = None
            ent.container = None
            g.holding = target
        else:
            fixture = _top_candidate(
                scene, [n for n in here if scene.entities[n].kind in STATEFUL_KINDS])
            if fixture is not None:
                _actuate(scene.entities[fixture])
    elif grip < -0.5 and g.holding is not None:
        held = scene.entities[g.holding]
        held.held = False
        g.holding = None
        supports = [n for n, e in scene.entities.items()
                    if e.pos == held.pos and n != held.name and not e.held]
        target = _top_candidate(scene, supports)
        if target is not None:
            t = scene.entities[target]
            if t.kind == "container" and t.state == "open":
                held.container = target
            elif t.kind == "vessel":
                held.container = target
            else:
                held.support = target
    return scene


def _in_closed_container(scene: Scene, name: str) -> bool:
    c = scene.entities[name].container
    return c is not None and scene.entities[c].state == "closed"


def _actuate(entity: Entity):
    if entity.kind == "container":
        entity.state = "open" if entity.state == "closed" else "closed"
    elif entity.kind == "device":
        entity.state = "on" if entity.state == "off" else "off"


# --- symbolic rendering -----------------------------------------------------

@dataclass(frozen=True)
class RenderRecord:
    idx: int
    kind: str
    vocab_name: str
    detector_name: str | None
    tags: frozenset[str]
    cell: tuple[int, int]
    box: tuple[int, int, int, int]
    mask: frozenset[tuple[int, int]]
    held: bool
    support_idx: int | None
    container_idx: int | None
    state: str | None


@dataclass(frozen=True)
class SymbolicImage:
    records: tuple[RenderRecord, ...]
    gripper_cell: tuple[int, int]
    gripper_height: int
    holding_idx: int | None


def render(scene: Scene) -> SymbolicImage:
    """Render the scene; entity *true names* are not exposed, only appearance
    tags and the vocabulary class a trained perception model would assign."""
    index = {n: i for i, n in enumerate(scene.order)}
    records = []
    for name in scene.order:
        e = scene.entities[name]
        x, y = e.pos
        records.append(RenderRecord(
            idx=index[name],
            kind=e.kind,
            vocab_name=e.vocab_name,
            detector_name=e.detector_name,
            tags=e.visible_tags,
            cell=e.pos,
            box=(x * CELL_PX, y * CELL_PX, (x + 1) * CELL_PX, (y + 1) * CELL_PX),
            mask=frozenset({e.pos}),
            held=e.held,
            support_idx=index.get(e.support) if e.support else None,
            container_idx=index.get(e.container) if e.container else None,
            state=e.state,
        ))
    return SymbolicImage(
        records=tuple(records),
        gripper_cell=scene.gripper.cell,
        gripper_height=scene.gripper.height,
        holding_idx=index.get(scene.gripper.holding) if scene.gripper.holding else None,
    )


def image_to_payload(image: SymbolicImage) -> dict:
    return {
        "kind": "symbolic",
        "records": [
            {
                "idx": r.idx, "entity_kind": r.kind, "vocab_name": r.vocab_name,
                "detector_name": r.detector_name, "tags": sorted(r.tags),
                "cell": list(r.cell), "box": list(r.box),
                "mask": sorted(map(list, r.mask)), "held": r.held,
                "support_idx": r.support_idx, "container_idx": r.container_idx,
                "state": r.state,
            }
            for r in image.records
        ],
        "gripper_cell": list(image.gripper_cell),
        "gripper_height": image.gripper_height,
        "holding_idx": image.holding_idx,
    }


def image_from_payload(payload: dict) -> SymbolicImage:
    records = tuple(
        RenderRecord(
            idx=r["idx"], kind=r["entity_kind"], vocab_name=r["vocab_name"],
            detector_name=r.get("detector_name"), tags=frozenset(r["tags"]),
            cell=tuple(r["cell"]), box=tuple(r["box"]),
            mask=frozenset(map(tuple, r["mask"])), held=r["held"],
            support_idx=r.get("support_idx"), container_idx=r.get("container_idx"),
            state=r.get("state"),
        )
        for r in payload["records"]
    )
    return SymbolicImage(
        records=records,
        gripper_cell=tuple(payload["gripper_cell"]),
        gripper_height=payload["gripper_height"],
        holding_idx=payload.get("holding_idx"),
    )
