"""Task decomposition: planner prompt assembly, output parsing, and the
hard-coded fallback used once the regeneration budget is exhausted.

The parser is intentionally strict.  A planner output either yields a
well-formed :class:`TaskPlan` or a :class:`ParseStatus` that feeds back into
the next prompt's ``additional_info`` branch; nothing in between.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from . import prompts

# Allowed command verbs.  "place" is split into on/in variants by the
# preposition that follows the object phrase.
VERBS = ("pick up", "place-on", "place-in", "open", "close", "turn on", "turn off")

_VERB_PREFIXES = ("pick up", "place", "turn on", "turn off", "open", "close")

# Positional modifiers that must never appear inside a /()/ slot.
_FORBIDDEN_SLOT_WORDS = re.compile(
    r"\b(first|second|third|last|bottom|upper)\b|\b(top|front|back) of\b"
)

_NUMBERED_LINE = re.compile(r"^\s*(\d+)[.)]\s+(.*\S)\s*$")
_SLOT_GROUP = re.compile(r"/\((.*?)\)/")


class InvalidInstruction(ValueError):
    pass


class ParseStatus(Enum):
    SUCCESS = "success"
    NO_SUBTASK_FOUND = "no subtask found"
    NO_OBJECTS_FOUND = "no objects found"
    NO_SUBTASK_OR_OBJECTS = "no subtask or objects"


@dataclass(frozen=True)
class Instruction:
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise InvalidInstruction("instruction is empty")


@dataclass
class Subtask:
    index: int
    verb: str
    text: str
    slots: list[str]

    def validate(self):
        if self.verb not in VERBS:
            raise ValueError(f"unknown verb {self.verb!r}")
        if not self.slots or any(not s.strip() for s in self.slots):
            raise ValueError(f"subtask {self.index} has empty slots")
        for s in self.slots:
            if _FORBIDDEN_SLOT_WORDS.search(s):
                raise ValueError(f"positional modifier in slot {s!r}")


@dataclass
class TaskPlan:
    goal: Instruction
    subtasks: list[Subtask]
    objects: list[str] = field(default_factory=list)
    locations: list[str] = field(default_factory=list)

    def validate(self):
        for i, sub in enumerate(self.subtasks, start=1):
            if sub.index != i:
                raise ValueError("subtask indices not contiguous from 1")
            sub.validate()
        slot_terms = {s for sub in self.subtasks for s in sub.slots}
        for term in self.objects + self.locations:
            if term not in slot_terms:
                raise ValueError(f"term {term!r} not present in any slot")


def build_planner_prompt(task: Instruction, sign: ParseStatus = ParseStatus.SUCCESS,
                         inlist: list[str] | None = None) -> str:
    """Render the full planner prompt for ``task``.

    ``sign`` selects the additional-info branch used to steer regeneration;
    ``inlist`` is interpolated into the no-distortion rule.
    """
    info = prompts.ADDITIONAL_INFO[sign.value]
    inlist_text = ", ".join(inlist) if inlist else "the named objects"
    return prompts.PLANNER_TEMPLATE.format(
        additional_info=info,
        inlist=inlist_text,
        task_description=task.text,
    )


def _classify_verb(command: str, slots: list[str]) -> str | None:
    lowered = command.lower()
    match = None
    for prefix in _VERB_PREFIXES:
        if lowered.startswith(prefix) and (match is None or len(prefix) > len(match)):
            match = prefix
    if match is None:
        return None
    if match != "place":
        return match
    # place: preposition immediately after the object phrase decides on/in
    rest = lowered[len("place"):]
    if slots:
        obj = slots[0].lower()
        pos = rest.find(obj)
        if pos >= 0:
            rest = rest[pos + len(obj):]
    m = re.search(r"\b(on|in)\b", rest)
    if m and m.group(1) == "in":
        return "place-in"
    return "place-on"


def _collect_terms(subtasks: list[Subtask]) -> tuple[list[str], list[str]]:
    objects: list[str] = []
    locations: list[str] = []
    for sub in subtasks:
        if sub.verb == "pick up":
            if sub.slots[0] not in objects:
                objects.append(sub.slots[0])
        elif sub.verb.startswith("place"):
            if sub.slots[0] not in objects:
                objects.append(sub.slots[0])
            if len(sub.slots) > 1 and sub.slots[1] not in locations:
                locations.append(sub.slots[1])
        else:  # open / close / turn on / turn off target a fixture
            if sub.slots[0] not in locations:
                locations.append(sub.slots[0])
    # color assignment needs an injective term->color map, so a term that is
    # both manipulated and used as a target keeps its object role only
    locations = [t for t in locations if t not in objects]
    return objects, locations


def parse_plan(model_output: str, goal: Instruction | None = None) -> TaskPlan | ParseStatus:
    """Parse planner model output into a TaskPlan, or report why it failed."""
    subtasks: list[Subtask] = []
    missing_slots = False
    for line in model_output.splitlines():
        m = _NUMBERED_LINE.match(line)
        if not m:
            continue
        body = m.group(2)
        groups = _SLOT_GROUP.findall(body)
        command = _SLOT_GROUP.sub("", body).strip()
        slots = [s.strip() for s in groups[-1].split(",") if s.strip()] if groups else []
        verb = _classify_verb(command, slots)
        if verb is None:
            continue
        if not slots:
            missing_slots = True
            slots = ["?"]
        sub = Subtask(index=len(subtasks) + 1, verb=verb, text=command, slots=slots)
        if not missing_slots:
            try:
                sub.validate()
            except ValueError:
                missing_slots = True
        subtasks.append(sub)
    if not subtasks:
        return ParseStatus.NO_SUBTASK_FOUND
    if missing_slots:
        return ParseStatus.NO_OBJECTS_FOUND
    objects, locations = _collect_terms(subtasks)
    plan = TaskPlan(goal=goal or Instruction(model_output.strip().splitlines()[0]),
                    subtasks=subtasks, objects=objects, locations=locations)
    plan.validate()
    return plan


_POSITIONAL_PREFIX = re.compile(r"^(?:top|bottom|middle|left|right|front|back)\s+")

_TPL_OPEN_PUT = re.compile(
    r"^open the (?P<x>.+?) and put the (?P<y>.+?) inside\.?$", re.I)
_TPL_PUT = re.compile(
    r"^(?:put|push) the (?P<x>.+?) (?P<prep>on|in|to) (?:top of |front of |the front of )?the (?P<y>.+?)\.?$",
    re.I)
_TPL_SINGLE = re.compile(
    r"^(?P<verb>turn on|turn off|open|close) the (?P<x>.+?)\.?$", re.I)


def _strip_positional(phrase: str) -> str:
    while True:
        stripped = _POSITIONAL_PREFIX.sub("", phrase)
        if stripped == phrase:
            return phrase
        phrase = stripped


def _slot_of(phrase: str) -> str:
    # "/()/ slots name the largest specific item a modifier refers to
    phrase = _strip_positional(phrase.strip())
    m = re.match(r"^(?:drawer|door|handle|lid) of the (.+)$", phrase, re.I)
    if m:
        return m.group(1)
    return phrase


def fallback_parse(task: Instruction) -> TaskPlan:
    """Template-table parse used after the retry budget is gone.  Total."""
    text = task.text.strip()
    subtasks: list[Subtask] = []

    m = _TPL_OPEN_PUT.match(text)
    if m:
        x, y = _slot_of(m.group("x")), _slot_of(m.group("y"))
        subtasks = [
            Subtask(1, "open", f"open the {m.group('x')}", [x]),
            Subtask(2, "pick up", f"pick up the {m.group('y')}", [y]),
            Subtask(3, "place-in", f"place the {m.group('y')} in the {m.group('x')}", [y, x]),
        ]
    if not subtasks:
        m = _TPL_PUT.match(text)
        if m:
            x, y = _slot_of(m.group("x")), _slot_of(m.group("y"))
            prep = m.group("prep").lower()
            verb = "place-in" if prep == "in" else "place-on"
            word = "in" if prep == "in" else "on"
            subtasks = [
                Subtask(1, "pick up", f"pick up the {m.group('x')}", [x]),
                Subtask(2, verb, f"place the {m.group('x')} {word} the {m.group('y')}", [x, y]),
            ]
    if not subtasks:
        m = _TPL_SINGLE.match(text)
        if m:
            verb = m.group("verb").lower()
            subtasks = [Subtask(1, verb, f"{verb} the {m.group('x')}", [_slot_of(m.group("x"))])]
    if not subtasks:
        # unmatched: single subtask under the first allowed verb, or pick up
        lowered = text.lower()
        verb = next((v for v in ("pick up", "open", "close", "turn on", "turn off")
                     if lowered.startswith(v)), "pick up")
        phrase = re.sub(r"^(pick up|open|close|turn on|turn off)\s+(the\s+)?", "", lowered) or text
        slot = _slot_of(phrase)
        subtasks = [Subtask(1, verb, f"{verb} the {slot}", [slot])]

    objects, locations = _collect_terms(subtasks)
    plan = TaskPlan(goal=task, subtasks=subtasks, objects=objects, locations=locations)
    plan.validate()
    return plan
