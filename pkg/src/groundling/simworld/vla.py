"""Scripted action model and scripted verifier over symbolic renders.

The action model is a deterministic proxy for a fine-tuned policy: it only
understands nouns from its training vocabulary plus color-mask qualifiers
aligned with the overlay.  A subtask whose target is neither in-vocabulary
nor color-masked produces null actions, i.e. the arm stalls.
"""

from __future__ import annotations

import re

from ..plan import Instruction, fallback_parse
from .core import GRABBABLE_KINDS, RenderRecord, SymbolicImage

NULL_ACTION = [0.0] * 7

_NOW_DO = re.compile(r"^now do '(?P<current>.*?)', the whole task is '", re.S)
_COLOR_QUALIFIER = re.compile(r"(\w+)-mask\s+(.+)$")
_PLACE = re.compile(
    r"^place (?:the )?(?P<obj>.+?) (?:on|in)(?: top of| front of)?(?: the)? (?P<loc>.+?)\.?$")
_PICK = re.compile(r"^pick up (?:the )?(?P<obj>.+?)\.?$")
_STATE = re.compile(r"^(?P<verb>turn on|turn off|open|close) (?:the )?(?P<target>.+?)\.?$")

_WANTED_STATE = {"open": "open", "close": "closed", "turn on": "on", "turn off": "off"}


def _unwrap(image):
    """Accept either a bare SymbolicImage or an overlay carrying one."""
    if isinstance(image, SymbolicImage):
        return image, {}
    frame = image.frame
    colors = {}
    for layer in image.layers:
        colors[layer.color] = set(layer.mask)
    return frame, colors


def _action(dx=0, dy=0, dz=0, grip=0.0):
    return [float(dx), float(dy), float(dz), 0.0, 0.0, 0.0, float(grip)]


def _step_toward(src, dst):
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    if abs(dx) >= abs(dy) and dx != 0:
        return _action(dx=1 if dx > 0 else -1)
    if dy != 0:
        return _action(dy=1 if dy > 0 else -1)
    return None


def _vocab_label(phrase: str, vocab: list[str]) -> str | None:
    best = None
    for label in vocab:
        if re.search(rf"\b{re.escape(label)}\b", phrase) and \
                (best is None or len(label) > len(best)):
            best = label
    return best


def resolve(phrase: str, frame: SymbolicImage, colors: dict, vocab: list[str],
            role: str, exclude: int | None = None) -> RenderRecord | None:
    """Map a noun phrase (possibly color-qualified) to a render record."""
    phrase = phrase.strip().lower()
    m = _COLOR_QUALIFIER.search(phrase)
    if m and m.group(1) in colors:
        cells = colors[m.group(1)]
        candidates = [r for r in frame.records
                      if r.idx != exclude and (set(r.mask) & cells)]
        if candidates:
            return _prefer(candidates, role)
    noun = m.group(2) if m else phrase
    label = _vocab_label(noun, vocab)
    if label is None:
        return None
    candidates = [r for r in frame.records
                  if r.vocab_name == label and r.idx != exclude]
    if not candidates:
        return None
    return _prefer(candidates, role)


def _prefer(candidates: list[RenderRecord], role: str) -> RenderRecord:
    if role == "object":
        key = lambda r: (r.kind in GRABBABLE_KINDS, -r.idx)
    else:
        key = lambda r: (not r.held, r.kind not in GRABBABLE_KINDS, -r.idx)
    return max(candidates, key=key)


def _parse_command(text: str):
    text = text.strip().lower()
    m = _PICK.match(text)
    if m:
        return ("pick", m.group("obj"), None)
    m = _PLACE.match(text)
    if m:
        return ("place", m.group("obj"), m.group("loc"))
    m = _STATE.match(text)
    if m:
        return (_WANTED_STATE[m.group("verb")], m.group("target"), None)
    return None


def _satisfied(cmd, frame: SymbolicImage, colors, vocab) -> bool:
    kind, a, b = cmd
    if kind == "pick":
        rec = resolve(a, frame, colors, vocab, "object")
        return rec is not None and frame.holding_idx == rec.idx and frame.gripper_height >= 1
    if kind == "place":
        obj = resolve(a, frame, colors, vocab, "object")
        if obj is None:
            return False
        loc = resolve(b, frame, colors, vocab, "location", exclude=obj.idx)
        if loc is None:
            return False
        return (not obj.held) and (obj.support_idx == loc.idx or obj.container_idx == loc.idx)
    rec = resolve(a, frame, colors, vocab, "location")
    return rec is not None and rec.state == kind


def _pursue(cmd, frame: SymbolicImage, colors, vocab):
    """Next greedy action for an unsatisfied command, or None on stall."""
    kind, a, b = cmd
    if kind == "pick":
        rec = resolve(a, frame, colors, vocab, "object")
        if rec is None:
            return None
        if frame.holding_idx == rec.idx:
            return _action(dz=1)  # secure the lift
        move = _step_toward(frame.gripper_cell, rec.cell)
        return move if move is not None else _action(grip=1.0)
    if kind == "place":
        obj = resolve(a, frame, colors, vocab, "object")
        if obj is None:
            return None
        loc = resolve(b, frame, colors, vocab, "location", exclude=obj.idx)
        if loc is None:
            return None
        if frame.holding_idx != obj.idx:
            # not carrying it yet: behave like a pick
            move = _step_toward(frame.gripper_cell, obj.cell)
            return move if move is not None else _action(grip=1.0)
        move = _step_toward(frame.gripper_cell, loc.cell)
        return move if move is not None else _action(grip=-1.0)
    rec = resolve(a, frame, colors, vocab, "location")
    if rec is None:
        return None
    if frame.holding_idx is not None:
        return None
    move = _step_toward(frame.gripper_cell, rec.cell)
    return move if move is not None else _action(grip=1.0)


def _jiggle(frame: SymbolicImage):
    # oscillate between heights 1 and 2: enough net motion to never look
    # stalled, while keeping a lifted grasp lifted for the verifier
    return _action(dz=1) if frame.gripper_height <= 1 else _action(dz=-1)


def _subtask_texts(prompt: str) -> list[str]:
    m = _NOW_DO.match(prompt.strip())
    if m:
        return [m.group("current")]
    try:
        plan = fallback_parse(Instruction(prompt))
    except ValueError:
        return []
    return [sub.text for sub in plan.subtasks]


def scripted_vla(prompt: str, image, vocab: list[str]) -> list[float]:
    """One action for the current prompt and observation."""
    if prompt.strip().lower() == "lift the gripper":
        frame, _ = _unwrap(image)
        return _action(dz=1) if frame.gripper_height < 3 else NULL_ACTION
    frame, colors = _unwrap(image)
    texts = _subtask_texts(prompt)
    if not texts:
        return NULL_ACTION
    commands = [_parse_command(t) for t in texts]
    if any(c is None for c in commands):
        return NULL_ACTION
    # resume after the last already-satisfied command
    start = 0
    for i in range(len(commands) - 1, -1, -1):
        if _satisfied(commands[i], frame, colors, vocab):
            start = i + 1
            break
    if start >= len(commands):
        return _jiggle(frame)
    action = _pursue(commands[start], frame, colors, vocab)
    return action if action is not None else NULL_ACTION


_SUBTASK_IN_PROMPT = re.compile(r"currently working on: '(?P<sub>.*?)'\. ", re.S)


def scripted_verifier(prompt: str, before, after, vocab: list[str]) -> str:
    """Yes/No completion judgment from the prompt and the segment's frames."""
    m = _SUBTASK_IN_PROMPT.search(prompt)
    if not m:
        return "No"
    cmd = _parse_command(m.group("sub"))
    if cmd is None:
        return "No"
    frame, colors = _unwrap(after)
    return "Yes" if _satisfied(cmd, frame, colors, vocab) else "No"
