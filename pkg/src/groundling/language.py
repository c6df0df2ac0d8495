"""Lexical normalization and task-list finalization.

Every noun phrase the planner produced is resolved against the execution
model's closed vocabulary: known terms pass through, remembered replacements
are reused, and genuinely novel terms go to the understanding model with
whatever visual and web evidence exists.  The surviving decisions are then
compiled into the final, color-augmented task list the action model sees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import prompts
from .memory import MemoryStore
from .plan import Subtask, TaskPlan
from .vision import ColorAssignment, GroundingRecord

SNIPPET_LIMIT = 4


class AnswerParseFailure(ValueError):
    pass


@dataclass(frozen=True)
class Decision:
    term: str
    kind: str  # identity | memory | model | none
    replacement: str | None = None
    used_snippets: bool = False

    def __post_init__(self):
        if self.kind not in ("identity", "memory", "model", "none"):
            raise ValueError(f"unknown decision kind {self.kind!r}")
        if self.kind in ("memory", "model") and not self.replacement:
            raise ValueError(f"{self.kind} decision requires a replacement")
        if self.kind in ("identity", "none") and self.replacement:
            raise ValueError(f"{self.kind} decision carries no replacement")

    @property
    def label(self) -> str:
        return self.replacement if self.replacement else self.term


def build_text_messages(mention: str, known_list: list[str],
                        record: GroundingRecord | None,
                        current_image=None,
                        snippets: list[str] | None = None) -> list[dict]:
    """Conversation for one replacement query.

    Evidence turns depend on what grounding produced: a lone detector crop, a
    full collage+keywords+crop triple, or only the raw camera frame.  At most
    one context-image turn is emitted even when several fallbacks apply.
    """
    messages: list[dict] = [
        {"role": "system", "content": [{"type": "text",
                                        "text": prompts.TEXT_SYSTEM_STEER}]},
        {"role": "user", "content": [{
            "type": "text",
            "text": "Allowed vocabulary:\n" + "\n".join(f"- {lab}" for lab in known_list),
        }]},
        {"role": "user", "content": [{"type": "text",
                                      "text": f"New object mention: {mention}"}]},
    ]

    has_com = record is not None and record.collage is not None
    has_kw = record is not None and bool(record.keywords)
    has_crop = record is not None and record.crop is not None

    if not has_com and not has_kw:
        if has_crop:
            messages.append({"role": "user", "content": [
                {"type": "text", "text": "Evidence crop (highest detector score)."},
                {"type": "image", "image": record.crop},
            ]})
        elif current_image is not None:
            # covers both the crop-less detector case and the no-signal case
            messages.append({"role": "user", "content": [
                {"type": "text", "text": "Context image."},
                {"type": "image", "image": current_image},
            ]})
    elif has_com and has_kw and has_crop:
        messages.append({"role": "user", "content": [
            {"type": "text", "text": "Composite reference image from the web."},
            {"type": "image", "image": record.collage},
        ]})
        messages.append({"role": "user", "content": [
            {"type": "text", "text": "Top-scoring evidence crop from the original image."},
            {"type": "image", "image": record.crop},
        ]})
        messages.append({"role": "user", "content": [{
            "type": "text",
            "text": "Image/scene keywords: " + ", ".join(map(str, record.keywords)),
        }]})

    if snippets:
        messages.append({"role": "user", "content": [{
            "type": "text",
            "text": "External brief (web/Wikipedia):\n" + "\n".join(snippets),
        }]})

    messages.append({"role": "user", "content": [{
        "type": "text", "text": prompts.TEXT_STRICT_CONSTRAINTS,
    }]})
    return messages


_ANSWER = re.compile(r"<answer>(.*?)</answer>", re.S | re.I)


def _norm(label: str) -> str:
    return re.sub(r"\s+", " ", label.strip().lower())


def parse_answer(model_output: str, known_list: list[str]) -> str | None:
    """First <answer> span, resolved to a canonical KnownList label or None."""
    m = _ANSWER.search(model_output)
    if not m:
        raise AnswerParseFailure("no <answer> span in output")
    content = m.group(1).strip()
    if _norm(content) == "none":
        return None
    wanted = _norm(content)
    for label in known_list:
        if _norm(label) == wanted:
            return label
    raise AnswerParseFailure(f"answer {content!r} is not an allowed label")


def resolve_replacement(term: str, record: GroundingRecord | None,
                        current_image, memory: MemoryStore, backends,
                        web_enabled: bool = True,
                        replace_enabled: bool = True) -> Decision:
    """Decide what label the execution model should see for ``term``."""
    if term in memory.known_list:
        return Decision(term=term, kind="identity")
    if not replace_enabled:
        return Decision(term=term, kind="none")
    cached = memory.replace_map.get(term)
    if cached is not None:
        return Decision(term=term, kind="memory", replacement=cached)

    snippets: list[str] = []
    if web_enabled:
        queries = [term] + ([k.strip() for k in record.keywords]
                            if record is not None and record.keywords else [])
        snippets = backends.text_snippets.search(queries, SNIPPET_LIMIT)
    messages = build_text_messages(term, memory.known_list, record,
                                   current_image, snippets)
    replacement = None
    for _ in range(2):  # one regeneration on a malformed answer
        out = backends.understanding_text.generate(messages)
        try:
            replacement = parse_answer(out, memory.known_list)
            break
        except AnswerParseFailure:
            continue
    if replacement is None:
        return Decision(term=term, kind="none", used_snippets=bool(snippets))
    memory.record_replacement(term, replacement)
    return Decision(term=term, kind="model", replacement=replacement,
                    used_snippets=bool(snippets))


# --- final task list --------------------------------------------------------

@dataclass
class FinalTaskList:
    goal: str
    subtasks: list[Subtask] = field(default_factory=list)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.subtasks]

    def joined(self) -> str:
        return "; ".join(self.texts)


def _rewrite(text: str, term: str, rendered: str) -> str:
    return re.sub(rf"\b{re.escape(term)}\b", rendered, text)


def finalize_task_list(plan: TaskPlan, decisions: dict[str, Decision],
                       colors: ColorAssignment,
                       records: dict[str, GroundingRecord],
                       mask_enabled: bool = True) -> FinalTaskList:
    """Compile the repaired, color-augmented task list.

    Each original term is rendered as its replacement label (when one was
    decided) and prefixed with its overlay color qualifier (when a mask was
    delivered); rewriting runs longest-term-first so nested phrases like
    "bowl" inside "blue white porcelain bowl" never clobber each other.
    """
    all_terms = sorted({*plan.objects, *plan.locations,
                        *(s for sub in plan.subtasks for s in sub.slots)},
                       key=len, reverse=True)
    renders: dict[str, str] = {}
    slot_labels: dict[str, str] = {}
    for term in all_terms:
        decision = decisions.get(term)
        label = decision.label if decision else term
        slot_labels[term] = label
        rec = records.get(term)
        color = colors.color_of(term) if mask_enabled else None
        if mask_enabled and rec is not None and rec.mask is not None and color:
            renders[term] = f"{color}-mask {label}"
        else:
            renders[term] = label

    subtasks = []
    for sub in plan.subtasks:
        text = sub.text
        for term in all_terms:
            text = _rewrite(text, term, renders[term])
        slots = [slot_labels.get(s, s) for s in sub.slots]
        new = Subtask(index=sub.index, verb=sub.verb, text=text, slots=slots)
        new.validate()
        subtasks.append(new)
    return FinalTaskList(goal=plan.goal.text, subtasks=subtasks)


def build_execution_prompt(final: FinalTaskList, subtask_index: int,
                           augment: bool = True) -> str:
    """Prompt for the action model at the current subtask.

    With augmentation off the model only ever sees the bare goal, which is
    the bare-planner baseline configuration.
    """
    if not augment:
        return final.goal
    current = final.subtasks[subtask_index].text
    return f"now do '{current}', the whole task is '{final.joined()}'"


RECOVERY_PROMPT = "lift the gripper"


def build_verifier_prompt(subtask: Subtask) -> str:
    """Yes/No completion question for one subtask, dispatched on its verb."""
    prefix = prompts.VERIFIER_PREFIX.format(subtask=subtask.text)
    if subtask.verb == "pick up":
        return (f"{prefix} Based *Only* on the provided media, has "
                f"'{subtask.slots[0]}' or anything else been grasped and lifted "
                "off any surface by the end? Answer 'Yes' or 'No'.")
    if subtask.verb in ("place-on", "place-in"):
        location = subtask.slots[1] if len(subtask.slots) > 1 else subtask.slots[0]
        return (f"{prefix} Based *Only* on the provided media, has "
                f"'{subtask.slots[0]}' or anything else been placed "
                f"'{location}' and is the gripper away? Answer 'Yes' or 'No'.")
    if subtask.verb in prompts.VERIFIER_STATE_ACTION_TEXT:
        action_text = prompts.VERIFIER_STATE_ACTION_TEXT[subtask.verb]
        return (f"{prefix} Based *Only* on the provided media, has "
                f"'{subtask.slots[0]}' or anything else been {action_text} "
                "by the end? Answer 'Yes' or 'No'.")
    return (f"{prefix} Based *Only* on the provided media, has the instructed "
            "action been completed successfully by the end? Answer 'Yes' or 'No'.")
