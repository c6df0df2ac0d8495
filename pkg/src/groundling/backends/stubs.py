"""Deterministic in-process backends.

Each stub is a faithful, offline proxy for one external model: the planner
answers from a fixture of ideal decompositions, the detector scores symbolic
renders by name or appearance-tag overlap, the understanding stubs answer
from fixture tables, and the action/verifier stubs delegate to the scripted
policy over symbolic frames.
"""

from __future__ import annotations

import json
import re

from ..memory import build_known_list
from ..plan import Instruction, fallback_parse
from ..simworld import fixtures
from ..simworld.tasks import planner_fixture
from ..simworld.vla import scripted_verifier, scripted_vla
from ..vision import BBox
from . import BackendSuite

_TASK_IN_PROMPT = re.compile(r"^Task: (?P<task>.*)\nOutput:\s*$", re.S | re.M)
_QUERY_IN_PROMPT = re.compile(r"input:(?P<query>.*?)\n\s*output:", re.S)
_MENTION_TURN = re.compile(r"New object mention: (?P<mention>.+)")
_VOCAB_BULLET = re.compile(r"^- (?P<label>.+)$", re.M)

NAME_MATCH_SCORE = 0.9
KEYWORD_MATCH_SCORE = 0.6
KEYWORD_MIN_OVERLAP = 2


class _Healthy:
    def health(self) -> bool:
        return True


class StubPlannerLLM(_Healthy):
    """Answers from the suite fixture; falls back to a synthesized numbered
    list for instructions outside the fixture."""

    def __init__(self, fixture: dict[str, str] | None = None):
        self._fixture = planner_fixture() if fixture is None else fixture

    def generate(self, prompt: str) -> str:
        m = _TASK_IN_PROMPT.search(prompt)
        if not m:
            return ""
        task = m.group("task").strip()
        hit = self._fixture.get(task.lower())
        if hit is not None:
            return hit
        return format_plan_text(task)


def format_plan_text(task: str) -> str:
    plan = fallback_parse(Instruction(task))
    lines = [f"Plan for the robot arm:", "", f"Goal: {task}"]
    for sub in plan.subtasks:
        lines.append(f"{sub.index}. {sub.text} /({', '.join(sub.slots)})/")
    return "\n".join(lines)


class StubDetector(_Healthy):
    """Open-vocabulary detector proxy over symbolic renders.

    A record is a high-confidence hit when the query names it directly, and a
    low-confidence hit when at least two query keywords survive in its
    visible appearance tags.
    """

    def detect(self, term: str, keywords: list[str], image) -> list[BBox]:
        boxes = []
        kw = set(keywords)
        for rec in image.records:
            if rec.detector_name == term:
                boxes.append(BBox(*rec.box, score=NAME_MATCH_SCORE))
            elif len(kw & rec.tags) >= KEYWORD_MIN_OVERLAP:
                boxes.append(BBox(*rec.box, score=KEYWORD_MATCH_SCORE))
        return boxes


class StubSegmenter(_Healthy):
    """Returns the exact symbolic mask of the record matching the box."""

    def segment(self, image, bbox) -> set:
        wanted = (bbox.x0, bbox.y0, bbox.x1, bbox.y1)
        for rec in image.records:
            if rec.box == wanted:
                return set(rec.mask)
        return set()


class StubVos(_Healthy):
    """Tracks each initial mask to the render record it covers, then reports
    that record's mask on every later frame."""

    def init(self, frame, masks: dict) -> dict:
        targets = {}
        for term, mask in masks.items():
            cells = set(mask)
            for rec in frame.records:
                if set(rec.mask) & cells:
                    targets[term] = rec.idx
                    break
        return {"targets": targets}

    def step(self, state: dict, frame) -> dict:
        by_idx = {rec.idx: rec for rec in frame.records}
        out = {}
        for term, idx in state["targets"].items():
            rec = by_idx.get(idx)
            if rec is not None:
                out[term] = frozenset(rec.mask)
        return out


class StubVla(_Healthy):
    def __init__(self, vocab: list[str]):
        self.vocab = list(vocab)

    def act(self, prompt: str, image) -> list[float]:
        return scripted_vla(prompt, image, self.vocab)


class StubVerifier(_Healthy):
    def __init__(self, vocab: list[str]):
        self.vocab = list(vocab)

    def verify(self, prompt: str, before, after) -> str:
        return scripted_verifier(prompt, before, after, self.vocab)


class StubUnderstandingVision(_Healthy):
    """Distills fixture keywords for the queried term; unknown terms produce
    an unparseable reply, exercising the caller's retry path."""

    def generate(self, messages) -> str:
        query = None
        for msg in messages:
            for part in msg.get("content", []):
                if part.get("type") == "text":
                    m = _QUERY_IN_PROMPT.search(part["text"])
                    if m:
                        query = m.group("query").strip()
        if query is None:
            return "no query found"
        keywords = fixtures.VISION_KEYWORDS.get(query)
        if keywords is None:
            return "I could not identify a consistent subject."
        return json.dumps(keywords)


class StubUnderstandingText(_Healthy):
    """Replacement decisions from the fixture table.

    Brand-like terms marked ``needs_snippets`` answer NONE unless the
    conversation carries an external web brief; every answer is constrained
    to the allowed vocabulary actually present in the prompt.
    """

    def generate(self, messages) -> str:
        mention, vocab, has_snippets = None, [], False
        for msg in messages:
            for part in msg.get("content", []):
                if part.get("type") != "text":
                    continue
                text = part["text"]
                m = _MENTION_TURN.search(text)
                if m:
                    mention = m.group("mention").strip()
                if "Allowed vocabulary:" in text:
                    vocab = [b.strip() for b in _VOCAB_BULLET.findall(text)]
                if "External brief (web/Wikipedia):" in text:
                    has_snippets = True
        if mention is None:
            return "<answer>NONE</answer>"
        entry = fixtures.TEXT_REPLACEMENTS.get(mention.lower())
        if entry is None:
            return "<answer>NONE</answer>"
        if entry["needs_snippets"] and not has_snippets:
            return "<answer>NONE</answer>"
        replacement = entry["replacement"]
        if replacement is None or (vocab and replacement not in vocab):
            return "<answer>NONE</answer>"
        return f"<answer>{replacement}</answer>"


class StubImageSearch(_Healthy):
    def search(self, term: str, count: int = 6) -> list:
        return fixtures.web_images(term, count)


class StubTextSnippets(_Healthy):
    def search(self, queries: list[str], limit: int = 4) -> list[str]:
        return fixtures.snippets_for(list(queries), limit)


def training_vocab() -> list[str]:
    return build_known_list(fixtures.TRAINING_CORPUS)


def stub_suite(vocab: list[str] | None = None) -> BackendSuite:
    vocab = training_vocab() if vocab is None else list(vocab)
    return BackendSuite(
        planner_llm=StubPlannerLLM(),
        understanding_vision=StubUnderstandingVision(),
        understanding_text=StubUnderstandingText(),
        detector=StubDetector(),
        segmenter=StubSegmenter(),
        vos=StubVos(),
        vla=StubVla(vocab),
        verifier=StubVerifier(vocab),
        image_search=StubImageSearch(),
        text_snippets=StubTextSnippets(),
    )
