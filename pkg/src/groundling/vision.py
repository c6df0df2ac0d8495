"""Visual grounding: detector queries, the web-collage instant-learning
branch, mask generation, color assignment, and VOS overlay streaming.

Grounding follows a double judgment per term: a detector hit with the bare
name ends the search; otherwise cached or freshly distilled web keywords are
used for one re-detection, and a term that still fails is carried with an
absent box and no mask.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace

from PIL import Image

from . import prompts
from .memory import MemoryStore, VisionMemoryEntry
from .simworld.core import CELL_PX, GRID, SymbolicImage

OBJECT_PALETTE = ("red", "green", "yellow", "orange", "magenta")
LOCATION_PALETTE = ("blue", "purple", "cyan", "teal", "navy")

PALETTE_RGB = {
    "red": (220, 50, 50), "green": (60, 180, 75), "yellow": (255, 225, 25),
    "orange": (245, 130, 48), "magenta": (240, 50, 230), "blue": (0, 90, 200),
    "purple": (145, 30, 180), "cyan": (70, 240, 240), "teal": (0, 128, 128),
    "navy": (0, 0, 128),
}

DEFAULT_SCORE_THRESHOLD = 0.35
WEB_IMAGE_COUNT = 6  # exactly fills the 2x3 collage
DEFAULT_OVERLAY_ALPHA = 0.5


class InvalidInput(ValueError):
    pass


class PaletteExhausted(ValueError):
    pass


class KeywordParseFailure(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    x0: int
    y0: int
    x1: int
    y1: int
    score: float

    def __post_init__(self):
        bound = GRID * CELL_PX
        if not (0 <= self.x0 < self.x1 <= bound and 0 <= self.y0 < self.y1 <= bound):
            raise ValueError(f"degenerate or out-of-frame box {self}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")


@dataclass
class GroundingRecord:
    term: str
    bbox: BBox | None = None
    keywords: list[str] | None = None
    collage: Image.Image | None = None
    crop: object | None = None
    mask: frozenset | None = None
    color: str | None = None
    candidate_count: int = 0
    from_memory: bool = False
    mask_degraded: bool = False

    def check(self):
        if self.mask is not None and self.bbox is None:
            raise ValueError("mask without bbox")
        if self.color is not None and self.mask is None:
            raise ValueError("color without mask")


@dataclass(frozen=True)
class ColorAssignment:
    mapping: dict[str, tuple[str, str]]  # term -> (palette id, color)

    def color_of(self, term: str) -> str | None:
        entry = self.mapping.get(term)
        return entry[1] if entry else None


def assign_colors(objects: list[str], locations: list[str]) -> ColorAssignment:
    """Objects and locations draw from disjoint palettes, in plan order."""
    if len(objects) > len(OBJECT_PALETTE):
        raise PaletteExhausted(f"{len(objects)} objects > {len(OBJECT_PALETTE)} colors")
    if len(locations) > len(LOCATION_PALETTE):
        raise PaletteExhausted(f"{len(locations)} locations > {len(LOCATION_PALETTE)} colors")
    mapping: dict[str, tuple[str, str]] = {}
    for term, color in zip(objects, OBJECT_PALETTE):
        mapping[term] = ("objects", color)
    for term, color in zip(locations, LOCATION_PALETTE):
        if term not in mapping:
            mapping[term] = ("locations", color)
    return ColorAssignment(mapping)


def build_collage(images: list[Image.Image]) -> Image.Image:
    """2-row x 3-column grid; short lists repeat cyclically, long ones clip."""
    if not images:
        raise InvalidInput("collage needs at least one image")
    cell_w, cell_h = images[0].size
    out = Image.new("RGB", (3 * cell_w, 2 * cell_h))
    for i in range(6):
        img = images[i % len(images)] if len(images) < 6 else images[i]
        if img.size != (cell_w, cell_h):
            img = img.resize((cell_w, cell_h))
        out.paste(img, ((i % 3) * cell_w, (i // 3) * cell_h))
    return out


_BRACKET = re.compile(r"\[.*?\]", re.S)


def parse_keywords(model_output: str) -> list[str]:
    """First bracketed JSON list in the output, truncated to five strings."""
    m = _BRACKET.search(model_output)
    if not m:
        raise KeywordParseFailure("no bracketed list in output")
    try:
        data = json.loads(m.group(0))
    except ValueError as exc:
        raise KeywordParseFailure(f"bracketed span is not JSON: {exc}")
    if not isinstance(data, list) or not data or not all(isinstance(s, str) for s in data):
        raise KeywordParseFailure("expected a non-empty list of strings")
    return data[:5]


def build_vision_messages(query: str, collage, current_image) -> list[dict]:
    system = prompts.VISION_KEYWORDS_TEMPLATE.format(query=query)
    return [
        {"role": "system", "content": [{"type": "text", "text": system}]},
        {"role": "user", "content": [
            {"type": "text", "text": "Here is the combined image from the web."},
            {"type": "image", "image": collage},
        ]},
        {"role": "user", "content": [
            {"type": "text", "text": "This is the current image from the camera."},
            {"type": "image", "image": current_image},
        ]},
    ]


def _best_box(boxes, threshold: float) -> BBox | None:
    valid = [b for b in boxes if b.score >= threshold]
    if not valid:
        return None
    return max(valid, key=lambda b: b.score)


def _crop(image, bbox: BBox):
    if isinstance(image, SymbolicImage):
        for rec in image.records:
            if rec.box == (bbox.x0, bbox.y0, bbox.x1, bbox.y1):
                return {"kind": "symbolic-crop", "box": list(rec.box),
                        "tags": sorted(rec.tags)}
        return {"kind": "symbolic-crop", "box": [bbox.x0, bbox.y0, bbox.x1, bbox.y1],
                "tags": []}
    return image.crop((bbox.x0, bbox.y0, bbox.x1, bbox.y1))


def ground_term(term: str, first_image, memory: MemoryStore, backends,
                web_enabled: bool = True,
                score_threshold: float = DEFAULT_SCORE_THRESHOLD) -> GroundingRecord:
    """Ground one term against the episode's first frame."""
    boxes = backends.detector.detect(term, [], first_image)
    record = GroundingRecord(term=term, candidate_count=len(boxes))
    record.bbox = _best_box(boxes, score_threshold)

    entry = memory.vision.get(term)
    if entry is not None:
        record.keywords = list(entry.keywords)
        record.collage = entry.collage
        record.from_memory = True

    if record.bbox is None:
        if record.keywords is None and web_enabled:
            images = backends.image_search.search(term, WEB_IMAGE_COUNT)
            if images:
                collage = build_collage(images)
                keywords = _request_keywords(term, collage, first_image, backends)
                if keywords:
                    record.keywords = keywords
                    record.collage = collage
                    memory.vision[term] = VisionMemoryEntry(
                        term=term, keywords=list(keywords), collage=collage,
                        raw_images=list(images))
        if record.keywords:
            boxes = backends.detector.detect(term, record.keywords, first_image)
            record.candidate_count = max(record.candidate_count, len(boxes))
            record.bbox = _best_box(boxes, score_threshold)

    if record.bbox is not None:
        record.crop = _crop(first_image, record.bbox)
    record.check()
    return record


def _request_keywords(term, collage, first_image, backends) -> list[str] | None:
    messages = build_vision_messages(term, collage, first_image)
    for _ in range(2):  # one regeneration on parse failure
        out = backends.understanding_vision.generate(messages)
        try:
            return parse_keywords(out)
        except KeywordParseFailure:
            continue
    return None


def make_masks(records: list[GroundingRecord], first_image, backends) -> list[GroundingRecord]:
    """Attach a segmenter mask to every record that has a box."""
    for record in records:
        if record.bbox is None:
            continue
        mask = backends.segmenter.segment(first_image, record.bbox)
        if not mask:
            # degrade to the box interior: the overlay draws the rectangle
            mask = _box_cells(record.bbox)
            record.mask_degraded = True
        record.mask = frozenset(mask)
        record.check()
    return records


def _box_cells(bbox: BBox) -> frozenset:
    cells = set()
    for x in range(bbox.x0 // CELL_PX, max(bbox.x0 // CELL_PX + 1, -(-bbox.x1 // CELL_PX))):
        for y in range(bbox.y0 // CELL_PX, max(bbox.y0 // CELL_PX + 1, -(-bbox.y1 // CELL_PX))):
            cells.add((x, y))
    return frozenset(cells)


# --- VOS streaming ----------------------------------------------------------

@dataclass(frozen=True)
class OverlayLayer:
    term: str
    color: str
    mask: frozenset


@dataclass(frozen=True)
class Overlay:
    frame: SymbolicImage
    layers: tuple[OverlayLayer, ...]
    alpha: float = DEFAULT_OVERLAY_ALPHA
    frozen: bool = False


@dataclass
class VosState:
    backend_state: object
    colors: dict[str, str]
    last_masks: dict[str, frozenset]


def vos_stream(initial_layers: list[OverlayLayer], frame, state: VosState | None,
               backends, alpha: float = DEFAULT_OVERLAY_ALPHA):
    """Propagate masks onto ``frame``; returns (overlay, new state).

    A VOS backend failure freezes the previous frame's masks and flags the
    overlay, so downstream consumers can record the degradation.
    """
    frozen = False
    if state is None:
        masks = {layer.term: layer.mask for layer in initial_layers}
        backend_state = backends.vos.init(frame, masks)
        state = VosState(
            backend_state=backend_state,
            colors={layer.term: layer.color for layer in initial_layers},
            last_masks=dict(masks),
        )
    else:
        try:
            masks = backends.vos.step(state.backend_state, frame)
            state.last_masks = dict(masks)
        except Exception:
            masks = state.last_masks
            frozen = True
    layers = tuple(OverlayLayer(term=t, color=state.colors[t], mask=frozenset(m))
                   for t, m in masks.items() if t in state.colors)
    return Overlay(frame=frame, layers=layers, alpha=alpha, frozen=frozen), state


def rasterize_overlay(overlay: Overlay) -> Image.Image:
    """Lossless raster of a symbolic overlay, for trace artifacts."""
    size = GRID * CELL_PX
    img = Image.new("RGB", (size, size), (235, 235, 235))
    px = img.load()
    for rec in overlay.frame.records:
        for x in range(rec.box[0], rec.box[2]):
            for y in range(rec.box[1], rec.box[3]):
                px[x, y] = (120, 120, 120)
    for layer in overlay.layers:
        rgb = PALETTE_RGB[layer.color]
        for (cx, cy) in layer.mask:
            for x in range(cx * CELL_PX, (cx + 1) * CELL_PX):
                for y in range(cy * CELL_PX, (cy + 1) * CELL_PX):
                    base = px[x, y]
                    px[x, y] = tuple(
                        int((1 - overlay.alpha) * b + overlay.alpha * c)
                        for b, c in zip(base, rgb))
    return img


def records_by_term(records: list[GroundingRecord]) -> dict[str, GroundingRecord]:
    return {r.term: r for r in records}


def apply_colors(records: list[GroundingRecord], colors: ColorAssignment):
    for record in records:
        if record.mask is not None:
            color = colors.color_of(record.term)
            if color is None:
                record.mask = None
                record.mask_degraded = False
            else:
                record.color = color
        record.check()
    return records


def initial_layers(records: list[GroundingRecord]) -> list[OverlayLayer]:
    return [OverlayLayer(term=r.term, color=r.color, mask=r.mask)
            for r in records if r.mask is not None and r.color is not None]


def clone_record(record: GroundingRecord) -> GroundingRecord:
    return replace(record)
