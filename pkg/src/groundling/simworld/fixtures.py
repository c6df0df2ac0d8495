"""Fixture knowledge for the desk-scale world: detector lexicon, the web image
corpus, keyword/replacement tables for the understanding stubs, and the
training corpus the KnownList is built from.

The appearance-tag overlaps here are load-bearing: a novel term is
re-detectable only when at least two of its fixture keywords survive the
per-episode tag jitter, so the drop counts below set each term's mask-delivery
rate under the stub detector.
"""

from __future__ import annotations

from PIL import Image

# Terms the fine-tuned detector recognizes by name, with canonical appearance
# tags (the "fine-tuning data" of the stub).
DETECTOR_LEXICON: dict[str, list[str]] = {
    "stove": ["burner", "metallic", "flat-top", "knobbed", "black"],
    "rack": ["slatted", "wooden", "open-frame", "brown", "shelf-like"],
    "drawer": ["boxy", "wooden", "handled", "brown", "sliding"],
    "black bowl": ["round", "black", "deep", "glossy", "smooth"],
    "plate": ["flat", "round-rim", "white", "shallow", "smooth"],
    "wooden cabinet": ["boxy", "wooden", "handled", "tall", "brown"],
    "cream cheese": ["rectangular", "white", "small", "soft", "boxed"],
    "wine bottle": ["bottle-shaped", "green-glass", "slender", "corked", "dark"],
}

# Novel appearances: full tag set plus how many tags the per-episode jitter
# removes.  Two fixture keywords overlap each tag set; survival of both is
# what the stub detector's keyword route requires.
NOVEL_APPEARANCE: dict[str, dict] = {
    "blue white porcelain bowl": {
        "tags": ["round", "ceramic", "blue-patterned", "small", "glossy"],
        "drop": 1,
    },
    "saucer": {
        "tags": ["flat", "shallow", "white", "rimmed-edge", "smooth"],
        "drop": 1,
    },
    "white cabinet": {
        "tags": ["boxy", "handled", "white-painted", "tall", "doored"],
        "drop": 1,
    },
    "moutai": {
        "tags": ["bottle-shaped", "red-label", "white-glass", "slender", "capped"],
        "drop": 2,
    },
    "butter": {
        "tags": ["rectangular", "pale-yellow", "small", "soft", "wrapped"],
        "drop": 2,
    },
    "orange bowl": {
        "tags": ["round", "orange", "deep", "bowl-shaped", "glossy"],
        "drop": 1,
    },
    "white bowl": {
        "tags": ["round", "white-ceramic", "deep", "plain", "glossy"],
        "drop": 1,
    },
    "blue bottle": {
        "tags": ["bottle-shaped", "sky-blue", "slender", "capped", "shiny"],
        "drop": 1,
    },
}

# Keywords the understanding (vision) stub distills for each term from its
# web collage; exactly five per term.
VISION_KEYWORDS: dict[str, list[str]] = {
    "blue white porcelain bowl": ["round", "ceramic", "blue-and-white", "porcelain", "delicate"],
    "saucer": ["flat", "shallow", "dish", "rimmed", "plain"],
    "white cabinet": ["boxy", "handled", "furniture", "storage", "doors"],
    "moutai": ["bottle-shaped", "red-label", "liquor", "branded", "chinese"],
    "butter": ["rectangular", "pale-yellow", "dairy", "creamy", "block"],
    "orange bowl": ["round", "orange", "bowl-shaped", "deep", "glossy"],
    "white bowl": ["round", "white-ceramic", "deep", "ceramic", "glossy"],
    "blue bottle": ["bottle-shaped", "sky-blue", "glass", "capped", "drink"],
}

# Replacement behaviour of the understanding (text) stub.  ``needs_snippets``
# marks brand-like terms that are only resolvable with the external web brief.
TEXT_REPLACEMENTS: dict[str, dict] = {
    "blue white porcelain bowl": {"replacement": "black bowl", "needs_snippets": False},
    "saucer": {"replacement": "plate", "needs_snippets": False},
    "white cabinet": {"replacement": "wooden cabinet", "needs_snippets": False},
    "moutai": {"replacement": "wine bottle", "needs_snippets": True},
    "butter": {"replacement": None, "needs_snippets": False},
    "orange bowl": {"replacement": "black bowl", "needs_snippets": False},
    "white bowl": {"replacement": "black bowl", "needs_snippets": False},
    "blue bottle": {"replacement": "wine bottle", "needs_snippets": False},
}

# External text snippets, keyed by query term.
SNIPPETS: dict[str, list[str]] = {
    "moutai": [
        "Moutai is a well-known Chinese liquor sold in a white glass bottle "
        "with a prominent red label.",
    ],
    "blue bottle": [
        "A slender sky-blue glass bottle, similar in shape to a wine bottle.",
    ],
}

# Task strings the execution model was fine-tuned on; source of the KnownList.
TRAINING_CORPUS: list[str] = [
    "turn on the stove",
    "pick up the black bowl and place it on the plate",
    "put the wine bottle on the rack",
    "open the top drawer of the wooden cabinet",
    "put the cream cheese in the black bowl",
    "put the black bowl on top of the wooden cabinet",
    "close the bottom drawer of the wooden cabinet",
    "pick up the plate and place it on the stove",
]

_PALETTE_RGB = {
    "blue-patterned": (70, 90, 200), "red-label": (200, 40, 40),
    "pale-yellow": (240, 230, 140), "white-painted": (245, 245, 245),
    "sky-blue": (120, 190, 240), "orange": (240, 140, 40),
}


def web_images(term: str, count: int = 6, size: int = 16) -> list[Image.Image]:
    """Deterministic stand-in web corpus: small solid-ish rasters per term.

    Unknown terms yield an empty result, which the vision pipeline treats as
    a failed retrieval.
    """
    if term not in NOVEL_APPEARANCE:
        return []
    tags = NOVEL_APPEARANCE[term]["tags"]
    base = next((_PALETTE_RGB[t] for t in tags if t in _PALETTE_RGB), (160, 160, 160))
    images = []
    for i in range(count):
        shade = tuple(min(255, c + 12 * i) for c in base)
        images.append(Image.new("RGB", (size, size), shade))
    return images


def snippets_for(queries: list[str], limit: int = 4) -> list[str]:
    out: list[str] = []
    for q in queries:
        out.extend(SNIPPETS.get(q, []))
    return out[:limit]
