"""Persistent stores: vision memory, the text replace map, and the KnownList
vocabulary, plus the OOD reset used before evaluation runs.

On-disk layout under a store root:

    vision/<slug>/keywords.json      term + up to five keywords
    vision/<slug>/collage.png        2x3 web collage
    vision/<slug>/img_<i>.png        raw retrieved images
    replace_map.json                 flat original -> replacement object
    known_list.json                  sorted array of vocabulary labels
"""

from __future__ import annotations

import json
import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock
from PIL import Image

# words ignored while extracting noun phrases from the training corpus
_STOPWORDS = {
    "the", "a", "an", "of", "and", "it", "them", "both", "to", "on", "in",
    "into", "onto", "inside", "at", "near", "next", "with", "from", "up",
    "off", "down", "then", "there", "that", "this", "its", "is", "are",
    "top", "bottom", "middle", "left", "right", "front", "back", "upper",
    "lower", "first", "second", "last",
}
_VERBS = {
    "pick", "place", "put", "open", "close", "turn", "push", "pull", "move",
    "take", "grab", "grasp", "lift", "lower", "release", "rotate", "slide",
}


class InvalidCorpus(ValueError):
    pass


class LoadFailure(RuntimeError):
    def __init__(self, path, reason):
        super().__init__(f"cannot load memory file {path}: {reason}")
        self.path = Path(path)


@dataclass
class VisionMemoryEntry:
    term: str
    keywords: list[str]
    collage: Image.Image | None = None
    raw_images: list[Image.Image] = field(default_factory=list)

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("vision memory entry requires keywords")


@dataclass
class MemoryStore:
    vision: dict[str, VisionMemoryEntry] = field(default_factory=dict)
    replace_map: dict[str, str] = field(default_factory=dict)
    known_list: list[str] = field(default_factory=list)

    def record_replacement(self, original: str, replacement: str):
        if replacement not in self.known_list:
            raise ValueError(f"replacement {replacement!r} not in KnownList")
        self.replace_map[original] = replacement


def build_known_list(corpus: list[str]) -> list[str]:
    """Extract the noun vocabulary from training task strings.

    Tokens are lowercased and tagged by a closed function-word/verb table;
    each remaining content run contributes its head noun and every suffix
    phrase (adjectives + noun).  Result is sorted and de-duplicated.
    """
    if not corpus or all(not s.strip() for s in corpus):
        raise InvalidCorpus("empty corpus")
    labels: set[str] = set()
    for sentence in corpus:
        tokens = re.findall(r"[a-z][a-z-]*", sentence.lower())
        run: list[str] = []
        for tok in tokens + [""]:
            if tok and tok not in _STOPWORDS and tok not in _VERBS:
                run.append(tok)
                continue
            if run:
                for start in range(len(run)):
                    labels.add(" ".join(run[start:]))
                run = []
    return sorted(labels)


def slug(term: str) -> str:
    return re.sub(r"[^a-z0-9_]+", "", term.lower().replace(" ", "_"))


def save_store(store: MemoryStore, root: str | Path):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    with FileLock(str(root / ".lock")):
        (root / "replace_map.json").write_text(
            json.dumps(store.replace_map, indent=2, sort_keys=True), encoding="utf-8")
        (root / "known_list.json").write_text(
            json.dumps(store.known_list, indent=2), encoding="utf-8")
        vis_root = root / "vision"
        vis_root.mkdir(exist_ok=True)
        # drop on-disk entries for terms no longer in the store (reset paths)
        for d in vis_root.iterdir():
            kw_path = d / "keywords.json"
            if not d.is_dir() or not kw_path.exists():
                continue
            try:
                meta = json.loads(kw_path.read_text(encoding="utf-8"))
            except (OSError, ValueError):
                continue
            if meta.get("term") not in store.vision:
                shutil.rmtree(d)
        for term, entry in store.vision.items():
            d = vis_root / _unique_slug(vis_root, term)
            d.mkdir(exist_ok=True)
            (d / "keywords.json").write_text(
                json.dumps({"term": term, "keywords": entry.keywords}, indent=2),
                encoding="utf-8")
            if entry.collage is not None:
                entry.collage.save(d / "collage.png")
            for i, img in enumerate(entry.raw_images):
                img.save(d / f"img_{i}.png")


def _unique_slug(vis_root: Path, term: str) -> str:
    base = slug(term)
    candidate, n = base, 1
    while True:
        d = vis_root / candidate
        if not d.exists():
            return candidate
        try:
            meta = json.loads((d / "keywords.json").read_text(encoding="utf-8"))
            if meta.get("term") == term:
                return candidate
        except (OSError, ValueError):
            return candidate
        candidate = f"{base}_{n}"
        n += 1


def load_store(root: str | Path) -> MemoryStore:
    root = Path(root)
    store = MemoryStore()
    if not root.exists():
        return store
    store.replace_map = _load_json(root / "replace_map.json", dict) or {}
    store.known_list = _load_json(root / "known_list.json", list) or []
    for values in store.replace_map.values():
        if store.known_list and values not in store.known_list:
            raise LoadFailure(root / "replace_map.json",
                              f"replacement {values!r} not in KnownList")
    vis_root = root / "vision"
    if vis_root.exists():
        for d in sorted(vis_root.iterdir()):
            kw_path = d / "keywords.json"
            if not kw_path.exists():
                continue
            meta = _load_json(kw_path, dict)
            if meta is None or "term" not in meta or not meta.get("keywords"):
                raise LoadFailure(kw_path, "missing term or keywords")
            collage = None
            if (d / "collage.png").exists():
                collage = Image.open(d / "collage.png").copy()
            raws = []
            for p in sorted(d.glob("img_*.png")):
                raws.append(Image.open(p).copy())
            store.vision[meta["term"]] = VisionMemoryEntry(
                term=meta["term"], keywords=list(meta["keywords"]),
                collage=collage, raw_images=raws)
    return store


def _load_json(path: Path, expected_type):
    if not path.exists():
        return None
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise LoadFailure(path, str(exc))
    if not isinstance(data, expected_type):
        raise LoadFailure(path, f"expected {expected_type.__name__}")
    return data


def reset_ood(store: MemoryStore, id_terms: list[str]) -> MemoryStore:
    """Drop every memory entry for a term outside ``id_terms``.  Idempotent."""
    keep = set(id_terms)
    store.vision = {t: e for t, e in store.vision.items() if t in keep}
    store.replace_map = {t: r for t, r in store.replace_map.items() if t in keep}
    return store
