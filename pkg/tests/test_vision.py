"""Grounding, collage, palette, mask, and overlay-stream behavior."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from groundling.memory import MemoryStore, VisionMemoryEntry
from groundling.simworld.core import render
from groundling.simworld.tasks import load_suite
from groundling.vision import (
    BBox, KeywordParseFailure, LOCATION_PALETTE, OBJECT_PALETTE,
    PaletteExhausted, assign_colors, build_collage, ground_term,
    initial_layers, make_masks, parse_keywords, vos_stream,
)

names = st.text(alphabet="abcdefgh", min_size=1, max_size=8)


class TestPalettes:
    def test_palettes_disjoint_constants(self):
        assert not set(OBJECT_PALETTE) & set(LOCATION_PALETTE)

    @settings.get_profile("bulk")
    @given(objects=st.lists(names, max_size=5, unique=True),
           locations=st.lists(names, max_size=5, unique=True))
    def test_assignment_uses_disjoint_palettes(self, objects, locations):
        colors = assign_colors(objects, locations)
        seen = {}
        for term, (palette, color) in colors.mapping.items():
            if term in objects:
                assert palette == "objects" and color in OBJECT_PALETTE
            else:
                assert palette == "locations" and color in LOCATION_PALETTE
            assert color not in seen, "color reused"
            seen[color] = term

    def test_object_role_wins_for_shared_terms(self):
        colors = assign_colors(["bowl"], ["bowl", "stove"])
        assert colors.mapping["bowl"][0] == "objects"

    def test_palette_exhaustion(self):
        with pytest.raises(PaletteExhausted):
            assign_colors([f"o{i}" for i in range(6)], [])
        with pytest.raises(PaletteExhausted):
            assign_colors([], [f"l{i}" for i in range(6)])


class TestCollage:
    @settings.get_profile("bulk")
    @given(count=st.integers(min_value=1, max_value=12),
           w=st.integers(min_value=1, max_value=8),
           h=st.integers(min_value=1, max_value=8))
    def test_two_by_three_law(self, count, w, h):
        images = [Image.new("RGB", (w, h), (i * 9 % 256, 0, 0))
                  for i in range(count)]
        out = build_collage(images)
        assert out.size == (3 * w, 2 * h)
        for slot in range(6):
            src = slot % count if count < 6 else slot
            x, y = (slot % 3) * w, (slot // 3) * h
            assert out.getpixel((x, y)) == images[src].getpixel((0, 0))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_collage([])


class TestKeywordParsing:
    def test_plain_json_list(self):
        assert parse_keywords('["a", "b"]') == ["a", "b"]

    def test_first_bracket_wins(self):
        assert parse_keywords('noise ["a"] and ["b"]') == ["a"]

    def test_truncated_to_five(self):
        assert parse_keywords('["1","2","3","4","5","6"]') == ["1", "2", "3", "4", "5"]

    @pytest.mark.parametrize("bad", ["no list here", "[]", "[1, 2]", "[broken"])
    def test_failures(self, bad):
        with pytest.raises(KeywordParseFailure):
            parse_keywords(bad)


class TestBBox:
    def test_bounds_enforced(self):
        BBox(0, 0, 32, 32, 0.9)
        for args in [(32, 0, 0, 32, 0.5), (0, 0, 0, 32, 0.5),
                     (-1, 0, 32, 32, 0.5), (0, 0, 32, 99999, 0.5)]:
            with pytest.raises(ValueError):
                BBox(*args, )

    def test_score_range(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 32, 32, 1.5)


def _scene_and_frame(task_id="bowl-stove"):
    task = next(t for t in load_suite("hard") if t.id == task_id)
    scene = task.canonical_scene()
    return scene, render(scene)


class TestGroundTerm:
    def test_known_term_by_name(self, suite, vocab):
        _, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        rec = ground_term("stove", frame, memory, suite)
        assert rec.bbox is not None and rec.bbox.score == pytest.approx(0.9)
        assert rec.keywords is None  # no web branch taken

    def test_novel_term_learns_from_web(self, suite, vocab):
        _, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        rec = ground_term("blue white porcelain bowl", frame, memory, suite)
        assert rec.bbox is not None and rec.bbox.score == pytest.approx(0.6)
        assert rec.keywords and len(rec.keywords) == 5
        assert "blue white porcelain bowl" in memory.vision

    def test_memory_hit_skips_web(self, vocab, suite):
        from groundling.backends import CallCounter
        _, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        memory.vision["blue white porcelain bowl"] = VisionMemoryEntry(
            "blue white porcelain bowl",
            ["round", "ceramic", "blue-and-white", "porcelain", "delicate"])
        counter = CallCounter(suite)
        rec = ground_term("blue white porcelain bowl", frame, memory, counter.suite)
        assert rec.bbox is not None and rec.from_memory
        assert counter.counts["image_search"] == 0
        assert counter.counts["understanding_vision"] == 0

    def test_web_disabled_leaves_term_ungrounded(self, suite, vocab):
        _, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        rec = ground_term("blue white porcelain bowl", frame, memory, suite,
                          web_enabled=False)
        assert rec.bbox is None and rec.keywords is None
        assert "blue white porcelain bowl" not in memory.vision

    def test_unknown_term_no_web_images_no_memory_write(self, suite, vocab):
        _, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        rec = ground_term("flux capacitor", frame, memory, suite)
        assert rec.bbox is None
        assert "flux capacitor" not in memory.vision


class TestMasksAndStream:
    def test_masks_match_symbolic_records(self, suite, vocab):
        scene, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        recs = [ground_term("stove", frame, memory, suite)]
        make_masks(recs, frame, suite)
        stove = scene.entities["stove"]
        assert recs[0].mask == frozenset({stove.pos})

    def test_bbox_interior_fallback(self, suite):
        class EmptySegmenter:
            def segment(self, image, bbox):
                return set()

        class Backends:
            segmenter = EmptySegmenter()

        from groundling.vision import GroundingRecord
        rec = GroundingRecord(term="x", bbox=BBox(32, 32, 64, 64, 0.9))
        make_masks([rec], None, Backends())
        assert rec.mask == frozenset({(1, 1)}) and rec.mask_degraded

    def test_stream_tracks_motion(self, suite, vocab):
        scene, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        recs = [ground_term("stove", frame, memory, suite)]
        make_masks(recs, frame, suite)
        colors = assign_colors([], ["stove"])
        for rec in recs:
            rec.color = colors.color_of(rec.term)
        layers = initial_layers(recs)
        overlay, state = vos_stream(layers, frame, None, suite)
        assert overlay.layers[0].color == "blue"
        scene.entities["stove"].pos = (1, 1)
        overlay2, state = vos_stream(layers, render(scene), state, suite)
        assert overlay2.layers[0].mask == frozenset({(1, 1)})

    def test_stream_freezes_on_backend_failure(self, suite, vocab):
        scene, frame = _scene_and_frame()
        memory = MemoryStore(known_list=vocab)
        recs = [ground_term("stove", frame, memory, suite)]
        make_masks(recs, frame, suite)
        recs[0].color = "blue"
        layers = initial_layers(recs)
        overlay, state = vos_stream(layers, frame, None, suite)

        class FailingVos:
            def step(self, st, fr):
                raise RuntimeError("tracker lost")

        class Backends:
            vos = FailingVos()

        overlay2, _ = vos_stream(layers, render(scene), state, Backends())
        assert overlay2.frozen
        assert overlay2.layers[0].mask == overlay.layers[0].mask
