"""Wire protocol envelopes, payload codecs, and the counted suite wrapper."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from groundling.backends import BackendSuite, CallCounter
from groundling.backends.protocol import (
    ENDPOINTS, VERSION, WireError, decode_request, decode_response,
    encode_request, encode_response, image_from_wire, image_to_wire,
    mask_from_wire, mask_to_wire,
)
from groundling.simworld.core import render
from groundling.simworld.tasks import load_suite

json_scalars = st.one_of(st.none(), st.booleans(),
                         st.integers(-10**6, 10**6),
                         st.floats(allow_nan=False, allow_infinity=False,
                                   width=32),
                         st.text(max_size=30))
json_values = st.recursive(
    json_scalars,
    lambda inner: st.one_of(st.lists(inner, max_size=4),
                            st.dictionaries(st.text(max_size=8), inner,
                                            max_size=4)),
    max_leaves=12)
payloads = st.dictionaries(st.text(max_size=12), json_values, max_size=5)


class TestEnvelopes:
    @settings.get_profile("bulk")
    @given(endpoint=st.sampled_from(ENDPOINTS), payload=payloads)
    def test_request_round_trip(self, endpoint, payload):
        raw = encode_request(endpoint, payload, "req-1")
        env = decode_request(raw)
        assert env["version"] == VERSION
        assert env["endpoint"] == endpoint
        assert env["id"] == "req-1"
        assert env["payload"] == json.loads(json.dumps(payload))

    @settings.get_profile("bulk")
    @given(payload=payloads)
    def test_response_round_trip(self, payload):
        env = decode_response(encode_response("id-9", payload))
        assert env["ok"] and env["id"] == "id-9"
        assert env["payload"] == json.loads(json.dumps(payload))

    def test_fresh_id_generated_when_omitted(self):
        a = decode_request(encode_request("/v1/health", {}))
        b = decode_request(encode_request("/v1/health", {}))
        assert a["id"] != b["id"]

    def test_error_response(self):
        env = decode_response(encode_response(
            "x", error={"type": "wire", "message": "bad"}))
        assert not env["ok"] and env["error"]["message"] == "bad"

    @pytest.mark.parametrize("raw", [
        "not json", "[1,2]",
        json.dumps({"version": VERSION, "endpoint": "/v1/act", "id": "a"}),
        json.dumps({"version": 99, "endpoint": "/v1/act", "id": "a",
                    "payload": {}}),
        json.dumps({"version": VERSION, "endpoint": "/v2/zap", "id": "a",
                    "payload": {}}),
    ])
    def test_bad_requests_rejected(self, raw):
        with pytest.raises(WireError):
            decode_request(raw)

    @pytest.mark.parametrize("raw", [
        "garbage",
        json.dumps({"version": VERSION, "id": "a"}),
        json.dumps({"version": VERSION, "id": "a", "ok": True}),
        json.dumps({"version": VERSION, "id": "a", "ok": False}),
    ])
    def test_bad_responses_rejected(self, raw):
        with pytest.raises(WireError):
            decode_response(raw)

    def test_unknown_endpoint_on_encode(self):
        with pytest.raises(WireError):
            encode_request("/v1/teleport", {})


class TestPayloadCodecs:
    def test_symbolic_image_round_trip(self):
        for task in load_suite("hard"):
            frame = render(task.canonical_scene())
            wired = image_to_wire(frame)
            assert json.loads(json.dumps(wired)) == wired  # JSON-clean
            assert image_from_wire(wired) == frame

    def test_raster_image_round_trip(self):
        img = Image.new("RGB", (6, 4), (10, 200, 30))
        back = image_from_wire(image_to_wire(img))
        assert back.size == img.size
        assert back.getpixel((5, 3)) == (10, 200, 30)

    def test_none_passes_through(self):
        assert image_to_wire(None) is None
        assert image_from_wire(None) is None

    def test_unencodable_image_rejected(self):
        with pytest.raises(WireError):
            image_to_wire(object())

    @settings.get_profile("bulk")
    @given(mask=st.frozensets(
        st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=10))
    def test_mask_round_trip(self, mask):
        wired = mask_to_wire(mask)
        assert wired == sorted(wired)  # canonical order
        assert mask_from_wire(json.loads(json.dumps(wired))) == mask


class TestSuite:
    def test_handles_cover_all_capabilities(self, suite):
        from groundling.backends import CAPABILITIES
        assert set(suite.handles()) == set(CAPABILITIES)
        suite.health_check()  # stubs are always healthy

    def test_missing_capability_rejected(self):
        with pytest.raises(TypeError):
            BackendSuite(planner_llm=object())

    def test_call_counter_counts_per_capability(self, suite):
        counter = CallCounter(suite)
        frame = render(load_suite("hard")[0].canonical_scene())
        counter.suite.detector.detect("stove", [], frame)
        counter.suite.detector.detect("rack", [], frame)
        counter.suite.planner_llm.generate("Task: x\nOutput:")
        snap = counter.snapshot()
        assert snap["detector"] == 2
        assert snap["planner_llm"] == 1
        assert snap["segmenter"] == 0

    def test_health_probes_not_counted(self, suite):
        counter = CallCounter(suite)
        counter.suite.detector.health()
        assert counter.snapshot()["detector"] == 0
