"""HTTP clients for the wire protocol.

Each Remote* handle mirrors a stub's method surface but forwards the call to
a server speaking the versioned JSON envelope.  One automatic retry covers
transient transport failures; a bad envelope or a mismatched request id is a
:class:`ProtocolError`, never silently accepted.
"""

from __future__ import annotations

import base64
import io

import requests
from PIL import Image

from . import BackendFailure, BackendSuite, ProtocolError
from .protocol import (
    WireError, decode_response, encode_request, image_from_wire, image_to_wire,
    mask_from_wire, mask_to_wire, new_request_id,
)

DEFAULT_TIMEOUT = 30.0


def remote_call(base_url: str, endpoint: str, payload: dict,
                timeout: float = DEFAULT_TIMEOUT) -> dict:
    """POST one envelope and return the response payload."""
    request_id = new_request_id()
    body = encode_request(endpoint, payload, request_id)
    url = base_url.rstrip("/") + endpoint
    last_exc = None
    for _ in range(2):  # one retry on transport failure
        try:
            resp = requests.post(url, data=body.encode("utf-8"),
                                 headers={"Content-Type": "application/json"},
                                 timeout=timeout)
            break
        except requests.RequestException as exc:
            last_exc = exc
    else:
        raise BackendFailure(f"cannot reach {url}: {last_exc}")
    try:
        env = decode_response(resp.text)
    except WireError as exc:
        raise ProtocolError(str(exc))
    if env["id"] != request_id:
        raise ProtocolError(f"response id {env['id']!r} != request id {request_id!r}")
    if not env["ok"]:
        raise BackendFailure(f"{endpoint}: {env['error']}")
    return env["payload"]


def remote_get(base_url: str, endpoint: str, params: dict,
               timeout: float = DEFAULT_TIMEOUT) -> dict:
    url = base_url.rstrip("/") + endpoint
    last_exc = None
    for _ in range(2):
        try:
            resp = requests.get(url, params=params, timeout=timeout)
            break
        except requests.RequestException as exc:
            last_exc = exc
    else:
        raise BackendFailure(f"cannot reach {url}: {last_exc}")
    try:
        env = decode_response(resp.text)
    except WireError as exc:
        raise ProtocolError(str(exc))
    if not env["ok"]:
        raise BackendFailure(f"{endpoint}: {env['error']}")
    return env["payload"]


def messages_to_wire(messages) -> list[dict]:
    out = []
    for msg in messages:
        parts = []
        for part in msg.get("content", []):
            if part.get("type") == "image":
                parts.append({"type": "image", "image": image_to_wire(part["image"])})
            else:
                parts.append(part)
        out.append({"role": msg["role"], "content": parts})
    return out


class _RemoteBase:
    def __init__(self, base_url: str):
        self.base_url = base_url

    def health(self) -> bool:
        try:
            payload = remote_get(self.base_url, "/v1/health", {})
        except (BackendFailure, ProtocolError):
            return False
        return payload.get("status") == "ok"


class RemoteTextModel(_RemoteBase):
    """planner / understanding models multiplexed over /v1/generate."""

    def __init__(self, base_url: str, model: str):
        super().__init__(base_url)
        self.model = model

    def generate(self, prompt_or_messages) -> str:
        if isinstance(prompt_or_messages, str):
            payload = {"model": self.model, "prompt": prompt_or_messages}
        else:
            payload = {"model": self.model,
                       "messages": messages_to_wire(prompt_or_messages)}
        return remote_call(self.base_url, "/v1/generate", payload)["text"]


class RemoteDetector(_RemoteBase):
    def detect(self, term, keywords, image):
        from ..vision import BBox
        payload = {"term": term, "keywords": list(keywords),
                   "image": image_to_wire(image)}
        out = remote_call(self.base_url, "/v1/detect", payload)
        return [BBox(b["x0"], b["y0"], b["x1"], b["y1"], b["score"])
                for b in out["boxes"]]


class RemoteSegmenter(_RemoteBase):
    def segment(self, image, bbox):
        payload = {"image": image_to_wire(image),
                   "box": [bbox.x0, bbox.y0, bbox.x1, bbox.y1],
                   "score": bbox.score}
        out = remote_call(self.base_url, "/v1/segment", payload)
        return set(mask_from_wire(out["mask"]))


class RemoteVos(_RemoteBase):
    def init(self, frame, masks):
        payload = {"frame": image_to_wire(frame),
                   "masks": {t: mask_to_wire(m) for t, m in masks.items()}}
        return remote_call(self.base_url, "/v1/vos/init", payload)

    def step(self, state, frame):
        payload = {"session": state["session"], "frame": image_to_wire(frame)}
        out = remote_call(self.base_url, "/v1/vos/step", payload)
        return {t: mask_from_wire(m) for t, m in out["masks"].items()}


class RemoteVla(_RemoteBase):
    def act(self, prompt, image):
        payload = {"prompt": prompt, "image": _observation_to_wire(image)}
        return remote_call(self.base_url, "/v1/act", payload)["action"]


class RemoteVerifier(_RemoteBase):
    def verify(self, prompt, before, after):
        payload = {"prompt": prompt,
                   "before": _observation_to_wire(before),
                   "after": _observation_to_wire(after)}
        return remote_call(self.base_url, "/v1/verify", payload)["answer"]


def _observation_to_wire(obs) -> dict:
    """Observations may be bare frames or overlays; both must cross the wire."""
    from ..vision import Overlay
    if isinstance(obs, Overlay):
        return {
            "kind": "overlay",
            "frame": image_to_wire(obs.frame),
            "alpha": obs.alpha,
            "frozen": obs.frozen,
            "layers": [{"term": l.term, "color": l.color,
                        "mask": mask_to_wire(l.mask)} for l in obs.layers],
        }
    return image_to_wire(obs)


def observation_from_wire(payload):
    from ..vision import Overlay, OverlayLayer
    if isinstance(payload, dict) and payload.get("kind") == "overlay":
        layers = tuple(OverlayLayer(term=l["term"], color=l["color"],
                                    mask=mask_from_wire(l["mask"]))
                       for l in payload["layers"])
        return Overlay(frame=image_from_wire(payload["frame"]), layers=layers,
                       alpha=payload["alpha"], frozen=payload["frozen"])
    return image_from_wire(payload)


class RemoteImageSearch(_RemoteBase):
    def search(self, term, count=6):
        out = remote_get(self.base_url, "/v1/imagesearch",
                         {"term": term, "count": count})
        return [Image.open(io.BytesIO(base64.b64decode(b))).copy()
                for b in out["images"]]


class RemoteTextSnippets(_RemoteBase):
    def search(self, queries, limit=4):
        out = remote_get(self.base_url, "/v1/snippets",
                         {"q": list(queries), "limit": limit})
        return out["snippets"]


def remote_suite(base_url: str) -> BackendSuite:
    return BackendSuite(
        planner_llm=RemoteTextModel(base_url, "planner"),
        understanding_vision=RemoteTextModel(base_url, "understanding_vision"),
        understanding_text=RemoteTextModel(base_url, "understanding_text"),
        detector=RemoteDetector(base_url),
        segmenter=RemoteSegmenter(base_url),
        vos=RemoteVos(base_url),
        vla=RemoteVla(base_url),
        verifier=RemoteVerifier(base_url),
        image_search=RemoteImageSearch(base_url),
        text_snippets=RemoteTextSnippets(base_url),
    )
