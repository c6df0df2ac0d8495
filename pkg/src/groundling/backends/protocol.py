"""Versioned wire protocol shared by stubs, remote clients, and adapters.

Every request is a JSON envelope ``{"version", "endpoint", "id", "payload"}``
and every response echoes the request id.  Images travel base64-encoded
(raster) or as structured records (symbolic renders); masks are cell lists.
"""

from __future__ import annotations

import base64
import io
import json
import uuid

from PIL import Image

from ..simworld.core import SymbolicImage, image_from_payload, image_to_payload

VERSION = 1

ENDPOINTS = (
    "/v1/generate", "/v1/detect", "/v1/segment", "/v1/vos/init", "/v1/vos/step",
    "/v1/act", "/v1/verify", "/v1/imagesearch", "/v1/snippets", "/v1/health",
)


class WireError(ValueError):
    pass


def new_request_id() -> str:
    return uuid.uuid4().hex


def encode_request(endpoint: str, payload: dict, request_id: str | None = None) -> str:
    if endpoint not in ENDPOINTS:
        raise WireError(f"unknown endpoint {endpoint!r}")
    envelope = {
        "version": VERSION,
        "endpoint": endpoint,
        "id": request_id or new_request_id(),
        "payload": payload,
    }
    return json.dumps(envelope, sort_keys=True)


def decode_request(raw: str | bytes) -> dict:
    env = _load(raw)
    for key in ("version", "endpoint", "id", "payload"):
        if key not in env:
            raise WireError(f"request missing {key!r}")
    if env["version"] != VERSION:
        raise WireError(f"unsupported version {env['version']!r}")
    if env["endpoint"] not in ENDPOINTS:
        raise WireError(f"unknown endpoint {env['endpoint']!r}")
    return env


def encode_response(request_id: str, payload: dict | None = None, *,
                    error: dict | None = None) -> str:
    envelope: dict = {"version": VERSION, "id": request_id}
    if error is not None:
        envelope["ok"] = False
        envelope["error"] = error
    else:
        envelope["ok"] = True
        envelope["payload"] = payload if payload is not None else {}
    return json.dumps(envelope, sort_keys=True)


def decode_response(raw: str | bytes) -> dict:
    env = _load(raw)
    for key in ("version", "id", "ok"):
        if key not in env:
            raise WireError(f"response missing {key!r}")
    if env["ok"] and "payload" not in env:
        raise WireError("ok response missing payload")
    if not env["ok"] and "error" not in env:
        raise WireError("error response missing error")
    return env


def _load(raw) -> dict:
    try:
        env = json.loads(raw)
    except (TypeError, ValueError) as exc:
        raise WireError(f"not valid JSON: {exc}")
    if not isinstance(env, dict):
        raise WireError("envelope must be an object")
    return env


# --- payload helpers --------------------------------------------------------

def image_to_wire(image) -> dict | None:
    if image is None:
        return None
    if isinstance(image, SymbolicImage):
        return image_to_payload(image)
    if isinstance(image, Image.Image):
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return {"kind": "raster", "png_b64": base64.b64encode(buf.getvalue()).decode("ascii")}
    if isinstance(image, dict):  # already-structured evidence (e.g. crops)
        return image
    raise WireError(f"cannot encode image of type {type(image).__name__}")


def image_from_wire(payload) -> object:
    if payload is None:
        return None
    if payload.get("kind") == "symbolic":
        return image_from_payload(payload)
    if payload.get("kind") == "raster":
        return Image.open(io.BytesIO(base64.b64decode(payload["png_b64"]))).copy()
    return payload


def mask_to_wire(mask) -> list:
    return sorted([list(c) for c in mask])


def mask_from_wire(cells) -> frozenset:
    return frozenset(tuple(c) for c in cells)
