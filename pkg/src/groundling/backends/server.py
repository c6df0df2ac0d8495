"""HTTP server exposing a local backend suite over the wire protocol.

Used to exercise remote clients against the stubs and as the reference
implementation adapters are tested against.  VOS tracking state stays
server-side behind opaque session ids.
"""

from __future__ import annotations

import base64
import io
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import BackendSuite
from .protocol import (
    WireError, decode_request, encode_response, image_from_wire, mask_from_wire,
    mask_to_wire, new_request_id,
)
from .remote import observation_from_wire


def _messages_from_wire(messages):
    out = []
    for msg in messages:
        parts = []
        for part in msg.get("content", []):
            if part.get("type") == "image":
                parts.append({"type": "image",
                              "image": image_from_wire(part["image"])})
            else:
                parts.append(part)
        out.append({"role": msg["role"], "content": parts})
    return out


class SuiteServer:
    """Dispatches decoded wire payloads onto a :class:`BackendSuite`."""

    def __init__(self, suite: BackendSuite):
        self.suite = suite
        self._vos_sessions: dict[str, object] = {}
        self._lock = threading.Lock()

    # POST endpoints -----------------------------------------------------

    def handle(self, endpoint: str, payload: dict) -> dict:
        handler = {
            "/v1/generate": self._generate,
            "/v1/detect": self._detect,
            "/v1/segment": self._segment,
            "/v1/vos/init": self._vos_init,
            "/v1/vos/step": self._vos_step,
            "/v1/act": self._act,
            "/v1/verify": self._verify,
        }.get(endpoint)
        if handler is None:
            raise WireError(f"endpoint {endpoint} does not accept POST")
        return handler(payload)

    def _generate(self, payload):
        model = {
            "planner": self.suite.planner_llm,
            "understanding_vision": self.suite.understanding_vision,
            "understanding_text": self.suite.understanding_text,
        }.get(payload.get("model"))
        if model is None:
            raise WireError(f"unknown model {payload.get('model')!r}")
        if "prompt" in payload:
            return {"text": model.generate(payload["prompt"])}
        return {"text": model.generate(_messages_from_wire(payload["messages"]))}

    def _detect(self, payload):
        boxes = self.suite.detector.detect(
            payload["term"], payload.get("keywords", []),
            image_from_wire(payload["image"]))
        return {"boxes": [{"x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1,
                           "score": b.score} for b in boxes]}

    def _segment(self, payload):
        from ..vision import BBox
        box = BBox(*payload["box"], score=payload.get("score", 1.0))
        mask = self.suite.segmenter.segment(image_from_wire(payload["image"]), box)
        return {"mask": mask_to_wire(mask)}

    def _vos_init(self, payload):
        frame = image_from_wire(payload["frame"])
        masks = {t: mask_from_wire(m) for t, m in payload["masks"].items()}
        state = self.suite.vos.init(frame, masks)
        session = uuid.uuid4().hex
        with self._lock:
            self._vos_sessions[session] = state
        return {"session": session}

    def _vos_step(self, payload):
        with self._lock:
            state = self._vos_sessions.get(payload["session"])
        if state is None:
            raise WireError(f"unknown VOS session {payload['session']!r}")
        masks = self.suite.vos.step(state, image_from_wire(payload["frame"]))
        return {"masks": {t: mask_to_wire(m) for t, m in masks.items()}}

    def _act(self, payload):
        obs = observation_from_wire(payload["image"])
        return {"action": list(self.suite.vla.act(payload["prompt"], obs))}

    def _verify(self, payload):
        answer = self.suite.verifier.verify(
            payload["prompt"],
            observation_from_wire(payload["before"]),
            observation_from_wire(payload["after"]))
        return {"answer": answer}

    # GET endpoints ------------------------------------------------------

    def handle_get(self, endpoint: str, params: dict) -> dict:
        if endpoint == "/v1/health":
            try:
                self.suite.health_check()
            except Exception as exc:
                return {"status": "degraded", "detail": str(exc)}
            return {"status": "ok"}
        if endpoint == "/v1/imagesearch":
            term = params.get("term", [""])[0]
            count = int(params.get("count", ["6"])[0])
            images = self.suite.image_search.search(term, count)
            encoded = []
            for img in images:
                buf = io.BytesIO()
                img.save(buf, format="PNG")
                encoded.append(base64.b64encode(buf.getvalue()).decode("ascii"))
            return {"images": encoded}
        if endpoint == "/v1/snippets":
            queries = params.get("q", [])
            limit = int(params.get("limit", ["4"])[0])
            return {"snippets": self.suite.text_snippets.search(queries, limit)}
        raise WireError(f"endpoint {endpoint} does not accept GET")


class _Handler(BaseHTTPRequestHandler):
    dispatcher: SuiteServer = None  # set by serve()

    def log_message(self, *args):  # quiet test output
        pass

    def _send(self, code: int, body: str):
        data = body.encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        request_id = new_request_id()
        try:
            env = decode_request(raw)
            request_id = env["id"]
            if env["endpoint"] != urlparse(self.path).path:
                raise WireError("envelope endpoint does not match URL path")
            payload = self.dispatcher.handle(env["endpoint"], env["payload"])
        except WireError as exc:
            self._send(400, encode_response(
                request_id, error={"type": "wire", "message": str(exc)}))
            return
        except Exception as exc:
            self._send(500, encode_response(
                request_id, error={"type": "backend", "message": str(exc)}))
            return
        self._send(200, encode_response(request_id, payload))

    def do_GET(self):
        parsed = urlparse(self.path)
        params = parse_qs(parsed.query)
        request_id = params.get("id", [new_request_id()])[0]
        try:
            payload = self.dispatcher.handle_get(parsed.path, params)
        except WireError as exc:
            self._send(400, encode_response(
                request_id, error={"type": "wire", "message": str(exc)}))
            return
        except Exception as exc:
            self._send(500, encode_response(
                request_id, error={"type": "backend", "message": str(exc)}))
            return
        self._send(200, encode_response(request_id, payload))


def serve(suite: BackendSuite, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Start serving ``suite``; returns the bound server (``server.server_address``
    carries the chosen port).  Call ``shutdown()`` to stop."""
    dispatcher = SuiteServer(suite)
    handler = type("BoundHandler", (_Handler,), {"dispatcher": dispatcher})
    server = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server._serving_thread = thread
    return server
