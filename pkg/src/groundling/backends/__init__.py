"""Capability handles for every external model the pipeline touches.

A :class:`BackendSuite` bundles ten handles; each is satisfiable by an
in-process stub (offline, deterministic) or by a remote client speaking the
wire protocol.  Callers only ever see the handle methods, so the pipeline is
agnostic to which side is plugged in.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

CAPABILITIES = (
    "planner_llm", "understanding_vision", "understanding_text", "detector",
    "segmenter", "vos", "vla", "verifier", "image_search", "text_snippets",
)


class BackendFailure(RuntimeError):
    """A backend was unreachable or returned a transport-level error."""


class ProtocolError(RuntimeError):
    """A response violated the wire contract (bad id, bad schema)."""


@dataclass
class BackendSuite:
    planner_llm: object
    understanding_vision: object
    understanding_text: object
    detector: object
    segmenter: object
    vos: object
    vla: object
    verifier: object
    image_search: object
    text_snippets: object

    def handles(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def health_check(self):
        """Probe every handle; raises BackendFailure on the first dead one."""
        for name, handle in self.handles().items():
            probe = getattr(handle, "health", None)
            if probe is not None and not probe():
                raise BackendFailure(f"backend {name} failed its health probe")


class CallCounter:
    """Transparent per-capability call counting around a suite."""

    def __init__(self, suite: BackendSuite):
        self.counts: dict[str, int] = {name: 0 for name in CAPABILITIES}
        self._suite = suite
        self.suite = BackendSuite(**{
            name: _CountedHandle(handle, name, self.counts)
            for name, handle in suite.handles().items()
        })

    def reset(self):
        for name in self.counts:
            self.counts[name] = 0

    def snapshot(self) -> dict[str, int]:
        return dict(self.counts)


class _CountedHandle:
    def __init__(self, inner, name, counts):
        self._inner = inner
        self._name = name
        self._counts = counts

    def __getattr__(self, attr):
        value = getattr(self._inner, attr)
        if not callable(value) or attr == "health":
            return value

        def counted(*args, **kwargs):
            self._counts[self._name] += 1
            return value(*args, **kwargs)

        return counted
