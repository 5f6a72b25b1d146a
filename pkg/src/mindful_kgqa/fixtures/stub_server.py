"""Local HTTP server that imitates an OpenAI-compatible chat-completion endpoint.

It reads the task kind from the prompt's ``# Task:`` header and the task
input from the trailing fenced JSON block, then answers with a responder
(by default the fixture scripts). Used to exercise the live backend and the
record/replay round trip without network access.
"""

from __future__ import annotations

import json
import re
import threading
from collections.abc import Callable
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from ..oracle import TaskKind
from .authoring import respond as scripted_respond

_TASK = re.compile(r"^# Task: (\w+)", re.MULTILINE)
_JSON_BLOCK = re.compile(r"```json\n(.*?)\n```", re.DOTALL)

Responder = Callable[[TaskKind, dict[str, Any]], str]


def decode_prompt(prompt: str) -> tuple[TaskKind, dict[str, Any]]:
    kind = _TASK.search(prompt)
    blocks = _JSON_BLOCK.findall(prompt)
    if not kind or not blocks:
        raise ValueError("prompt has no task header or input block")
    return TaskKind(kind.group(1)), json.loads(blocks[-1])


class StubChatServer:
    """Threaded stub server; use as a context manager.

    ``fail_first`` makes the first N requests return HTTP 503, to drive the
    client's retry path.
    """

    def __init__(self, responder: Responder = scripted_respond, fail_first: int = 0,
                 api_key: str | None = None) -> None:
        self.responder = responder
        self.fail_first = fail_first
        self.api_key = api_key
        self.requests: list[dict[str, Any]] = []
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), self._handler_class())
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/v1"

    def _handler_class(self) -> type[BaseHTTPRequestHandler]:
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, format: str, *args: Any) -> None:  # noqa: A002
                pass

            def _reply(self, status: int, body: dict[str, Any]) -> None:
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self) -> None:  # noqa: N802
                if not self.path.endswith("/chat/completions"):
                    self._reply(404, {"error": "not found"})
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with server._lock:
                    server.requests.append(body)
                    failing = server.fail_first > 0
                    if failing:
                        server.fail_first -= 1
                if failing:
                    self._reply(503, {"error": "temporarily unavailable"})
                    return
                if server.api_key and self.headers.get("Authorization") != f"Bearer {server.api_key}":
                    self._reply(401, {"error": "bad credential"})
                    return
                prompt = next(
                    (m["content"] for m in reversed(body.get("messages", [])) if m.get("role") == "user"),
                    "",
                )
                try:
                    kind, inputs = decode_prompt(prompt)
                    text = server.responder(kind, inputs)
                except (ValueError, KeyError) as exc:
                    text = f"I cannot help with that ({type(exc).__name__})."
                self._reply(200, {
                    "id": f"stub-{len(server.requests)}",
                    "object": "chat.completion",
                    "model": body.get("model", ""),
                    "choices": [{"index": 0, "finish_reason": "stop",
                                 "message": {"role": "assistant", "content": text}}],
                })

        return Handler

    def start(self) -> StubChatServer:
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> StubChatServer:
        return self.start()

    def __exit__(self, *exc: object) -> None:
        self.stop()
