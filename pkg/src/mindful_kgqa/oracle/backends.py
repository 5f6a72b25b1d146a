"""Oracle backends: live HTTP, cassette replay, recording and scripted."""

from __future__ import annotations

import logging
import os
import threading
import time
from collections.abc import Callable
from typing import Protocol

import requests

from ..errors import ConfigurationError, TransportError
from .cassette import Cassette
from .prompts import PromptLibrary
from .tasks import OracleResponse, OracleTask

logger = logging.getLogger(__name__)

API_KEY_ENV = "ORACLE_API_KEY"
SYSTEM_MESSAGE = (
    "You answer questions about a knowledge graph step by step. "
    "Always put the requested fields inside a fenced block of key: value lines."
)
_TRANSIENT_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class OracleBackend(Protocol):
    def complete(self, task: OracleTask) -> OracleResponse: ...


class ReplayBackend:
    """Serves responses from a cassette; read-only and safe to share."""

    def __init__(self, cassette: Cassette) -> None:
        self.cassette = cassette

    def complete(self, task: OracleTask) -> OracleResponse:
        return self.cassette.lookup(task)


class ScriptedBackend:
    """Answers with a Python callable, for tests and fixture authoring."""

    def __init__(self, respond: Callable[[OracleTask], str]) -> None:
        self.respond = respond
        self.calls: list[OracleTask] = []
        self._lock = threading.Lock()

    def complete(self, task: OracleTask) -> OracleResponse:
        with self._lock:
            self.calls.append(task)
        return OracleResponse(text=self.respond(task))


class RecordingBackend:
    """Forwards to ``inner`` and writes every exchange into ``cassette``."""

    def __init__(self, inner: OracleBackend, cassette: Cassette | None = None) -> None:
        self.inner = inner
        self.cassette = cassette if cassette is not None else Cassette()

    def complete(self, task: OracleTask) -> OracleResponse:
        response = self.inner.complete(task)
        self.cassette.put(task, response)
        return response


class LiveBackend:
    """OpenAI-compatible chat-completion client.

    Transient failures (connection errors, timeouts, 429 and 5xx) are retried
    ``max_retries`` times with exponential backoff starting at
    ``backoff_base`` seconds. At most ``max_in_flight`` requests run at once.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        prompts: PromptLibrary | None = None,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if not endpoint:
            raise ConfigurationError("live backend needs an endpoint URL")
        if not model:
            raise ConfigurationError("live backend needs a model name")
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not key:
            raise ConfigurationError(f"live backend needs the {API_KEY_ENV} environment variable")
        if max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be >= 1")
        endpoint = endpoint.rstrip("/")
        if not endpoint.endswith("/chat/completions"):
            endpoint += "/chat/completions"
        self.url = endpoint
        self.model = model
        self._key = key
        self.prompts = prompts or PromptLibrary.from_directory()
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._sleep = sleep

    def _request_body(self, task: OracleTask) -> dict:
        return {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": SYSTEM_MESSAGE},
                {"role": "user", "content": self.prompts.render(task)},
            ],
        }

    def complete(self, task: OracleTask) -> OracleResponse:
        body = self._request_body(task)
        headers = {"Authorization": f"Bearer {self._key}", "Content-Type": "application/json"}
        last_error = ""
        for attempt in range(self.max_retries + 1):
            if attempt:
                delay = self.backoff_base * 2 ** (attempt - 1)
                logger.warning("retrying %s in %.1fs after: %s", task.kind.value, delay, last_error)
                self._sleep(delay)
            try:
                with self._slots:
                    resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code in _TRANSIENT_STATUS:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code} from {self.url}: {resp.text[:200]}")
            try:
                text = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"malformed chat-completion response: {exc}") from exc
            return OracleResponse(text=text if isinstance(text, str) else "")
        raise TransportError(
            f"{task.kind.value} failed after {self.max_retries + 1} attempts: {last_error}"
        )


def complete(task: OracleTask, backend: OracleBackend) -> OracleResponse:
    return backend.complete(task)
