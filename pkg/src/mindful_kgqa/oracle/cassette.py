"""Persisted (task kind, payload digest) -> response recordings."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from ..errors import CassetteMissError, ConfigurationError
from .tasks import OracleResponse, OracleTask, TaskKind, payload_digest


@dataclass(frozen=True)
class CassetteEntry:
    kind: str
    digest: str
    payload: str
    response_text: str


class Cassette:
    """Exact-match store of recorded oracle responses.

    Lookups never fall back: an unknown ``(kind, digest)`` raises
    :class:`CassetteMissError`. Writes are guarded by a lock so a recording
    run may complete tasks from several threads.
    """

    def __init__(self, entries: dict[tuple[str, str], CassetteEntry] | None = None) -> None:
        self._entries: dict[tuple[str, str], CassetteEntry] = dict(entries or {})
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, task: object) -> bool:
        return isinstance(task, OracleTask) and (task.kind.value, task.digest) in self._entries

    def entries(self) -> list[CassetteEntry]:
        return [self._entries[k] for k in sorted(self._entries)]

    def lookup(self, task: OracleTask) -> OracleResponse:
        key = (task.kind.value, task.digest)
        try:
            entry = self._entries[key]
        except KeyError:
            raise CassetteMissError(task.kind.value, task.digest) from None
        return OracleResponse(text=entry.response_text)

    def put(self, task: OracleTask, response: OracleResponse) -> None:
        entry = CassetteEntry(task.kind.value, task.digest, task.payload, response.text)
        with self._lock:
            self._entries[(entry.kind, entry.digest)] = entry

    def merge(self, other: Cassette) -> None:
        with self._lock:
            self._entries.update(other._entries)

    def to_json(self) -> str:
        rows = [
            {"kind": e.kind, "digest": e.digest, "payload": e.payload, "response_text": e.response_text}
            for e in self.entries()
        ]
        return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Cassette:
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"cassette is not valid JSON: {exc}") from exc
        if not isinstance(rows, list):
            raise ConfigurationError("cassette must be a JSON array")
        entries = {}
        for i, row in enumerate(rows):
            try:
                kind = TaskKind(row["kind"]).value
                payload = row["payload"]
                text_ = row["response_text"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"cassette entry {i} is malformed: {exc}") from exc
            digest = payload_digest(payload)
            if row.get("digest", digest) != digest:
                raise ConfigurationError(f"cassette entry {i}: digest does not match payload")
            entries[(kind, digest)] = CassetteEntry(kind, digest, payload, text_)
        return cls(entries)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Cassette:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read cassette {path}: {exc}") from exc
        return cls.from_json(text)


def record(task: OracleTask, response: OracleResponse, cassette: Cassette) -> Cassette:
    """Store ``response`` under ``task``'s key, replacing any earlier recording."""
    cassette.put(task, response)
    return cassette
