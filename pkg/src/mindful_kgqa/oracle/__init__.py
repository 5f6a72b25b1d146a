"""Language-model access behind a uniform task interface."""

from .backends import (
    API_KEY_ENV,
    LiveBackend,
    OracleBackend,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    complete,
)
from .cassette import Cassette, CassetteEntry, record
from .parsing import SCHEMAS, parse_structured
from .prompts import PromptLibrary
from .tasks import OracleResponse, OracleTask, TaskKind, canonical_payload, payload_digest

__all__ = [
    "API_KEY_ENV",
    "Cassette",
    "CassetteEntry",
    "LiveBackend",
    "OracleBackend",
    "OracleResponse",
    "OracleTask",
    "PromptLibrary",
    "RecordingBackend",
    "ReplayBackend",
    "SCHEMAS",
    "ScriptedBackend",
    "TaskKind",
    "canonical_payload",
    "complete",
    "parse_structured",
    "payload_digest",
    "record",
]
