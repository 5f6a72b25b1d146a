"""Oracle task kinds and canonical payload serialization."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping, Set
from dataclasses import dataclass
from enum import Enum
from typing import Any


class TaskKind(str, Enum):
    IDENTIFY_ELEMENTS = "IdentifyElements"
    IDENTIFY_INTENT = "IdentifyIntent"
    IDENTIFY_CONTEXT = "IdentifyContext"
    RANK_RELATIONS = "RankRelations"
    ALIGN_CONSTRAINTS = "AlignConstraints"
    VALIDATE_ANSWER = "ValidateAnswer"
    BASELINE_SELECT = "BaselineSelect"
    BASELINE_ANSWER = "BaselineAnswer"

    def __str__(self) -> str:
        return self.value


def _normalize(value: Any) -> Any:
    if isinstance(value, str):
        return " ".join(value.split())
    if isinstance(value, Mapping):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (Set, frozenset)):
        return sorted(_normalize(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if value is None or isinstance(value, (bool, int, float)):
        return value
    raise TypeError(f"cannot serialize {type(value).__name__} into a task payload")


def canonical_payload(inputs: Mapping[str, Any]) -> str:
    """Serialize task inputs so that equal inputs give byte-identical text.

    Keys are sorted, string whitespace is collapsed and sets become sorted
    lists. Lists keep their order because order carries meaning (rankings).
    """
    return json.dumps(_normalize(inputs), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def payload_digest(payload: str) -> str:
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class OracleTask:
    kind: TaskKind
    payload: str
    question_id: str = ""

    @classmethod
    def build(cls, kind: TaskKind | str, inputs: Mapping[str, Any], question_id: str = "") -> OracleTask:
        return cls(TaskKind(kind), canonical_payload(inputs), question_id)

    @property
    def digest(self) -> str:
        return payload_digest(self.payload)

    @property
    def inputs(self) -> dict[str, Any]:
        return json.loads(self.payload)


@dataclass(frozen=True)
class OracleResponse:
    text: str
    parsed_ok: bool = False
