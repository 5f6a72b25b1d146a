"""Data carried through the question-answering pipelines."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any


class Status(str, Enum):
    ANSWERED = "Answered"
    ABSTAINED = "Abstained"
    ERROR = "Error"


class Aggregation(str, Enum):
    NONE = "None"
    ALL = "All"
    MOST = "Most"
    FIRST = "First"
    COUNT = "Count"

    @classmethod
    def parse(cls, word: str | None) -> Aggregation:
        if not word:
            return cls.NONE
        key = word.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        return cls.NONE


# Abstention reasons that mean the model wanted more information and got none.
NO_FEEDBACK_REASONS = frozenset({"hop-limit-reached", "no-candidate-relations"})


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    topic_entities: tuple[str, ...] = ()
    gold_answers: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError(f"question {self.id!r} has empty text")
        object.__setattr__(self, "topic_entities", tuple(self.topic_entities))
        object.__setattr__(self, "gold_answers", tuple(self.gold_answers))


@dataclass(frozen=True)
class ConstraintSet:
    temporal: str | None = None
    geographic: str | None = None
    aggregation: Aggregation = Aggregation.NONE
    other: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (self.temporal or self.geographic or self.other) and self.aggregation is Aggregation.NONE

    def to_dict(self) -> dict[str, Any]:
        return {
            "temporal": self.temporal,
            "geographic": self.geographic,
            "aggregation": self.aggregation.value,
            "other": list(self.other),
        }


@dataclass
class MindState:
    key_entities: list[str] = field(default_factory=list)
    relevant_tokens: list[str] = field(default_factory=list)
    intent: str = ""
    context_aspects: list[str] = field(default_factory=list)
    constraints: ConstraintSet = field(default_factory=ConstraintSet)


@dataclass(frozen=True)
class RankedRelation:
    relation: str
    score: float
    rationale: str = ""


@dataclass(frozen=True)
class RankedRelations:
    entries: tuple[RankedRelation, ...]
    k: int
    # Ranked relations beyond the top k, best first; consulted on validation retries.
    reserve: tuple[RankedRelation, ...] = ()

    @property
    def relations(self) -> list[str]:
        return [e.relation for e in self.entries]

    @property
    def top(self) -> str:
        return self.entries[0].relation


@dataclass(frozen=True)
class PipelineConfig:
    max_hops: int = 3
    k: int = 3
    max_validation_iters: int = 2
    fuse_analysis: bool = False
    max_prompt_triples: int = 64

    def __post_init__(self) -> None:
        if self.max_hops < 1:
            raise ValueError(f"max_hops must be >= 1, got {self.max_hops}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_validation_iters < 0:
            raise ValueError("max_validation_iters must be >= 0")
        if self.max_prompt_triples < 1:
            raise ValueError("max_prompt_triples must be >= 1")


@dataclass
class PipelineResult:
    question_id: str
    answers: list[str]
    trace: list[dict[str, Any]]
    hops_used: int
    validation_iterations: int
    status: Status
    reason: str | None = None
    flags: list[str] = field(default_factory=list)
    pipeline: str = "mindful"

    def __post_init__(self) -> None:
        if (self.status is Status.ANSWERED) != bool(self.answers):
            raise ValueError("answers must be non-empty exactly when status is Answered")

    @property
    def oracle_calls(self) -> list[dict[str, Any]]:
        return [r for r in self.trace if "digest" in r]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["status"] = self.status.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PipelineResult:
        return cls(
            question_id=d["question_id"],
            answers=list(d["answers"]),
            trace=list(d.get("trace", [])),
            hops_used=int(d.get("hops_used", 0)),
            validation_iterations=int(d.get("validation_iterations", 0)),
            status=Status(d["status"]),
            reason=d.get("reason"),
            flags=list(d.get("flags", [])),
            pipeline=d.get("pipeline", "mindful"),
        )
