from .baseline import answer_question_baseline, serialize_candidates
from .common import Option, OracleSession, candidate_relations, follow_relations
from .mindful import (
    align_constraints,
    answer_question,
    extract_constraints,
    filter_rank_relations,
    identify_context,
    identify_elements,
    identify_intent,
    max_oracle_calls,
    validate_answer,
)
from .types import (
    NO_FEEDBACK_REASONS,
    Aggregation,
    ConstraintSet,
    MindState,
    PipelineConfig,
    PipelineResult,
    Question,
    RankedRelation,
    RankedRelations,
    Status,
)

PIPELINES = {
    "mindful": answer_question,
    "baseline": answer_question_baseline,
}

__all__ = [
    "NO_FEEDBACK_REASONS",
    "PIPELINES",
    "Aggregation",
    "ConstraintSet",
    "MindState",
    "Option",
    "OracleSession",
    "PipelineConfig",
    "PipelineResult",
    "Question",
    "RankedRelation",
    "RankedRelations",
    "Status",
    "align_constraints",
    "answer_question",
    "answer_question_baseline",
    "candidate_relations",
    "extract_constraints",
    "filter_rank_relations",
    "follow_relations",
    "identify_context",
    "identify_elements",
    "identify_intent",
    "max_oracle_calls",
    "serialize_candidates",
    "validate_answer",
]
