"""Question answering over a knowledge graph with an LLM oracle that
analyses the question before exploring the graph.

The public surface is re-exported here; see the subpackages for detail.
"""

from .evaluation import EvalReport, FailureCategory, classify_failure, evaluate, exact_match, hits_at_k
from .kg_store import KnowledgeGraph, SubGraph, Triple, extract_subgraph, load_graph, load_triples, one_hop_relations
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    Question,
    Status,
    answer_question,
    answer_question_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "FailureCategory",
    "KnowledgeGraph",
    "PipelineConfig",
    "PipelineResult",
    "Question",
    "Status",
    "SubGraph",
    "Triple",
    "answer_question",
    "answer_question_baseline",
    "classify_failure",
    "evaluate",
    "exact_match",
    "extract_subgraph",
    "hits_at_k",
    "load_graph",
    "load_triples",
    "one_hop_relations",
]
