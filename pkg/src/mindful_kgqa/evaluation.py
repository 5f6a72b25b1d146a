"""Scoring, aggregation and failure classification.

Answers are compared as normalized strings. Misses are sorted into eight
failure categories by a fixed rule cascade over the pipeline trace and the
graph; the first matching rule wins.
"""

from __future__ import annotations

import csv
import io
import json
import re
import unicodedata
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import ContractViolation, DatasetError
from .kg_store import KnowledgeGraph
from .pipeline.common import follow_relations
from .pipeline.types import NO_FEEDBACK_REASONS, PipelineResult, Question, Status


class FailureCategory(str, Enum):
    MISINTERPRETED_CONTEXT = "MisinterpretedContext"
    INCORRECT_RELATION_MAPPING = "IncorrectRelationMapping"
    AMBIGUITY = "Ambiguity"
    SPECIFICITY_PRECISION = "SpecificityPrecision"
    CONSTRAINT_IDENTIFICATION = "ConstraintIdentification"
    ENCODING_ISSUES = "EncodingIssues"
    INCOMPLETE_ANSWER = "IncompleteAnswer"
    LIMITED_QUERY_PROCESSING = "LimitedQueryProcessing"


REASONING_FAILURES = (
    FailureCategory.MISINTERPRETED_CONTEXT,
    FailureCategory.INCORRECT_RELATION_MAPPING,
    FailureCategory.AMBIGUITY,
    FailureCategory.SPECIFICITY_PRECISION,
    FailureCategory.CONSTRAINT_IDENTIFICATION,
)
TOPOLOGY_FAILURES = (
    FailureCategory.ENCODING_ISSUES,
    FailureCategory.INCOMPLETE_ANSWER,
    FailureCategory.LIMITED_QUERY_PROCESSING,
)


def _strip_punct(s: str) -> str:
    start, end = 0, len(s)
    while start < end and unicodedata.category(s[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(s[end - 1]).startswith("P"):
        end -= 1
    return s[start:end]


def _normalize_once(s: str) -> str:
    s = " ".join(s.casefold().split())
    return " ".join(_strip_punct(s).split())


def normalize_answer(s: str) -> str:
    """Case-fold, collapse whitespace, strip surrounding punctuation. Idempotent."""
    prev = None
    for _ in range(8):
        if s == prev:
            break
        prev, s = s, _normalize_once(s)
    return s


def hits_at_k(predicted: Sequence[str], gold: Iterable[str], k: int) -> bool:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gold_norm = {normalize_answer(g) for g in gold}
    return any(normalize_answer(p) in gold_norm for p in list(predicted)[:k])


def exact_match(predicted: Iterable[str], gold: Iterable[str]) -> bool:
    return {normalize_answer(p) for p in predicted} == {normalize_answer(g) for g in gold}


# --- failure classification -------------------------------------------------

_STOPWORDS = frozenset({"the", "of", "and", "a", "an", "in", "on", "for", "to", "de"})
_TEMPORAL = re.compile(r"^\d{3,4}(?:-\d{2}(?:-\d{2})?)?$|^\d+(?:st|nd|rd|th)?$")


def _final_step(result: PipelineResult) -> dict[str, Any] | None:
    for rec in reversed(result.trace):
        if rec.get("step") in ("align_constraints", "baseline_answer") and rec.get("relations"):
            return rec
    return None


def _candidates_at(result: PipelineResult, hop: int | None) -> dict[str, Any] | None:
    for rec in reversed(result.trace):
        if rec.get("step") == "candidate_relations" and rec.get("hop") == hop:
            return rec
    return None


def _reach(kg: KnowledgeGraph, frontier: Sequence[str], relation: str) -> set[str]:
    return {normalize_answer(o.label) for o in follow_relations(kg, frontier, [relation])}


def _has_constraints(rec: dict[str, Any]) -> bool:
    c = rec.get("constraints")
    if not c:
        return False
    if isinstance(c, dict):
        return bool(c.get("temporal") or c.get("geographic") or c.get("other")) or c.get(
            "aggregation", "None"
        ) not in ("None", None)
    return True


def _qualified_siblings(kg: KnowledgeGraph, frontier: Sequence[str], relation: str,
                        values: set[str]) -> bool:
    """Whether the sibling values are told apart by dates or ordinals."""
    for opt in follow_relations(kg, frontier, [relation]):
        if normalize_answer(opt.label) not in values:
            continue
        if _TEMPORAL.match(opt.id):
            return True
        if opt.via and any(_TEMPORAL.match(v) for _, v in opt.attributes):
            return True
    return False


def _tokens(labels: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for lab in labels:
        out.update(w for w in re.split(r"\W+", lab) if len(w) > 2 and w not in _STOPWORDS)
    return out


def classify_failure(result: PipelineResult, q: Question, kg: KnowledgeGraph) -> FailureCategory:
    """Assign a missed question to one failure category.

    Raises :class:`ContractViolation` when the prediction is an exact match.
    """
    if exact_match(result.answers, q.gold_answers):
        raise ContractViolation(f"question {q.id!r} was answered exactly; nothing to classify")
    pred = {normalize_answer(a) for a in result.answers}
    gold = {normalize_answer(g) for g in q.gold_answers}

    cvt_names = {normalize_answer(c) for c in kg.cvt_nodes}
    cvt_names |= {normalize_answer(kg.entity_labels[c]) for c in kg.cvt_nodes if c in kg.entity_labels}
    if pred & cvt_names:
        return FailureCategory.ENCODING_ISSUES

    if result.status is Status.ABSTAINED and result.reason in NO_FEEDBACK_REASONS:
        return FailureCategory.LIMITED_QUERY_PROCESSING

    if pred and (pred < gold or pred > gold):
        return FailureCategory.INCOMPLETE_ANSWER

    final = _final_step(result)
    if final is None:
        return FailureCategory.MISINTERPRETED_CONTEXT
    cands = _candidates_at(result, final.get("hop"))
    frontier = cands["frontier"] if cands else []
    chosen = final["relations"][0]
    chosen_reach = _reach(kg, frontier, chosen)

    if not (chosen_reach & gold) and cands:
        for other in cands.get("relations", []):
            if other != chosen and _reach(kg, frontier, other) & gold:
                return FailureCategory.INCORRECT_RELATION_MAPPING

    offered = {normalize_answer(lab) for lab in final.get("option_labels", [])}
    if _has_constraints(final) and (offered & gold) - pred:
        return FailureCategory.CONSTRAINT_IDENTIFICATION

    siblings = bool(pred) and pred <= chosen_reach and bool(chosen_reach & gold)
    if siblings and _qualified_siblings(kg, frontier, chosen, pred | gold):
        return FailureCategory.SPECIFICITY_PRECISION
    if siblings and _tokens(pred) & _tokens(gold & chosen_reach):
        return FailureCategory.AMBIGUITY

    return FailureCategory.MISINTERPRETED_CONTEXT


# --- aggregation ------------------------------------------------------------


@dataclass(frozen=True)
class QuestionOutcome:
    question_id: str
    predicted: list[str]
    gold: list[str]
    hit: bool
    exact: bool
    status: str
    failure: FailureCategory | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "predicted": list(self.predicted),
            "gold": list(self.gold),
            "hit": self.hit,
            "exact": self.exact,
            "status": self.status,
            "failure": self.failure.value if self.failure else None,
        }


@dataclass
class EvalReport:
    n_questions: int
    hits_at_1: float
    exact_match_rate: float
    per_question: list[QuestionOutcome]
    failure_histogram: dict[FailureCategory, int]
    k: int = 1
    hits_at_k: float = 0.0
    pipeline: str = ""
    dataset: str = ""
    errors: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pipeline": self.pipeline,
            "dataset": self.dataset,
            "n_questions": self.n_questions,
            "k": self.k,
            "hits_at_1": self.hits_at_1,
            "hits_at_k": self.hits_at_k,
            "exact_match_rate": self.exact_match_rate,
            "errors": self.errors,
            "failure_histogram": {c.value: self.failure_histogram.get(c, 0) for c in FailureCategory},
            "per_question": [row.to_dict() for row in self.per_question],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def summary_line(self) -> str:
        return (
            f"pipeline={self.pipeline} dataset={self.dataset} hits@1={self.hits_at_1:.4f} "
            f"em={self.exact_match_rate:.4f} n={self.n_questions}"
        )


def evaluate(
    results: Sequence[PipelineResult],
    questions: Sequence[Question],
    k: int = 1,
    kg: KnowledgeGraph | None = None,
    pipeline: str = "",
    dataset: str = "",
) -> EvalReport:
    """Score ``results`` against the gold answers of ``questions``.

    Every Hits@k miss is classified when ``kg`` is given. Rows are ordered by
    question id so the report does not depend on result order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    by_id = {q.id: q for q in questions}
    seen: set[str] = set()
    rows: list[QuestionOutcome] = []
    histogram = {c: 0 for c in FailureCategory}
    hits1 = hitsk = exact = errors = 0
    for res in results:
        q = by_id.get(res.question_id)
        if q is None:
            raise DatasetError(f"result for unknown question id {res.question_id!r}")
        if res.question_id in seen:
            raise DatasetError(f"duplicate result for question id {res.question_id!r}")
        seen.add(res.question_id)
        h1 = hits_at_k(res.answers, q.gold_answers, 1)
        hk = hits_at_k(res.answers, q.gold_answers, k)
        em = exact_match(res.answers, q.gold_answers)
        hits1 += h1
        hitsk += hk
        exact += em
        errors += res.status is Status.ERROR
        failure = None
        if not hk and kg is not None:
            try:
                failure = classify_failure(res, q, kg)
            except ContractViolation:
                failure = None
            if failure is not None:
                histogram[failure] += 1
        rows.append(QuestionOutcome(res.question_id, list(res.answers), list(q.gold_answers),
                                    hk, em, res.status.value, failure))
    rows.sort(key=lambda r: r.question_id)
    n = len(rows)
    return EvalReport(
        n_questions=n,
        hits_at_1=hits1 / n if n else 0.0,
        exact_match_rate=exact / n if n else 0.0,
        per_question=rows,
        failure_histogram=histogram,
        k=k,
        hits_at_k=hitsk / n if n else 0.0,
        pipeline=pipeline,
        dataset=dataset,
        errors=errors,
    )


def plot_rows_csv(reports: Iterable[EvalReport]) -> str:
    """(pipeline, dataset, hits_at_1) rows for a grouped bar chart."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pipeline", "dataset", "hits_at_1"])
    for r in reports:
        writer.writerow([r.pipeline, r.dataset, f"{r.hits_at_1:.4f}"])
    return buf.getvalue()


@dataclass(frozen=True)
class Comparison:
    rows: list[tuple[str, bool, bool, str]]
    delta: float
    wins: int
    losses: int
    ties: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["question_id", "mindful_hit", "baseline_hit", "failure_category"])
        for qid, m, b, cat in self.rows:
            writer.writerow([qid, int(m), int(b), cat])
        return buf.getvalue()


def compare_reports(mindful: dict[str, Any], baseline: dict[str, Any]) -> Comparison:
    """Per-question win/loss/tie of two report dicts over the same question set.

    The failure column carries the baseline's category when it missed,
    otherwise the mindful run's.
    """
    m_rows = {r["question_id"]: r for r in mindful["per_question"]}
    b_rows = {r["question_id"]: r for r in baseline["per_question"]}
    if set(m_rows) != set(b_rows):
        only_m = sorted(set(m_rows) - set(b_rows))
        only_b = sorted(set(b_rows) - set(m_rows))
        raise DatasetError(f"reports cover different questions (only first: {only_m}, only second: {only_b})")
    rows = []
    wins = losses = ties = 0
    for qid in sorted(m_rows):
        m_hit, b_hit = bool(m_rows[qid]["hit"]), bool(b_rows[qid]["hit"])
        cat = b_rows[qid].get("failure") or m_rows[qid].get("failure") or ""
        rows.append((qid, m_hit, b_hit, cat))
        if m_hit and not b_hit:
            wins += 1
        elif b_hit and not m_hit:
            losses += 1
        else:
            ties += 1
    n = len(rows)
    delta = (sum(r[1] for r in rows) - sum(r[2] for r in rows)) / n if n else 0.0
    return Comparison(rows, delta, wins, losses, ties)
