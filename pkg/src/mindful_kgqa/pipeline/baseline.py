"""Semantic-matching comparison pipeline.

The topic entities seed a subgraph. At each hop the model sees the candidate
relations with a few sample values, picks one, and then either answers from
the values it reaches or continues from some of them. There is no intent,
context, constraint or validation step.
"""

from __future__ import annotations

from collections.abc import Sequence

from ..errors import OracleParseError
from ..kg_store import KnowledgeGraph, extract_subgraph, subgraph_view
from ..oracle import OracleBackend, TaskKind
from .common import (
    Abstain,
    OracleSession,
    as_list,
    as_text,
    candidate_relations,
    entity_labels,
    follow_relations,
    render_answers,
    resolve_key_entities,
    select_options,
)
from .types import PipelineConfig, PipelineResult, Question, Status

SAMPLES_PER_RELATION = 3


def serialize_candidates(
    frontier: Sequence[str],
    relations: Sequence[str],
    kg: KnowledgeGraph,
    max_prompt_triples: int = 64,
) -> str:
    """One line per relation with sample values, lexicographic, at most ``max_prompt_triples`` lines."""
    if not relations:
        raise ValueError("serialize_candidates needs at least one relation")
    lines = []
    for relation in sorted(set(relations))[:max_prompt_triples]:
        opts = follow_relations(kg, frontier, [relation])
        samples = [o.label for o in opts[:SAMPLES_PER_RELATION]]
        more = len(opts) - len(samples)
        tail = "; ".join(samples) + (f"; ... (+{more})" if more > 0 else "")
        lines.append(f"{relation}: {tail}" if tail else relation)
    return "\n".join(lines)


def answer_question_baseline(
    kg: KnowledgeGraph,
    q: Question,
    config: PipelineConfig,
    oracle: OracleBackend,
) -> PipelineResult:
    if config.max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    session = OracleSession(oracle, q.id)
    hops_used = 0

    def result(status: Status, answers: list[str] | None = None, reason: str | None = None) -> PipelineResult:
        return PipelineResult(
            question_id=q.id,
            answers=answers or [],
            trace=session.trace,
            hops_used=hops_used,
            validation_iterations=0,
            status=status,
            reason=reason,
            pipeline="baseline",
        )

    step = "identify_elements"
    try:
        if q.topic_entities:
            keys = list(q.topic_entities)
        else:
            fields = session.ask("identify_elements", TaskKind.IDENTIFY_ELEMENTS,
                                 {"question": q.text}, "elements")
            keys = resolve_key_entities(kg, as_list(fields.get("entities")))
        if not keys:
            raise Abstain("no-topic-entity")

        sub = extract_subgraph(kg, keys, config.max_hops)
        view = subgraph_view(kg, sub)
        session.note("extract_subgraph", seeds=keys, hops=config.max_hops, triples=len(sub.triples))

        frontier = list(keys)
        for hop in range(1, config.max_hops + 1):
            hops_used = hop
            step = "candidate_relations"
            candidates = candidate_relations(view, frontier)
            session.note("candidate_relations", hop=hop, frontier=list(frontier), relations=list(candidates))
            if not candidates:
                raise Abstain("no-candidate-relations")

            step = "baseline_select"
            if len(candidates) == 1:
                relation = candidates[0]
                session.note("baseline_select", hop=hop, forced=True, relation=relation)
            else:
                inputs = {
                    "question": q.text,
                    "frontier": entity_labels(view, frontier),
                    "candidates": serialize_candidates(frontier, candidates, view, config.max_prompt_triples),
                }
                fields = session.ask("baseline_select", TaskKind.BASELINE_SELECT, inputs,
                                     "baseline_select", hop=hop)
                picked = as_text(fields.get("relation")).strip().strip("`'\" ")
                if picked in candidates:
                    relation = picked
                    session.note("baseline_select", hop=hop, relation=relation)
                else:
                    relation = candidates[0]
                    session.note("baseline_select", hop=hop, relation=relation, fallback=True, dropped=[picked])

            step = "baseline_answer"
            options = follow_relations(view, frontier, [relation], cap=config.max_prompt_triples)
            if not options:
                raise Abstain("no-values-reached")
            inputs = {
                "question": q.text,
                "relation": relation,
                "options": [o.to_payload() for o in options],
            }
            fields = session.ask("baseline_answer", TaskKind.BASELINE_ANSWER, inputs,
                                 "baseline_answer", hop=hop)
            decision = as_text(fields.get("decision")).strip().lower()
            selected = select_options(options, as_list(fields.get("select")))
            constraints = as_list(fields.get("constraints"))
            constraints = [c for c in constraints if c.lower() not in ("none", "n/a", "-")]
            session.note(
                "baseline_answer",
                hop=hop,
                relations=[relation],
                options=[o.id for o in options],
                option_labels=[o.label for o in options],
                selected=[o.id for o in selected],
                decision=decision,
                constraints=constraints,
            )
            if decision.startswith("unknown") or decision.startswith("abstain"):
                raise Abstain("answer-unknown")
            if decision.startswith("cont"):
                chosen = selected or options
                frontier = sorted({o.id for o in chosen if not o.literal and not view.is_cvt(o.id)})
                continue
            answers = render_answers(view, [o.id for o in selected])
            if not answers:
                raise Abstain("answer-unknown")
            return result(Status.ANSWERED, answers)
        raise Abstain("hop-limit-reached")
    except Abstain as exc:
        return result(Status.ABSTAINED, reason=exc.reason)
    except OracleParseError as exc:
        session.note(step, error=str(exc))
        return result(Status.ERROR, reason=f"parse-failure:{step}")
