"""Intent- and context-driven retrieval over a knowledge graph.

The procedure first asks the model what the question is about (key entities
and cue tokens), what it is really asking for (intent) and in which frame
(context aspects). It then walks the graph hop by hop: gather candidate
relations around the current entities, let the model keep the ones that serve
the intent and rank them by context, follow the top ones and filter what it
finds against the question's temporal, geographic and aggregation
constraints, which the model states together with the context. A final
check compares the answer with the intent; a rejection demotes the relation
used and re-runs alignment with the next-ranked relations, a bounded number
of times.

Oracle calls per question are bounded by::

    A + 2 * max_hops + 1 + 2 * max_validation_iters

with ``A`` = 3 (or 1 when the analysis is fused). Each call may be re-asked
once on a parse failure, which at most doubles the total.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field

from ..errors import OracleParseError
from ..kg_store import KnowledgeGraph
from ..oracle import OracleBackend, TaskKind, parse_structured
from .common import (
    Abstain,
    OracleSession,
    Option,
    StepFailure,
    as_list,
    as_text,
    candidate_relations,
    dedupe,
    entity_labels,
    follow_relations,
    render_answers,
    resolve_key_entities,
    select_options,
)
from .types import (
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

logger = logging.getLogger(__name__)

MAX_CONTEXT_ASPECTS = 5
_SCORE = re.compile(r"^-?\d+(?:\.\d+)?$")


def max_oracle_calls(config: PipelineConfig) -> int:
    analysis = 1 if config.fuse_analysis else 3
    return analysis + 2 * config.max_hops + 1 + 2 * config.max_validation_iters


@dataclass
class Elements:
    key_entities: list[str]
    relevant_tokens: list[str]
    # Filled only when the analysis steps are fused into one call.
    intent: str = ""
    context_aspects: list[str] = field(default_factory=list)


def identify_elements(
    q: Question, kg: KnowledgeGraph, session: OracleSession, fuse: bool = False
) -> Elements:
    """Key entities and cue tokens.

    Dataset topic entities take precedence over the model's proposals, which
    are otherwise resolved against entity labels by case-insensitive match.
    """
    inputs: dict = {"question": q.text}
    if fuse:
        inputs["fused"] = True
    fields = session.ask(
        "identify_elements", TaskKind.IDENTIFY_ELEMENTS, inputs, "analysis" if fuse else "elements"
    )
    proposed = as_list(fields.get("entities"))
    if q.topic_entities:
        keys = list(q.topic_entities)
    else:
        keys = resolve_key_entities(kg, proposed)
    if not keys:
        raise Abstain("no-topic-entity")
    proposed_cf = {p.casefold() for p in proposed}
    tokens = [t for t in dedupe(as_list(fields.get("tokens"))) if t.casefold() not in proposed_cf]
    elements = Elements(keys, tokens)
    if fuse:
        elements.intent = as_text(fields.get("intent"))
        elements.context_aspects = as_list(fields.get("context"))[:MAX_CONTEXT_ASPECTS]
    return elements


def _analysis_inputs(q: Question, kg: KnowledgeGraph, elements: Elements) -> dict:
    return {
        "question": q.text,
        "entities": entity_labels(kg, elements.key_entities),
        "tokens": elements.relevant_tokens,
    }


def identify_intent(q: Question, kg: KnowledgeGraph, elements: Elements, session: OracleSession) -> str:
    fields = session.ask(
        "identify_intent", TaskKind.IDENTIFY_INTENT, _analysis_inputs(q, kg, elements), "intent"
    )
    return as_text(fields["intent"])


def identify_context(
    q: Question, kg: KnowledgeGraph, elements: Elements, session: OracleSession
) -> list[str]:
    fields = session.ask(
        "identify_context", TaskKind.IDENTIFY_CONTEXT, _analysis_inputs(q, kg, elements), "context"
    )
    return as_list(fields["context"])[:MAX_CONTEXT_ASPECTS]


def extract_constraints(reply_text: str, session: OracleSession) -> ConstraintSet:
    """Constraints stated in the context reply (or the fused analysis reply).

    Best effort and no extra oracle call: a reply without constraint lines
    yields an empty set and a trace flag.
    """
    try:
        fields = parse_structured(reply_text, "constraints")
    except OracleParseError:
        session.note("extract_constraints", flag="constraints-unparsed")
        return ConstraintSet()

    def phrase(key: str) -> str | None:
        value = as_text(fields.get(key)).strip()
        return None if value.lower() in ("", "none", "n/a", "-") else value

    return ConstraintSet(
        temporal=phrase("temporal"),
        geographic=phrase("geographic"),
        aggregation=Aggregation.parse(as_text(fields.get("aggregation"))),
        other=tuple(o for o in as_list(fields.get("other")) if o.lower() not in ("none", "n/a", "-")),
    )


def _token_set(text: str) -> set[str]:
    return {w for w in re.split(r"[^a-z0-9]+", text.lower()) if w}


def fallback_ranking(candidates: Sequence[str], tokens: Sequence[str], k: int) -> RankedRelations:
    """Token overlap between relation-id segments and the cue tokens."""
    cue = set()
    for t in tokens:
        cue |= _token_set(t)
    overlaps = {c: len(_token_set(c) & cue) for c in candidates}
    best = max(overlaps.values(), default=0)
    entries = [
        RankedRelation(c, (overlaps[c] / best) if best else 0.0, "token-overlap fallback")
        for c in candidates
    ]
    entries.sort(key=lambda e: (-e.score, e.relation))
    return RankedRelations(tuple(entries[:k]), k, tuple(entries[k:]))


def _parse_rank_line(line: str) -> tuple[str, float | None, str]:
    parts = [p.strip() for p in line.split("|")]
    relation = parts[0].strip("`'\" ")
    score = None
    rationale = ""
    if len(parts) > 1 and _SCORE.match(parts[1]):
        score = float(parts[1])
        rationale = " | ".join(parts[2:])
    elif len(parts) > 1:
        rationale = " | ".join(parts[1:])
    return relation, score, rationale


def filter_rank_relations(
    q: Question,
    kg: KnowledgeGraph,
    frontier: Sequence[str],
    candidates: Sequence[str],
    state: MindState,
    k: int,
    session: OracleSession,
    hop: int,
) -> RankedRelations:
    """Keep the relations that serve the intent, ranked by context, top ``k``.

    Relations the model names that are not candidates are dropped. When none
    survive, a deterministic token-overlap ranking is used instead.
    """
    if not candidates:
        raise ValueError("filter_rank_relations needs at least one candidate")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(candidates) == 1:
        ranked = RankedRelations((RankedRelation(candidates[0], 1.0, "only candidate"),), k)
        session.note("rank_relations", hop=hop, forced=True, ranked=[[candidates[0], 1.0]])
        return ranked

    inputs = {
        "question": q.text,
        "intent": state.intent,
        "context": state.context_aspects,
        "tokens": state.relevant_tokens,
        "frontier": entity_labels(kg, frontier),
        "candidates": list(candidates),
    }
    fields = session.ask("rank_relations", TaskKind.RANK_RELATIONS, inputs, "ranking", hop=hop)
    allowed = set(candidates)
    rows: list[tuple[str, float | None, str]] = []
    dropped: list[str] = []
    seen: set[str] = set()
    for line in as_list(fields.get("relation")):
        relation, score, rationale = _parse_rank_line(line)
        if relation in seen:
            continue
        seen.add(relation)
        if relation in allowed:
            rows.append((relation, score, rationale))
        else:
            dropped.append(relation)

    if not rows:
        ranked = fallback_ranking(candidates, state.relevant_tokens, k)
        session.note("rank_relations", hop=hop, fallback=True, dropped=dropped,
                     ranked=[[e.relation, e.score] for e in ranked.entries])
        return ranked

    n = len(rows)
    scores = [s if s is not None else (n - i) / n for i, (_, s, _) in enumerate(rows)]
    scores = [max(0.0, s) for s in scores]
    top = max(scores)
    if top > 1.0:
        scores = [s / top for s in scores]
    entries = [RankedRelation(r, round(s, 6), why) for (r, _, why), s in zip(rows, scores)]
    entries.sort(key=lambda e: (-e.score, e.relation))
    ranked = RankedRelations(tuple(entries[:k]), k, tuple(entries[k:]))
    session.note("rank_relations", hop=hop, dropped=dropped,
                 ranked=[[e.relation, e.score] for e in ranked.entries])
    return ranked


@dataclass
class AlignOutcome:
    decision: str  # "answer" or "continue"
    selected: list[Option]
    options: list[Option]

    @property
    def answer_ids(self) -> list[str]:
        return dedupe(o.id for o in self.selected)


def align_constraints(
    q: Question,
    kg: KnowledgeGraph,
    frontier: Sequence[str],
    ranked: RankedRelations,
    state: MindState,
    session: OracleSession,
    hop: int,
    cap: int | None = None,
) -> AlignOutcome:
    """Follow the ranked relations and let the model filter by constraints.

    Raises :class:`Abstain` (``constraints-unsatisfiable``) when nothing is
    reachable or nothing survives the filter.
    """
    if not ranked.entries:
        raise ValueError("align_constraints needs ranked relations")
    options = follow_relations(kg, frontier, ranked.relations, cap=cap)
    if not options:
        session.note("align_constraints", hop=hop, relations=ranked.relations, options=[],
                     selected=[], decision=None)
        raise Abstain("constraints-unsatisfiable")
    inputs = {
        "question": q.text,
        "intent": state.intent,
        "context": state.context_aspects,
        "constraints": state.constraints.to_dict(),
        "frontier": entity_labels(kg, frontier),
        "relations": ranked.relations,
        "options": [o.to_payload() for o in options],
    }
    fields = session.ask("align_constraints", TaskKind.ALIGN_CONSTRAINTS, inputs, "alignment", hop=hop)
    decision = as_text(fields.get("decision")).strip().lower()
    decision = "continue" if decision.startswith("cont") else "answer"
    selected = select_options(options, as_list(fields.get("select")))

    agg = state.constraints.aggregation
    if decision == "answer" and selected and agg is Aggregation.FIRST:
        selected = selected[:1]

    session.note(
        "align_constraints",
        hop=hop,
        relations=ranked.relations,
        options=[o.id for o in options],
        option_labels=[o.label for o in options],
        selected=[o.id for o in selected],
        decision=decision,
        constraints=state.constraints.to_dict(),
    )
    if not selected:
        raise Abstain("constraints-unsatisfiable")
    return AlignOutcome(decision, selected, options)


def validate_answer(
    q: Question, answers: Sequence[str], state: MindState, session: OracleSession, iteration: int
) -> str:
    """Return ``"accept"`` or ``"retry"``. An unreadable verdict counts as acceptance."""
    inputs = {
        "question": q.text,
        "intent": state.intent,
        "context": state.context_aspects,
        "answers": list(answers),
        "iteration": iteration,
    }
    try:
        fields = session.ask("validate_answer", TaskKind.VALIDATE_ANSWER, inputs, "validation")
    except OracleParseError:
        session.note("validate_answer", flag="validation-unparsed")
        return "accept"
    verdict = as_text(fields.get("verdict")).strip().lower()
    return "retry" if verdict.startswith("retry") or verdict.startswith("reject") else "accept"


def _final_answers(kg: KnowledgeGraph, outcome: AlignOutcome, state: MindState) -> list[str]:
    answers = render_answers(kg, outcome.answer_ids)
    if state.constraints.aggregation is Aggregation.COUNT and answers:
        return [str(len(answers))]
    return answers


def _reachable_frontier(kg: KnowledgeGraph, outcome: AlignOutcome) -> list[str]:
    return sorted({o.id for o in outcome.selected if not o.literal and not kg.is_cvt(o.id)})


def answer_question(
    kg: KnowledgeGraph,
    q: Question,
    config: PipelineConfig,
    oracle: OracleBackend,
) -> PipelineResult:
    """Run the whole procedure for one question.

    Step failures become an ``Error`` result; backend failures such as a
    cassette miss or a dead endpoint propagate to the caller.
    """
    if config.max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    session = OracleSession(oracle, q.id)
    state = MindState()
    hops_used = 0
    iterations = 0
    flags: list[str] = []

    def result(status: Status, answers: list[str] | None = None, reason: str | None = None) -> PipelineResult:
        return PipelineResult(
            question_id=q.id,
            answers=answers or [],
            trace=session.trace,
            hops_used=hops_used,
            validation_iterations=iterations,
            status=status,
            reason=reason,
            flags=flags,
            pipeline="mindful",
        )

    step = "identify_elements"
    try:
        elements = identify_elements(q, kg, session, fuse=config.fuse_analysis)
        state.key_entities = elements.key_entities
        state.relevant_tokens = elements.relevant_tokens
        if config.fuse_analysis:
            state.intent = elements.intent
            state.context_aspects = elements.context_aspects
        else:
            step = "identify_intent"
            state.intent = identify_intent(q, kg, elements, session)
            step = "identify_context"
            state.context_aspects = identify_context(q, kg, elements, session)
        if not state.intent or not state.context_aspects:
            raise StepFailure(step, "empty intent or context")
        session.note("mind_state", key_entities=state.key_entities, tokens=state.relevant_tokens,
                     intent=state.intent, context=state.context_aspects)

        state.constraints = extract_constraints(session.last_text, session)
        session.note("extract_constraints", constraints=state.constraints.to_dict())

        frontier = list(state.key_entities)
        final: tuple[list[str], tuple[str, ...], RankedRelations] | None = None
        outcome: AlignOutcome | None = None
        for hop in range(1, config.max_hops + 1):
            hops_used = hop
            step = "candidate_relations"
            candidates = candidate_relations(kg, frontier)
            session.note("candidate_relations", hop=hop, frontier=list(frontier), relations=list(candidates))
            if not candidates:
                raise Abstain("no-candidate-relations")
            step = "rank_relations"
            ranked = filter_rank_relations(q, kg, frontier, candidates, state, config.k, session, hop)
            step = "align_constraints"
            outcome = align_constraints(q, kg, frontier, ranked, state, session, hop,
                                        cap=config.max_prompt_triples)
            if outcome.decision == "answer":
                final = (list(frontier), candidates, ranked)
                break
            frontier = _reachable_frontier(kg, outcome)
        if final is None or outcome is None:
            raise Abstain("hop-limit-reached")

        answers = _final_answers(kg, outcome, state)
        step = "validate_answer"
        answers, iterations = _validate_with_retries(q, kg, state, session, config, final, answers, flags)
        return result(Status.ANSWERED, answers)
    except Abstain as exc:
        return result(Status.ABSTAINED, reason=exc.reason)
    except OracleParseError as exc:
        session.note(step, error=str(exc))
        return result(Status.ERROR, reason=f"parse-failure:{step}")
    except StepFailure as exc:
        session.note(exc.step, error=exc.detail)
        return result(Status.ERROR, reason=f"step-failure:{exc.step}")


def _retry_order(candidates: Sequence[str], ranked: RankedRelations, state: MindState) -> list[RankedRelation]:
    """Every candidate, best first: the model's ranking, then token overlap for the rest."""
    seen: set[str] = set()
    order: list[RankedRelation] = []
    rest = fallback_ranking(candidates, state.relevant_tokens, len(candidates)).entries
    for e in (*ranked.entries, *ranked.reserve, *rest):
        if e.relation not in seen:
            seen.add(e.relation)
            order.append(e)
    return order


def _validate_with_retries(
    q: Question,
    kg: KnowledgeGraph,
    state: MindState,
    session: OracleSession,
    config: PipelineConfig,
    final: tuple[list[str], tuple[str, ...], RankedRelations],
    answers: list[str],
    flags: list[str],
) -> tuple[list[str], int]:
    """Validate, and on rejection demote the top relation and re-align.

    Each retry costs one alignment and one validation call. Ranking is not
    asked again: the next relations come from the final hop's ranking.
    """
    frontier, candidates, ranked = final
    hop = max((r.get("hop", 0) for r in session.trace), default=0)
    order = _retry_order(candidates, ranked, state)
    demoted: set[str] = set()
    current = ranked
    iterations = 0
    verdict = validate_answer(q, answers, state, session, iterations)
    while verdict == "retry":
        if iterations >= config.max_validation_iters:
            flags.append("validation-exhausted")
            break
        iterations += 1
        demoted.add(current.top)
        remaining = [e for e in order if e.relation not in demoted]
        session.note("validation_retry", iteration=iterations, demoted=sorted(demoted),
                     relations=[e.relation for e in remaining])
        if not remaining:
            flags.append("validation-exhausted")
            break
        current = RankedRelations(tuple(remaining[: config.k]), config.k)
        try:
            outcome = align_constraints(q, kg, frontier, current, state, session, hop,
                                        cap=config.max_prompt_triples)
        except Abstain as exc:
            session.note("validation_retry", iteration=iterations, outcome=exc.reason)
            continue
        if outcome.decision != "answer":
            session.note("validation_retry", iteration=iterations, outcome="retry-continued")
            continue
        new_answers = _final_answers(kg, outcome, state)
        if not new_answers:
            continue
        answers = new_answers
        verdict = validate_answer(q, answers, state, session, iterations)
    return answers, iterations
