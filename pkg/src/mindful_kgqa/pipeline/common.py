"""Machinery shared by both pipelines: oracle sessions, traversal options, rendering."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

from ..errors import OracleParseError
from ..kg_store import KnowledgeGraph, expand_cvt, neighbors, one_hop_relations
from ..oracle import OracleBackend, OracleTask, TaskKind, parse_structured
from ..oracle.parsing import Fields


class Abstain(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class StepFailure(Exception):
    def __init__(self, step: str, detail: str) -> None:
        super().__init__(f"{step}: {detail}")
        self.step = step
        self.detail = detail


class OracleSession:
    """One question's conversation with the oracle.

    Every call is appended to ``trace`` in order. A response with no parseable
    block is re-asked exactly once with a format reminder; a second failure
    raises :class:`OracleParseError`.
    """

    def __init__(self, backend: OracleBackend, question_id: str) -> None:
        self.backend = backend
        self.question_id = question_id
        self.trace: list[dict[str, Any]] = []
        # Raw text of the most recent successfully parsed reply.
        self.last_text = ""

    def note(self, step: str, **fields: Any) -> None:
        self.trace.append({"step": step, **fields})

    def ask(
        self,
        step: str,
        kind: TaskKind,
        inputs: dict[str, Any],
        schema: str,
        hop: int | None = None,
    ) -> Fields:
        for attempt in (1, 2):
            payload = dict(inputs, reask=True) if attempt == 2 else inputs
            task = OracleTask.build(kind, payload, self.question_id)
            response = self.backend.complete(task)
            record: dict[str, Any] = {"step": step, "kind": kind.value, "digest": task.digest}
            if hop is not None:
                record["hop"] = hop
            if attempt == 2:
                record["reask"] = True
            try:
                fields = parse_structured(response, schema)
            except OracleParseError:
                record["parsed_ok"] = False
                self.trace.append(record)
                if attempt == 2:
                    raise
                continue
            record["parsed_ok"] = True
            record["parsed"] = fields
            self.trace.append(record)
            self.last_text = response.text
            return fields
        raise AssertionError("unreachable")


def as_list(value: str | list[str] | None) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [value] if value else []
    return list(value)


def as_text(value: str | list[str] | None) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        return "; ".join(value)
    return value


def dedupe(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def resolve_key_entities(kg: KnowledgeGraph, surfaces: Sequence[str]) -> list[str]:
    ids: list[str] = []
    for surface in surfaces:
        ids.extend(kg.resolve_label(surface))
    return sorted(set(ids))


def candidate_relations(kg: KnowledgeGraph, frontier: Sequence[str]) -> tuple[str, ...]:
    """Outgoing relations of the frontier, plus those of CVT nodes one step out."""
    rels: set[str] = set()
    for entity in frontier:
        rels.update(one_hop_relations(kg, entity))
        for t in kg.by_head.get(entity, ()):
            if kg.is_cvt(t.tail):
                rels.update(tr.relation for tr in expand_cvt(kg, t.tail) if tr.head == t.tail)
    return tuple(sorted(rels))


@dataclass(frozen=True)
class Option:
    """A value reached by following a relation, possibly through a CVT."""

    id: str
    label: str
    relation: str
    via: str | None = None
    attributes: tuple[tuple[str, str], ...] = ()
    literal: bool = False

    def to_payload(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "label": self.label, "relation": self.relation}
        if self.via is not None:
            d["via"] = self.via
            d["attributes"] = [list(a) for a in self.attributes]
        return d


def _cvt_attributes(kg: KnowledgeGraph, cvt: str, exclude: set[str]) -> tuple[tuple[str, str], ...]:
    return tuple(
        sorted((t.relation, kg.label(t.tail)) for t in kg.by_head.get(cvt, ()) if t.tail not in exclude)
    )


def follow_relations(
    kg: KnowledgeGraph, frontier: Sequence[str], relations: Sequence[str], cap: int | None = None
) -> list[Option]:
    """Values reachable from ``frontier`` over ``relations``.

    A CVT tail is never an option itself: it is replaced by the entities it
    points to, and its other attributes travel along so that dates and
    places can be used for constraint filtering. A relation that only exists
    on CVT nodes is followed through the frontier's CVT neighbors.
    """
    front = set(frontier)
    found: dict[tuple[str, str, str], Option] = {}

    def add(value: str, relation: str, via: str | None) -> None:
        key = (relation, via or "", value)
        if key in found:
            return
        attrs = _cvt_attributes(kg, via, front) if via else ()
        found[key] = Option(value, kg.label(value), relation, via, attrs, kg.is_literal(value))

    for entity in sorted(front):
        cvt_hubs = sorted({t.tail for t in kg.by_head.get(entity, ()) if kg.is_cvt(t.tail)})
        for relation in relations:
            for tail in neighbors(kg, entity, relation):
                if not kg.is_cvt(tail):
                    add(tail, relation, None)
                    continue
                for tr in kg.by_head.get(tail, ()):
                    x = tr.tail
                    if x in front or kg.is_cvt(x) or kg.is_literal(x):
                        continue
                    add(x, relation, tail)
            for hub in cvt_hubs:
                for x in neighbors(kg, hub, relation):
                    if x in front or kg.is_cvt(x):
                        continue
                    add(x, relation, hub)
    options = [found[k] for k in sorted(found)]
    return options[:cap] if cap is not None else options


def select_options(options: Sequence[Option], selections: Sequence[str]) -> list[Option]:
    """Map the oracle's selections (ids, then case-insensitive labels) onto options."""
    by_id: dict[str, list[Option]] = {}
    by_label: dict[str, list[Option]] = {}
    for opt in options:
        by_id.setdefault(opt.id, []).append(opt)
        by_label.setdefault(opt.label.casefold(), []).append(opt)
    chosen: list[Option] = []
    for sel in selections:
        sel = sel.strip()
        hits = by_id.get(sel) or by_label.get(" ".join(sel.split()).casefold()) or []
        for opt in hits:
            if opt not in chosen:
                chosen.append(opt)
    return chosen


def render_answers(kg: KnowledgeGraph, ids: Iterable[str]) -> list[str]:
    return dedupe(kg.label(i) for i in ids if not kg.is_cvt(i))


def entity_labels(kg: KnowledgeGraph, ids: Iterable[str]) -> list[str]:
    return [kg.label(i) for i in ids]
