"""Immutable triple store with CVT awareness and bounded subgraph extraction.

Graphs are loaded from a tab-separated file (``head<TAB>relation<TAB>tail``)
and never change afterwards, so a single instance can be shared freely between
threads. Compound value type (CVT) nodes are the schema-internal hubs Freebase
uses for n-ary facts such as marriages or roster spells. They are traversed
transparently and never count as a hop.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import TextIO

from .errors import ContractViolation, TripleParseError

DEFAULT_CVT_PREFIX = "cvt."
DEFAULT_LABEL_RELATION = "type.object.name"


@dataclass(frozen=True, order=True)
class Triple:
    head: str
    relation: str
    tail: str

    def __post_init__(self) -> None:
        if not self.head or not self.relation or not self.tail:
            raise ValueError(f"triple fields must be non-empty: {self!r}")


class KnowledgeGraph:
    """Indexed, read-only set of triples.

    ``by_head`` maps an entity to its outgoing triples and ``by_head_relation``
    maps ``(entity, relation)`` to sorted tails; both are derived from
    ``triples`` at construction. ``entity_labels`` holds display strings.
    """

    __slots__ = (
        "triples",
        "by_head",
        "by_head_relation",
        "by_tail",
        "cvt_nodes",
        "entity_labels",
        "_nodes",
        "_frozen",
    )

    def __init__(
        self,
        triples: Iterable[Triple],
        cvt_nodes: Iterable[str] = (),
        entity_labels: Mapping[str, str] | None = None,
        cvt_prefix: str | None = DEFAULT_CVT_PREFIX,
    ) -> None:
        triple_set = frozenset(triples)
        by_head: dict[str, list[Triple]] = defaultdict(list)
        by_tail: dict[str, list[Triple]] = defaultdict(list)
        by_head_relation: dict[tuple[str, str], list[str]] = defaultdict(list)
        for t in triple_set:
            by_head[t.head].append(t)
            by_tail[t.tail].append(t)
            by_head_relation[(t.head, t.relation)].append(t.tail)

        nodes = frozenset(by_head) | frozenset(by_tail)
        cvts = {n for n in cvt_nodes if n in nodes}
        if cvt_prefix:
            cvts.update(n for n in nodes if n.startswith(cvt_prefix))

        object.__setattr__(self, "triples", triple_set)
        object.__setattr__(
            self, "by_head", MappingProxyType({h: tuple(sorted(ts)) for h, ts in by_head.items()})
        )
        object.__setattr__(
            self, "by_tail", MappingProxyType({t: tuple(sorted(ts)) for t, ts in by_tail.items()})
        )
        object.__setattr__(
            self,
            "by_head_relation",
            MappingProxyType({k: tuple(sorted(v)) for k, v in by_head_relation.items()}),
        )
        object.__setattr__(self, "cvt_nodes", frozenset(cvts))
        object.__setattr__(self, "entity_labels", MappingProxyType(dict(entity_labels or {})))
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_frozen", True)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError(f"KnowledgeGraph is immutable (tried to set {name!r})")

    def __delattr__(self, name: str) -> None:
        raise AttributeError(f"KnowledgeGraph is immutable (tried to delete {name!r})")

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, entity: object) -> bool:
        return entity in self._nodes

    def __repr__(self) -> str:
        return f"KnowledgeGraph(triples={len(self.triples)}, cvt_nodes={len(self.cvt_nodes)})"

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    def is_cvt(self, node: str) -> bool:
        return node in self.cvt_nodes

    def is_literal(self, node: str) -> bool:
        """True for values that are never a head and carry no label (dates, numbers, strings)."""
        return node not in self.by_head and node not in self.entity_labels

    def label(self, node: str) -> str:
        return self.entity_labels.get(node, node)

    def resolve_label(self, surface: str) -> list[str]:
        """Entity ids whose label or id equals ``surface`` ignoring case."""
        wanted = " ".join(surface.split()).casefold()
        if not wanted:
            return []
        hits = {eid for eid, lab in self.entity_labels.items() if lab.casefold() == wanted}
        hits.update(n for n in self.by_head if n.casefold() == wanted)
        return sorted(hits)


def load_triples(
    source: Iterable[str] | TextIO,
    cvt_ids: Iterable[str] = (),
    cvt_prefix: str | None = DEFAULT_CVT_PREFIX,
    label_relation: str | None = DEFAULT_LABEL_RELATION,
) -> KnowledgeGraph:
    """Parse tab-separated triples into a :class:`KnowledgeGraph`.

    Blank lines and lines starting with ``#`` are skipped. Triples whose
    relation is ``label_relation`` populate ``entity_labels`` instead of the
    triple set. Raises :class:`TripleParseError` with the 1-based line number
    on a line that does not have exactly three non-empty fields.
    """
    triples: set[Triple] = set()
    labels: dict[str, str] = {}
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise TripleParseError(line_no, line, f"expected 3 tab-separated fields, got {len(fields)}")
        head, relation, tail = (f.strip() for f in fields)
        if not (head and relation and tail):
            raise TripleParseError(line_no, line, "empty field")
        if label_relation is not None and relation == label_relation:
            labels.setdefault(head, tail)
            continue
        triples.add(Triple(head, relation, tail))
    return KnowledgeGraph(triples, cvt_nodes=cvt_ids, entity_labels=labels, cvt_prefix=cvt_prefix)


def read_cvt_ids(source: Iterable[str] | TextIO) -> list[str]:
    ids = []
    for raw in source:
        line = raw.strip()
        if line and not line.startswith("#"):
            ids.append(line)
    return ids


def load_graph(
    kg_path: str | Path,
    cvt_path: str | Path | None = None,
    cvt_prefix: str | None = DEFAULT_CVT_PREFIX,
    label_relation: str | None = DEFAULT_LABEL_RELATION,
) -> KnowledgeGraph:
    cvt_ids: list[str] = []
    if cvt_path is not None:
        with open(cvt_path, encoding="utf-8") as fh:
            cvt_ids = read_cvt_ids(fh)
    with open(kg_path, encoding="utf-8") as fh:
        return load_triples(fh, cvt_ids=cvt_ids, cvt_prefix=cvt_prefix, label_relation=label_relation)


def one_hop_relations(kg: KnowledgeGraph, entity: str) -> tuple[str, ...]:
    """Outgoing relations of ``entity`` in lexicographic order."""
    return tuple(sorted({t.relation for t in kg.by_head.get(entity, ())}))


def neighbors(kg: KnowledgeGraph, entity: str, relation: str) -> list[str]:
    return list(kg.by_head_relation.get((entity, relation), ()))


def expand_cvt(kg: KnowledgeGraph, node: str) -> frozenset[Triple]:
    """Every triple touching a CVT node, in either direction."""
    if node not in kg.cvt_nodes:
        raise ContractViolation(f"{node!r} is not a CVT node")
    return frozenset(kg.by_head.get(node, ())) | frozenset(kg.by_tail.get(node, ()))


@dataclass(frozen=True)
class SubGraph:
    seed_entities: tuple[str, ...]
    hop_limit: int
    triples: frozenset[Triple]

    def entities(self) -> frozenset[str]:
        return frozenset(t.head for t in self.triples) | frozenset(t.tail for t in self.triples)


def _step_cost(kg: KnowledgeGraph, node: str) -> int:
    # Entering a CVT is free; the hop is charged when leaving it for a real entity.
    return 0 if node in kg.cvt_nodes else 1


def extract_subgraph(kg: KnowledgeGraph, seeds: Iterable[str], hops: int) -> SubGraph:
    """Undirected expansion from ``seeds`` with a budget of ``hops``.

    A triple is kept when it can be crossed, in either direction, from a node
    already within budget without exceeding it. Stepping onto a CVT node costs
    nothing, so a fact that hides behind a CVT is one hop away, not two.
    """
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    seed_list = tuple(seeds)
    dist: dict[str, int] = {}
    heap: list[tuple[int, str]] = []
    for s in sorted(set(seed_list)):
        if s in kg:
            dist[s] = 0
            heap.append((0, s))
    heapq.heapify(heap)

    kept: set[Triple] = set()
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, hops + 1):
            continue
        for t in kg.by_head.get(node, ()):
            _relax(kg, t, t.tail, d, hops, dist, heap, kept)
        for t in kg.by_tail.get(node, ()):
            _relax(kg, t, t.head, d, hops, dist, heap, kept)
    return SubGraph(seed_entities=seed_list, hop_limit=hops, triples=frozenset(kept))


def _relax(
    kg: KnowledgeGraph,
    triple: Triple,
    other: str,
    d: int,
    hops: int,
    dist: dict[str, int],
    heap: list[tuple[int, str]],
    kept: set[Triple],
) -> None:
    nd = d + _step_cost(kg, other)
    if nd > hops:
        return
    kept.add(triple)
    if nd < dist.get(other, hops + 1):
        dist[other] = nd
        heapq.heappush(heap, (nd, other))


def subgraph_view(kg: KnowledgeGraph, sub: SubGraph) -> KnowledgeGraph:
    """A standalone graph holding only ``sub``'s triples, with labels and CVT marks carried over."""
    nodes = sub.entities()
    return KnowledgeGraph(
        sub.triples,
        cvt_nodes=kg.cvt_nodes & nodes,
        entity_labels={n: lab for n, lab in kg.entity_labels.items() if n in nodes},
        cvt_prefix=None,
    )
