"""Independent reference implementations and random generators for tests.

Nothing here imports the code under test's algorithms; the graph oracles
work from the raw triple list only.
"""

from __future__ import annotations

import hashlib
import json
import random
from typing import Any

from mindful_kgqa.kg_store import KnowledgeGraph, Triple
from mindful_kgqa.oracle import TaskKind

# -- graph oracles ---------------------------------------------------------


def brute_one_hop(triples: list[Triple], entity: str) -> set[str]:
    return {t.relation for t in triples if t.head == entity}


def brute_distances(triples: list[Triple], cvts: set[str], seeds: set[str], nodes: set[str]) -> dict[str, float]:
    """Bellman-Ford style relaxation over undirected edges; entering a CVT costs 0."""
    inf = float("inf")
    dist = {n: (0 if n in seeds else inf) for n in nodes}
    changed = True
    while changed:
        changed = False
        for t in triples:
            for a, b in ((t.head, t.tail), (t.tail, t.head)):
                cand = dist[a] + (0 if b in cvts else 1)
                if cand < dist[b]:
                    dist[b] = cand
                    changed = True
    return dist


def brute_subgraph(triples: list[Triple], cvts: set[str], seeds: set[str], hops: int) -> set[Triple]:
    nodes = {t.head for t in triples} | {t.tail for t in triples}
    seeds = seeds & nodes
    dist = brute_distances(triples, cvts, seeds, nodes)
    kept = set()
    for t in triples:
        via_head = dist[t.head] + (0 if t.tail in cvts else 1)
        via_tail = dist[t.tail] + (0 if t.head in cvts else 1)
        if min(via_head, via_tail) <= hops:
            kept.add(t)
    return kept


# -- metric oracles --------------------------------------------------------


def brute_norm(s: str) -> str:
    import unicodedata

    out = " ".join(s.casefold().split())
    while True:
        prev = out
        while out and unicodedata.category(out[0]).startswith("P"):
            out = out[1:]
        while out and unicodedata.category(out[-1]).startswith("P"):
            out = out[:-1]
        out = " ".join(out.split())
        if out == prev:
            return out


def brute_hits(pred: list[str], gold: list[str], k: int) -> bool:
    gold_n = [brute_norm(g) for g in gold]
    for i in range(min(k, len(pred))):
        for g in gold_n:
            if brute_norm(pred[i]) == g:
                return True
    return False


def brute_em(pred: list[str], gold: list[str]) -> bool:
    p = {brute_norm(x) for x in pred}
    g = {brute_norm(x) for x in gold}
    return all(x in g for x in p) and all(x in p for x in g)


# -- random graphs ---------------------------------------------------------

RELATIONS = ("r.a", "r.b", "r.c", "r.d", "r.e", "r.f")


def random_graph(rng: random.Random, max_nodes: int = 200) -> tuple[list[Triple], set[str]]:
    """Random triples over ``e*`` entities and ``cvt.*`` nodes; returns (triples, cvt ids)."""
    n = rng.randint(1, max_nodes)
    n_cvt = rng.randint(0, max(0, n // 5))
    names = [f"e{i}" for i in range(n - n_cvt)] + [f"cvt.{i}" for i in range(n_cvt)]
    m = rng.randint(0, 3 * n)
    triples = {
        Triple(rng.choice(names), rng.choice(RELATIONS), rng.choice(names)) for _ in range(m)
    }
    if not triples:
        triples.add(Triple(names[0], RELATIONS[0], names[-1]))
    return sorted(triples), {x for x in names if x.startswith("cvt.")}


def random_fixture_graph(rng: random.Random) -> KnowledgeGraph:
    """Small labelled graph with CVT hubs, literals and cycles, for pipeline sweeps."""
    n_ent = rng.randint(3, 25)
    n_cvt = rng.randint(1, 6)
    ents = [f"m.{i}" for i in range(n_ent)]
    cvts = [f"cvt.{i}" for i in range(n_cvt)]
    literals = [str(1950 + i) for i in range(4)]
    triples = set()
    for _ in range(rng.randint(n_ent, 4 * n_ent)):
        triples.add(Triple(rng.choice(ents), rng.choice(RELATIONS), rng.choice(ents + cvts)))
    for c in cvts:
        triples.add(Triple(rng.choice(ents), "hub.link", c))
        for _ in range(rng.randint(1, 3)):
            triples.add(Triple(c, rng.choice(("hub.member", "hub.role")), rng.choice(ents)))
        if rng.random() < 0.7:
            triples.add(Triple(c, "hub.from", rng.choice(literals)))
    labels = {e: f"Entity {e[2:]}" for e in ents}
    if rng.random() < 0.5:
        labels[ents[-1]] = labels[ents[0]]
    return KnowledgeGraph(triples, entity_labels=labels)


# -- randomized oracle -----------------------------------------------------


def _rng_for(kind: TaskKind | str, inputs: dict[str, Any], seed: int) -> random.Random:
    blob = json.dumps([str(kind), inputs, seed], sort_keys=True, default=str)
    return random.Random(int(hashlib.sha256(blob.encode()).hexdigest()[:16], 16))


def chaos_responder(seed: int, cvt_ids: list[str], garbage_rate: float = 0.2):
    """Deterministic pseudo-random responder that mixes valid, hallucinated,
    CVT-pointing and unparseable answers for every task kind."""

    def respond(kind: TaskKind | str, inputs: dict[str, Any]) -> str:
        rng = _rng_for(kind, inputs, seed)
        kind = TaskKind(kind)
        if rng.random() < garbage_rate:
            return rng.choice(["", "I am not sure.", "```\nnothing useful\n```", "{\"foo\": 1}"])
        lines: list[str] = []
        if kind is TaskKind.IDENTIFY_ELEMENTS:
            lines = [f"entities: Entity {rng.randint(0, 30)}", "tokens: member; role",
                     "intent: find", "context: time"]
        elif kind is TaskKind.IDENTIFY_INTENT:
            lines = ["intent: find the thing"]
        elif kind is TaskKind.IDENTIFY_CONTEXT:
            lines = ["context: " + "; ".join(f"aspect{i}" for i in range(rng.randint(1, 9))),
                     f"aggregation: {rng.choice(['none', 'first', 'count', 'latest', 'bogus'])}",
                     "temporal: none"]
        elif kind is TaskKind.RANK_RELATIONS:
            pool = list(inputs.get("candidates", [])) + ["made.up.relation", "hub.link"]
            for r in rng.sample(pool, k=min(len(pool), rng.randint(1, 5))):
                lines.append(f"relation: {r} | {rng.random():.2f}")
        elif kind in (TaskKind.ALIGN_CONSTRAINTS, TaskKind.BASELINE_ANSWER):
            opts = [o["id"] for o in inputs.get("options", [])]
            pool = opts + cvt_ids + ["m.999"]
            picks = rng.sample(pool, k=min(len(pool), rng.randint(0, 4)))
            decision = rng.choice(["answer", "continue", "unknown"])
            lines = [f"decision: {decision}", "select: " + "; ".join(picks)]
        elif kind is TaskKind.VALIDATE_ANSWER:
            lines = [f"verdict: {rng.choice(['accept', 'retry', 'retry', 'maybe'])}"]
        elif kind is TaskKind.BASELINE_SELECT:
            text = inputs.get("candidates", "")
            rels = [ln.split(":", 1)[0] for ln in text.splitlines() if ":" in ln] + ["nope"]
            lines = [f"relation: {rng.choice(rels)}"]
        return "```\n" + "\n".join(lines) + "\n```"

    return respond


def always_retry(inner):
    """Wrap a responder so every validation verdict is 'retry'."""

    def respond(kind, inputs):
        if TaskKind(kind) is TaskKind.VALIDATE_ANSWER:
            return "```\nverdict: retry\nreason: not convinced\n```"
        return inner(kind, inputs)

    return respond


def always_unparseable(kind, inputs) -> str:
    return "Sorry, I can only answer in prose today."


def backend_for(responder):
    """ScriptedBackend over a ``(kind, inputs)`` responder."""
    from mindful_kgqa.oracle import ScriptedBackend

    return ScriptedBackend(lambda task: responder(task.kind, task.inputs))
