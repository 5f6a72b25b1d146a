from __future__ import annotations

import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mindful_kgqa.errors import ContractViolation, TripleParseError
from mindful_kgqa.fixtures import load_fixture_graph
from mindful_kgqa.kg_store import (
    KnowledgeGraph,
    Triple,
    expand_cvt,
    extract_subgraph,
    load_triples,
    neighbors,
    one_hop_relations,
    read_cvt_ids,
    subgraph_view,
)

from oracles import brute_one_hop, brute_subgraph, random_graph

TOY = """\
# comment line
m.niall\tpeople.person.spouse_s\tcvt.nf_1
m.niall\tpeople.person.spouse_s\tcvt.nf_2
cvt.nf_1\tpeople.marriage.spouse\tm.sue

cvt.nf_2\tpeople.marriage.spouse\tm.ayaan
cvt.nf_2\tpeople.marriage.from\t2011
m.niall\ttype.object.name\tNiall Ferguson
m.ayaan\ttype.object.name\tAyaan Hirsi Ali
m.sue\ttype.object.name\tSue Douglas
"""


@pytest.fixture
def toy() -> KnowledgeGraph:
    return load_triples(io.StringIO(TOY))


def test_load_skips_comments_and_splits_labels(toy):
    assert len(toy) == 5
    assert toy.label("m.ayaan") == "Ayaan Hirsi Ali"
    assert all(t.relation != "type.object.name" for t in toy.triples)


def test_cvt_prefix_and_companion_file():
    kg = load_triples(io.StringIO("a\tr\tnode1\nnode1\ts\tb\n"), cvt_ids=read_cvt_ids(["node1", "# x", ""]))
    assert kg.cvt_nodes == {"node1"}
    kg2 = load_triples(io.StringIO("a\tr\tnode1\n"), cvt_ids=["not-in-graph"])
    assert kg2.cvt_nodes == frozenset()


def test_malformed_line_reports_line_number():
    with pytest.raises(TripleParseError) as exc:
        load_triples(io.StringIO("a\tr\tb\nonly\ttwo\n"))
    assert exc.value.line_no == 2


def test_empty_field_rejected():
    with pytest.raises(ValueError):
        Triple("a", "", "b")


def test_duplicates_collapse():
    kg = load_triples(io.StringIO("a\tr\tb\na\tr\tb\n"))
    assert len(kg) == 1


def test_one_hop_relations_niall(toy):
    assert one_hop_relations(toy, "m.niall") == ("people.person.spouse_s",)
    assert one_hop_relations(toy, "m.nobody") == ()


def test_one_hop_relations_is_head_only(toy):
    assert one_hop_relations(toy, "m.ayaan") == ()


def test_neighbors_sorted(toy):
    assert neighbors(toy, "m.niall", "people.person.spouse_s") == ["cvt.nf_1", "cvt.nf_2"]


def test_expand_cvt(toy):
    triples = expand_cvt(toy, "cvt.nf_2")
    assert Triple("cvt.nf_2", "people.marriage.spouse", "m.ayaan") in triples
    assert Triple("m.niall", "people.person.spouse_s", "cvt.nf_2") in triples
    with pytest.raises(ContractViolation):
        expand_cvt(toy, "m.niall")


def test_cvt_hop_is_free(toy):
    sub = extract_subgraph(toy, ["m.niall"], 1)
    assert "m.ayaan" in sub.entities()
    assert "2011" in sub.entities()


def test_subgraph_rejects_zero_hops(toy):
    with pytest.raises(ValueError):
        extract_subgraph(toy, ["m.niall"], 0)


def test_subgraph_unknown_seed_is_empty(toy):
    assert extract_subgraph(toy, ["m.ghost"], 2).triples == frozenset()


def test_subgraph_is_undirected():
    kg = load_triples(io.StringIO("a\tr\tb\nc\tr\ta\n"), cvt_prefix=None)
    assert extract_subgraph(kg, ["a"], 1).triples == kg.triples


def test_subgraph_view_keeps_labels_and_cvts(toy):
    view = subgraph_view(toy, extract_subgraph(toy, ["m.niall"], 1))
    assert view.cvt_nodes == toy.cvt_nodes
    assert view.label("m.sue") == "Sue Douglas"


def test_graph_is_immutable(toy):
    with pytest.raises(AttributeError):
        toy.triples = frozenset()
    with pytest.raises(TypeError):
        toy.by_head["x"] = ()  # type: ignore[index]


def test_resolve_label_case_insensitive(toy):
    assert toy.resolve_label("ayaan hirsi ali") == ["m.ayaan"]
    assert toy.resolve_label("") == []


def test_literals(toy):
    assert toy.is_literal("2011")
    assert not toy.is_literal("m.ayaan")


def test_fixture_graph_size():
    kg = load_fixture_graph()
    assert 50 <= len(kg) <= 80
    assert len(kg.cvt_nodes) == 8


def test_index_round_trip_on_fixture():
    kg = load_fixture_graph()
    rebuilt = {t for ts in kg.by_head.values() for t in ts}
    assert rebuilt == kg.triples


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=5))
def test_subgraph_matches_oracle(seed, hops):
    rng = random.Random(seed)
    triples, cvts = random_graph(rng, max_nodes=60)
    kg = KnowledgeGraph(triples, cvt_nodes=cvts, cvt_prefix=None)
    nodes = sorted(kg.nodes)
    seeds = set(rng.sample(nodes, k=min(len(nodes), rng.randint(1, 3))))
    assert set(extract_subgraph(kg, seeds, hops).triples) == brute_subgraph(triples, cvts, seeds, hops)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_one_hop_matches_linear_scan(seed):
    rng = random.Random(seed)
    triples, cvts = random_graph(rng, max_nodes=60)
    kg = KnowledgeGraph(triples, cvt_nodes=cvts)
    for e in sorted(kg.nodes):
        assert set(one_hop_relations(kg, e)) == brute_one_hop(triples, e)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=4))
def test_subgraph_monotone_in_hops(seed, hops):
    rng = random.Random(seed)
    triples, cvts = random_graph(rng, max_nodes=60)
    kg = KnowledgeGraph(triples, cvt_nodes=cvts)
    seed_node = rng.choice(sorted(kg.nodes))
    assert extract_subgraph(kg, [seed_node], hops).triples <= extract_subgraph(kg, [seed_node], hops + 1).triples


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcdef"), st.sampled_from(["r", "s"]), st.sampled_from("abcdef"))))
def test_tsv_round_trip(rows):
    text = "".join(f"{h}\t{r}\t{t}\n" for h, r, t in rows)
    kg = load_triples(io.StringIO(text))
    assert kg.triples == {Triple(*row) for row in rows}
