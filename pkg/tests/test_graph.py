import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from debatenet.graph import (
    InteractionGraph, giant_component, read_edgelist, restrict, retweet_network, weak_components,
    write_edgelist, write_graphml,
)
from debatenet.ingest import InteractionRecord, Kind

from conftest import graph_from

pairs = st.lists(st.tuples(st.sampled_from("abcdefg"), st.sampled_from("abcdefg")), max_size=40)


def test_add_interaction_rules():
    g = InteractionGraph().add_interaction("a", "b")
    assert len(g) == 2 and g.edges() == [("a", "b", 1)]
    g.add_interaction("a", "b")
    assert g.edges() == [("a", "b", 2)]
    g.add_interaction("a", "a")
    assert g.edges() == [("a", "b", 2)] and g.self_loops == 1
    with pytest.raises(ValueError):
        g.add_interaction("a", "b", 0)


@given(pairs)
def test_pair_multiset_conserved(ps):
    g = InteractionGraph.from_pairs(ps)
    assert g.total_weight() + g.self_loops == len(ps)
    assert sum(g.out_weight(n) for n in g.nodes()) == sum(g.in_weight(n) for n in g.nodes()) == g.total_weight()


@given(pairs)
def test_components_ignore_direction(ps):
    g = InteractionGraph.from_pairs(ps)
    rev = InteractionGraph.from_pairs((d, s) for s, d in ps)
    assert weak_components(g).labels == weak_components(rev).labels


@given(pairs)
def test_components_match_networkx(ps):
    g = InteractionGraph.from_pairs(ps)
    ref = nx.DiGraph()
    ref.add_nodes_from(g.nodes())
    ref.add_edges_from((s, d) for s, d, _ in g.edges())
    expected = sorted(sorted(c) for c in nx.weakly_connected_components(ref))
    comps = weak_components(g)
    got = sorted(sorted(comps.members(c)) for c in range(len(comps.sizes)))
    assert got == expected
    assert comps.sizes == sorted(comps.sizes, reverse=True)


def test_components_examples():
    g = graph_from([("a", "b")], nodes=["c"])
    comps = weak_components(g)
    assert comps.giant == {"a", "b"} and comps.members(1) == {"c"}
    assert weak_components(InteractionGraph()).sizes == []
    two_cycles = [("a", "b"), ("b", "c"), ("c", "a"), ("d", "e"), ("e", "f"), ("f", "d"), ("c", "d")]
    assert weak_components(graph_from(two_cycles)).sizes == [6]


def test_component_ties_go_to_smallest_id():
    g = graph_from([("x", "y"), ("a", "b")])
    assert weak_components(g).giant == {"a", "b"}


@given(pairs)
def test_restrict_identity(ps):
    g = InteractionGraph.from_pairs(ps)
    assert restrict(g, g.nodes()) == g


def test_restrict_examples():
    g = graph_from([("a", "b"), ("b", "c")])
    assert len(restrict(g, [])) == 0
    sub = restrict(g, {"a", "c"})
    assert sub.nodes() == ["a", "c"] and sub.number_of_edges() == 0


def test_giant_component():
    g = graph_from([("a", "b"), ("b", "c"), ("x", "y")])
    assert giant_component(g).nodes() == ["a", "b", "c"]


def test_adjacency_orientation():
    g = graph_from([("a", "b"), ("a", "b"), ("c", "a")])
    adj, order = g.adjacency()
    assert order == ["a", "b", "c"]
    assert adj[0, 1] == 2 and adj[2, 0] == 1 and adj[1, 0] == 0
    sym, _ = g.undirected_adjacency()
    assert sym[1, 0] == 2 and sym[0, 2] == 1


@given(pairs)
def test_edgelist_round_trip(tmp_path_factory, ps):
    g = InteractionGraph.from_pairs(ps)
    path = tmp_path_factory.mktemp("el") / "g.tsv"
    write_edgelist(g, path)
    back = read_edgelist(path)
    assert back.edges() == g.edges()


def test_edgelist_rejects_bad_lines(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("a\tb\n")
    with pytest.raises(ValueError):
        read_edgelist(p)
    p.write_text("a\tb\t0\n")
    with pytest.raises(ValueError):
        read_edgelist(p)


def test_graphml_attributes(tmp_path):
    g = graph_from([("a", "b"), ("a", "b")])
    write_graphml(g, tmp_path / "g.graphml", labels={"a": "Majority"}, positions={"a": (1.0, 2.0)})
    back = nx.read_graphml(tmp_path / "g.graphml")
    assert back.nodes["a"]["cluster"] == "Majority" and back.nodes["a"]["x"] == 1.0
    assert back.edges["a", "b"]["weight"] == 2


def test_retweet_network_edge_rule():
    rs = [
        InteractionRecord("1", "b", 0, Kind.ORIGINAL),
        InteractionRecord("2", "a", 1, Kind.RETWEET, "1", "b"),
        InteractionRecord("3", "a", 2, Kind.RETWEET, "1", "b"),
        InteractionRecord("4", "b", 3, Kind.RETWEET, "1", "b"),
        InteractionRecord("5", "c", 4, Kind.REPLY, "1", "b"),
    ]
    g = retweet_network(rs)
    assert g.edges() == [("a", "b", 2)] and g.self_loops == 1
