from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unets.corpus import CorpusSpec, corpus_networks, fixture, random_network
from unets.multigraph import GraphError, MultiGraph
from unets.phylo import (NetworkError, PhyloNetwork, ReplugNetwork, displays, is_proper,
                         tier, validate_network)

from conftest import brute_cyclomatic, brute_displays, quartet


def test_quartet_is_valid_tree():
    net = validate_network(quartet(1, 2, 3, 4).graph)
    assert net.tier == 0 and net.is_tree() and net.n == 4


def test_pendant_unlabelled_blob_is_improper():
    g = fixture("improper.unets")
    ok, witness = is_proper(g)
    assert not ok
    assert set(g.edges[witness]) == {0, 1}  # the edge from leaf 1 into the blob
    with pytest.raises(NetworkError) as err:
        validate_network(g)
    assert err.value.clause == "properness"


def test_tree_plus_internal_edge_has_tier_one():
    # caterpillar 1,2 | 3 | 4,5 with an extra edge between the two outer spine edges
    g = MultiGraph(range(12), [(0, 5), (1, 5), (5, 10), (10, 6), (6, 2), (6, 11), (11, 7),
                               (7, 3), (7, 4), (10, 11)], {0: 1, 1: 2, 2: 3, 3: 4, 4: 5})
    g = MultiGraph(g.vertices - {8, 9}, g.edges, g.labels)
    assert tier(validate_network(g)) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(0, 3), st.integers(0, 10_000))
def test_tier_matches_brute_force_deletions(n, r, index):
    net = random_network(CorpusSpec(n, (r, r), seed=9), index)
    assert net.tier == r == brute_cyclomatic(net.graph)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 7), st.integers(0, 10_000))
def test_trees_are_proper(n, index):
    assert is_proper(random_network(CorpusSpec(n, (0, 0)), index).graph) == (True, None)


def test_parallel_edges_never_cut():
    g = MultiGraph([0, 1, 2, 3], [(0, 2), (2, 3), (2, 3), (3, 1)], {0: 1, 1: 2})
    assert is_proper(g) == (True, None)
    assert validate_network(g).tier == 1


@pytest.mark.parametrize("graph, clause", [
    (MultiGraph([0, 1], [(0, 1)], {0: 1}), "labelling"),
    (MultiGraph([0, 1, 2], [(0, 1), (1, 2)], {0: 1, 2: 2}), "degree"),
    (MultiGraph([0, 1, 2, 3], [(0, 1), (2, 3)], {0: 1, 1: 2, 2: 3, 3: 4}), "connectivity"),
    (MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 3}), "labelling"),
    (MultiGraph([0, 1, 2], [(0, 1), (1, 1), (1, 2)], {0: 1, 2: 2}), "degree"),
])
def test_rejections_name_their_clause(graph, clause):
    with pytest.raises(NetworkError) as err:
        validate_network(graph)
    assert err.value.clause == clause


def test_single_edge_and_singleton_networks():
    assert validate_network(MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 2})).tier == 0
    assert validate_network(MultiGraph([0], [], {0: 1})).n == 1


def test_properness_needs_connected_graph():
    with pytest.raises(GraphError):
        is_proper(MultiGraph([0, 1], [], {0: 1, 1: 2}))


def test_replug_network_allows_loops_and_disconnection():
    with pytest.raises(NetworkError):
        ReplugNetwork(MultiGraph([0, 1, 2], [(0, 1), (1, 2)], {0: 1, 2: 2}))
    r = ReplugNetwork(MultiGraph([0, 1, 2, 3, 4, 5], [(0, 1), (2, 1), (1, 3), (3, 4), (3, 4), (4, 5), (5, 5)],
                                 {0: 1, 2: 2}))
    assert r.n == 2 and r.tier == 2
    s = ReplugNetwork(MultiGraph([0, 1], [], {0: 1, 1: 2}))
    assert s.tier == -1


def test_displays_self_and_quartets():
    q1, q2 = quartet(1, 2, 3, 4), quartet(1, 3, 2, 4)
    assert displays(q1, q1)
    assert not displays(q2, q1)
    assert brute_displays(q2.graph, q1.graph) is False


def test_display_fixture_pair():
    t, n = PhyloNetwork(fixture("display_tree.unets")), PhyloNetwork(fixture("display_network.unets"))
    assert displays(n, t) and displays(n, n)


def test_displays_matches_brute_force_on_four_leaves():
    nets = corpus_networks(CorpusSpec(4, (0, 1)))
    trees = [x for x in nets if x.is_tree()]
    for host in nets:
        for t in trees:
            assert displays(host, t) == brute_displays(host.graph, t.graph)


def test_displays_rejects_different_leaf_sets():
    with pytest.raises(ValueError):
        displays(quartet(1, 2, 3, 4), PhyloNetwork(MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 2})))
