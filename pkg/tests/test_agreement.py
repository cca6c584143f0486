from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unets.agreement import (MEAG, AgreementEmbedding, AgreementError, AgreementGraph,
                             agreement_distance, check_agreement_embedding, embedding_change,
                             endpoint_agreement_distance, is_ordered, maf_distance,
                             mag_to_tbr_sequence, meag_embeddings, meag_search, ordered_embedding,
                             ordered_violations, random_embedding, verify_embedding)
from unets.corpus import CorpusSpec, corpus_networks, fixture, random_network
from unets.multigraph import MultiGraph, walk_vertices
from unets.phylo import PhyloNetwork
from unets.search import caterpillar, replug_distance, tbr_distance

from conftest import quartet


def net(name: str) -> PhyloNetwork:
    return PhyloNetwork(fixture(name))


def coverage(emb: AgreementEmbedding) -> Counter:
    return Counter(h for path in emb.paths.values() for h in path)


# -- agreement graphs and embeddings ------------------------------------------------


def test_host_itself_embeds_with_identity():
    n = net("agreement_network.unets")
    G = AgreementGraph.build([n.graph], 0)
    emb = check_agreement_embedding(G, n, 0)
    assert emb is not None and not verify_embedding(emb)
    assert all(len(p) == 1 for p in emb.paths.values())
    assert all(n.graph.labels[emb.vmap[v]] == l for v, l in G.graph.labels.items())


def test_example_graph_embeds_with_one_and_two_disagreement_edges():
    t, n = net("agreement_tree.unets"), net("agreement_network.unets")
    res = agreement_distance(t, n)
    assert res.distance == 2
    G = res.graph
    assert check_agreement_embedding(G, t, 1) is not None
    assert check_agreement_embedding(G, n, 2) is not None
    assert check_agreement_embedding(G, n, 1) is None
    assert check_agreement_embedding(G, t, 0) is None


def test_missing_label_rejected():
    q = quartet(1, 2, 3, 4)
    G = AgreementGraph.build([caterpillar(3).graph], 0)
    with pytest.raises(AgreementError):
        check_agreement_embedding(G, q, 0)


@pytest.mark.parametrize("parts, k, mode", [
    ([MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 3})], 0, "MAG"),          # labels not 1..n
    ([MultiGraph([0, 1, 2], [(0, 1), (1, 2)], {0: 1, 2: 2})], 0, "MAG"),  # degree-2 vertex
    ([MultiGraph([0, 1], [], {0: 1}), MultiGraph([0], [], {})], 0, "MAG"),  # unlabelled isolated
    ([MultiGraph([0, 1, 2, 3], [(0, 1), (0, 2), (0, 3)], {1: 1, 2: 2})], 0, "MAG"),  # sprout
])
def test_agreement_graph_validation(parts, k, mode):
    with pytest.raises(AgreementError):
        AgreementGraph.build(parts, k, mode)


def test_sprouts_allowed_in_endpoint_mode():
    g = MultiGraph([0, 1, 2, 3], [(0, 1), (0, 2), (0, 3)], {1: 1, 2: 2})
    G = AgreementGraph.build([g], 0, MEAG)
    assert G.sprout_tally() == 1 and G.m == 1 and G.k == 0


def test_tampered_embedding_fails_verification():
    t, n = net("agreement_tree.unets"), net("agreement_network.unets")
    emb = agreement_distance(t, n).embeddings[1]
    e = max(emb.paths, key=lambda x: len(emb.paths[x]))
    paths = dict(emb.paths)
    paths[e] = paths[e][:-1]
    assert verify_embedding(AgreementEmbedding(emb.graph, emb.host, paths, emb.vmap, emb.used))


# -- ordered embeddings -------------------------------------------------------------------


def test_ordering_keeps_zero_disagreement_embedding():
    q = quartet(1, 2, 3, 4)
    emb = agreement_distance(q, q).embeddings[0]
    assert ordered_embedding(emb) is emb and is_ordered(emb)


@settings(max_examples=120, deadline=None)
@given(st.integers(3, 6), st.integers(0, 3), st.integers(0, 10_000), st.integers(0, 2 ** 32))
def test_ordering_random_embeddings(n, r, index, seed):
    host = random_network(CorpusSpec(n, (r, r), seed=2), index)
    emb = random_embedding(host, random.Random(seed))
    if emb is None:
        return
    out = ordered_embedding(emb)
    assert ordered_violations(out) == []
    assert not verify_embedding(out)
    assert len(out.used) == len(emb.used)
    assert coverage(out) == coverage(emb)
    for j, e in enumerate(out.used):
        assert ("E", j) not in out.attachments()[e]


def test_mag_embeddings_are_ordered_and_certified():
    a, b = net("ad_lt_tbr_N.unets"), net("ad_lt_tbr_Nprime.unets")
    res = agreement_distance(a, b)
    for host, emb in zip((a, b), res.embeddings):
        assert is_ordered(emb) and not verify_embedding(emb)
        assert check_agreement_embedding(res.graph, host, len(emb.used)) is not None


# -- embedding change --------------------------------------------------------------------


def _change_sites(emb: AgreementEmbedding):
    """(u, v) sprout pairs where u sits inside the path of v's disagreement edge."""
    g = emb.graph.graph
    for e in emb.used:
        for u in g.edges[e]:
            for f in emb.used:
                if f == e:
                    continue
                for v in g.edges[f]:
                    walk = walk_vertices(emb.host, emb.vmap[v], list(emb.paths[f])
                                         if g.edges[f][0] == v else list(emb.paths[f])[::-1])
                    if emb.vmap[u] in walk[1:-1]:
                        yield u, v, walk


def test_embedding_change_splits_path_and_is_an_involution():
    rng = random.Random(5)
    checked = 0
    for index in range(400):
        host = random_network(CorpusSpec(5, (2, 3), seed=8), index)
        emb = random_embedding(host, rng)
        if emb is None:
            continue
        for u, v, walk in _change_sites(emb):
            out = embedding_change(emb, u, v)
            assert coverage(out) == coverage(emb)
            y = emb.vmap[u]
            # u moves to the start x of the old path of v's edge, v moves to y
            assert out.vmap[u] == walk[0] and out.vmap[v] == y
            (e,) = emb.graph.graph.incidence[u]
            (f,) = emb.graph.graph.incidence[v]
            new_f = walk_vertices(out.host, out.vmap[v], list(out.paths[f])
                                  if emb.graph.graph.edges[f][0] == v else list(out.paths[f])[::-1])
            assert new_f == walk[walk.index(y, 1):]
            new_e = walk_vertices(out.host, out.vmap[u], list(out.paths[e])
                                  if emb.graph.graph.edges[e][0] == u else list(out.paths[e])[::-1])
            assert new_e[:walk.index(y, 1) + 1] == walk[:walk.index(y, 1) + 1]
            back = embedding_change(out, v, u)
            assert dict(back.paths) == dict(emb.paths) and dict(back.vmap) == dict(emb.vmap)
            checked += 1
        if checked >= 20:
            break
    assert checked >= 20


def test_embedding_change_rejects_unattached_pairs():
    t, n = net("agreement_tree.unets"), net("agreement_network.unets")
    emb = agreement_distance(t, n).embeddings[1]
    p, q = emb.graph.graph.edges[emb.used[0]]
    with pytest.raises(AgreementError):
        embedding_change(emb, p, q)


# -- distances ------------------------------------------------------------------------------


def test_identical_networks_have_distance_zero():
    n = net("agreement_network.unets")
    res = agreement_distance(n, n)
    assert res.distance == 0 and res.graph.m == 1
    assert endpoint_agreement_distance(n, n) == 0
    d, G = meag_search(n, n)
    assert d == 0 and G.m == 1 and G.subgraph(0).code() == n.code


def test_counterexample_pair_agreement_distance():
    a, b = net("ad_lt_tbr_N.unets"), net("ad_lt_tbr_Nprime.unets")
    res = agreement_distance(a, b)
    assert res.distance == 2 == res.graph.k
    assert agreement_distance(b, a).distance == 2


def test_displayed_tree_distance_equals_tier():
    t, n = net("display_tree.unets"), net("display_network.unets")
    assert agreement_distance(t, n).distance == n.tier == tbr_distance(t, n).distance


def test_endpoint_example():
    a, b = net("endpoint_a.unets"), net("endpoint_b.unets")
    assert agreement_distance(a, b).distance == 1
    assert endpoint_agreement_distance(a, b) == 2
    d, G = meag_search(a, b)
    assert d == 2 and G.mode == MEAG
    ea, eb = meag_embeddings(a, b, G)
    assert ea is not None and eb is not None


def test_spr_trees_have_ead_one():
    t = caterpillar(5)
    other = PhyloNetwork(MultiGraph(t.graph.vertices, t.graph.edges,
                                    {v: {1: 2, 2: 1}.get(l, l) for v, l in t.graph.labels.items()}))
    s = PhyloNetwork(MultiGraph(t.graph.vertices, t.graph.edges,
                                {v: {2: 3, 3: 2}.get(l, l) for v, l in t.graph.labels.items()}))
    assert other.code == t.code  # swapping a cherry changes nothing
    assert endpoint_agreement_distance(t, s) == 1 == replug_distance(t, s).distance


def test_meag_matches_replug_on_mixed_tiers():
    nets = corpus_networks(CorpusSpec(4, (0, 1)))
    for a, b in [(nets[0], nets[5]), (nets[3], nets[24]), (nets[1], nets[20])]:
        assert meag_search(a, b)[0] == replug_distance(a, b).distance


def test_maf_small_cases():
    q1, q2 = quartet(1, 2, 3, 4), quartet(1, 3, 2, 4)
    assert maf_distance(q1, q2)[0] == 1
    d, forest = maf_distance(q1, q1)
    assert d == 0 and len(forest) == 1
    with pytest.raises(AgreementError):
        maf_distance(q1, net("agreement_network.unets"))


def test_different_leaf_sets_rejected():
    with pytest.raises(AgreementError):
        agreement_distance(quartet(1, 2, 3, 4), caterpillar(5))


# -- MAG to TBR sequence -----------------------------------------------------------------------


def test_sequence_for_identical_networks_is_empty():
    q = quartet(1, 2, 3, 4)
    res = agreement_distance(q, q)
    assert len(mag_to_tbr_sequence(q, q, res.graph, *res.embeddings)) == 0


def test_sequence_for_trees_at_distance_one():
    trees = corpus_networks(CorpusSpec(5, (0, 0)))
    done = 0
    for a in trees[:4]:
        for b in trees:
            if tbr_distance(a, b, witness=False).distance != 1:
                continue
            res = agreement_distance(a, b)
            assert res.distance == 1
            seq = mag_to_tbr_sequence(a, b, res.graph, *res.embeddings)
            assert len(seq) <= 2 and seq.replay()[-1].code == b.code
            done += 1
    assert done > 0


def test_sequence_for_counterexample_pair():
    a, b = net("ad_lt_tbr_N.unets"), net("ad_lt_tbr_Nprime.unets")
    res = agreement_distance(a, b)
    seq = mag_to_tbr_sequence(a, b, res.graph, *res.embeddings)
    assert len(seq) <= 4 and seq.replay()[-1].code == b.code


def test_sequence_rejects_foreign_embeddings():
    a, b = quartet(1, 2, 3, 4), quartet(1, 3, 2, 4)
    res = agreement_distance(a, b)
    other = agreement_distance(a, b)
    with pytest.raises(AgreementError):
        mag_to_tbr_sequence(a, b, other.graph if other.graph is not res.graph else
                            AgreementGraph.build([a.graph], 0), *res.embeddings)
