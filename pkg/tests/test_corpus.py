from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unets.corpus import (CLAIMS, CorpusSpec, Distances, corpus_networks, corpus_pairs, fixture,
                          fixture_names, fixture_text, lifted_pair, random_network, verify_claims)
from unets.phylo import PhyloNetwork, displays


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(0, 3), st.integers(0, 2 ** 32), st.integers(0, 1000))
def test_random_network_properties(n, r, seed, index):
    spec = CorpusSpec(n, (r, r), seed=seed)
    a = random_network(spec, index)
    assert PhyloNetwork(a.graph).tier == r and a.n == n
    assert random_network(spec, index).code == a.code
    if r == 0:
        assert a.is_tree()


def test_tier_range_is_respected():
    spec = CorpusSpec(5, (1, 3), seed=4)
    tiers = {random_network(spec, i).tier for i in range(60)}
    assert tiers == {1, 2, 3}


@pytest.mark.parametrize("kwargs", [dict(n_leaves=1), dict(n_leaves=4, tiers=(2, 1)),
                                    dict(n_leaves=4, count=-1), dict(n_leaves=4, seed=-1)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        CorpusSpec(**kwargs)


def test_lifted_pairs_display_their_tree():
    spec = CorpusSpec(6, (1, 3), seed=1)
    for i in range(10):
        t, n, r = lifted_pair(spec, i)
        assert t.is_tree() and n.tier == r and displays(n, t)


def test_full_and_sampled_corpora():
    full = CorpusSpec(4, (0, 1))
    nets = corpus_networks(full)
    assert len(nets) == 27 and len(corpus_pairs(full, nets)) == 351
    sampled = CorpusSpec(5, (0, 1), count=7, seed=2)
    nets = corpus_networks(sampled)
    assert len(nets) == 14 and corpus_pairs(sampled, nets) == [(2 * i, 2 * i + 1) for i in range(7)]


def test_fixtures_are_ascii_and_commented():
    names = fixture_names()
    assert "ad_lt_tbr_N.unets" in names and "improper.unets" in names
    for name in names:
        text = fixture_text(name)
        assert text.startswith("unets 1\n#")
        assert fixture(name).vertices


def test_report_is_deterministic():
    spec = CorpusSpec(3, (0, 1))
    claims = [c for c in CLAIMS if c != "pinned"]
    first = verify_claims(spec, claims).text()
    second = verify_claims(spec, claims).text()
    assert first == second and first.endswith("result=pass\n")
    assert "seconds=" not in first


def test_report_records_failures_with_counterexamples():
    spec = CorpusSpec(4, (0, 0))
    report = verify_claims(spec, ["ad_tbr"])
    res = report.claims["ad_tbr"]
    res.record(False, lambda: "net0='x'")
    assert not report.ok and "counterexample claim=ad_tbr net0='x'" in report.text()
    assert "result=fail" in report.text()


def test_unknown_claim_rejected():
    with pytest.raises(ValueError):
        verify_claims(CorpusSpec(3, (0, 0)), ["nope"])


def test_distance_memo_is_symmetric():
    nets = corpus_networks(CorpusSpec(4, (0, 1)))
    d = Distances()
    a, b = nets[0], nets[-1]
    assert d.ad(a, b) == d.ad(b, a) == d.ad_directed(b, a)
    assert d.bfs("tbr", a, b) == d.bfs("tbr", b, a)
    assert d.ead(a, b) == d.ead_directed(b, a)


def test_displaying_claim_with_lifted_pairs():
    report = verify_claims(CorpusSpec(4, (1, 1), seed=3), ["displaying"], lifted=5)
    assert report.ok and report.claims["displaying"].passed >= 5


def test_bound_claims_tally_equal_and_strict_cases():
    report = verify_claims(CorpusSpec(4, (0, 1), count=6, seed=1), ["ad_tbr", "ad_ead"])
    for name in ("ad_tbr", "ad_ead"):
        equal, strict = report.tallies[name]
        assert equal + strict == report.claims[name].passed == 6
        assert f"tally claim={name} equal={equal} strict={strict}" in report.text()
