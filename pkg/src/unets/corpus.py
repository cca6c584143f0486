"""Seeded instance generation and a harness that checks distance relations.

A corpus is either every proper network with ``n_leaves`` leaves in a tier
range (``count == 0``) or ``count`` seeded random pairs.  Each claim is a
relation between distances from independent engines; the harness reports
pass/fail counts and a serialized counterexample for every failure.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .agreement import (agreement_distance, maf_distance, mag_to_tbr_sequence, meag_search)
from .multigraph import MultiGraph
from .netformat import parse, serialize
from .phylo import PhyloNetwork, displays
from .rearrange import _add_between, _pairs
from .search import (NeighborhoodCache, SearchConfig, code_path, default_cache, enumerate_networks)

RECIPE = "leaf-insertion tree + random TBR+ lifts"


@dataclass(frozen=True)
class CorpusSpec:
    n_leaves: int
    tiers: Tuple[int, int] = (0, 0)
    count: int = 0
    seed: int = 0
    recipe: str = RECIPE

    def __post_init__(self):
        lo, hi = self.tiers
        if self.n_leaves < 2 or not 0 <= lo <= hi or self.count < 0:
            raise ValueError(f"invalid corpus spec {self}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _rng(spec: CorpusSpec, index: int, salt: str = "") -> random.Random:
    return random.Random(f"unets:{spec.seed}:{spec.n_leaves}:{index}:{salt}")


def random_tree(n: int, rng: random.Random) -> MultiGraph:
    """Uniform unrooted binary tree on leaves 1..n by sequential leaf insertion."""
    if n == 1:
        return MultiGraph([0], [], {0: 1})
    g = MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 2})
    for leaf in range(3, n + 1):
        e = rng.choice(sorted(g.edges))
        u, v = g.edges[e]
        edges = dict(g.edges)
        mid, new = g.next_vertex, g.next_vertex + 1
        del edges[e]
        ne = g.next_edge
        edges[ne], edges[ne + 1], edges[ne + 2] = (u, mid), (mid, v), (mid, new)
        labels = dict(g.labels)
        labels[new] = leaf
        g = MultiGraph._raw(g.vertices | {mid, new}, edges, labels, new + 1, ne + 3)
    return g


def random_lift(g: MultiGraph, rng: random.Random) -> MultiGraph:
    """One uniformly chosen TBR+ move (add an edge between two subdivided edges)."""
    x, y = rng.choice(list(_pairs(g)))
    return _add_between(g, x, y)


def random_network(spec: CorpusSpec, index: int) -> PhyloNetwork:
    """A random proper network in the spec's tier range."""
    rng = _rng(spec, index)
    lo, hi = spec.tiers
    tier = rng.randint(lo, hi)
    g = random_tree(spec.n_leaves, rng)
    for _ in range(tier):
        g = random_lift(g, rng)
    return PhyloNetwork(g)


def lifted_pair(spec: CorpusSpec, index: int) -> Tuple[PhyloNetwork, PhyloNetwork, int]:
    """(tree T, network N over T by r lifts, r) with r drawn from the tier range."""
    rng = _rng(spec, index, "lift")
    lo, hi = spec.tiers
    r = rng.randint(max(lo, 1), max(hi, 1))
    t = random_tree(spec.n_leaves, rng)
    g = t
    for _ in range(r):
        g = random_lift(g, rng)
    return PhyloNetwork(t), PhyloNetwork(g), r


def corpus_networks(spec: CorpusSpec, cache: Optional[NeighborhoodCache] = None) -> List[PhyloNetwork]:
    if spec.count == 0:
        out: List[PhyloNetwork] = []
        lo, hi = spec.tiers
        for r in range(lo, hi + 1):
            nets = enumerate_networks(spec.n_leaves, r, cache)
            out.extend(nets[c] for c in sorted(nets))
        return out
    return [random_network(spec, i) for i in range(2 * spec.count)]


def corpus_pairs(spec: CorpusSpec, nets: Sequence[PhyloNetwork]) -> List[Tuple[int, int]]:
    if spec.count == 0:
        return list(combinations(range(len(nets)), 2))
    return [(2 * i, 2 * i + 1) for i in range(spec.count)]


# -- pinned fixtures -----------------------------------------------------------


def fixture_text(name: str) -> str:
    return resources.files("unets").joinpath("fixtures", name).read_text(encoding="ascii")


def fixture(name: str) -> MultiGraph:
    return parse(fixture_text(name))


def fixture_names() -> List[str]:
    root = resources.files("unets").joinpath("fixtures")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".unets"))


# AD < TBR example: (file a, file b, AD, EAD, TBR)
PINNED_AD_LT_TBR = ("ad_lt_tbr_N.unets", "ad_lt_tbr_Nprime.unets", 2, 2, 3)


# -- distances with memoisation -------------------------------------------------


class Distances:
    """Memoised distances between networks, keyed by unordered code pairs."""

    def __init__(self, cache: Optional[NeighborhoodCache] = None, slack: int = 1):
        self.cache = cache if cache is not None else default_cache()
        self.slack = slack
        self.memo: Dict[Tuple[str, bytes, bytes], int] = {}
        self.ad_results: Dict[Tuple[bytes, bytes], object] = {}

    def _key(self, metric: str, a: PhyloNetwork, b: PhyloNetwork):
        x, y = a.code, b.code
        return (metric, x, y) if x <= y else (metric, y, x)

    def bfs(self, op: str, a: PhyloNetwork, b: PhyloNetwork, slack: Optional[int] = None) -> int:
        s = self.slack if slack is None else slack
        key = self._key(f"{op}+{s}", a, b)
        if key not in self.memo:
            codes, _, _ = code_path(a, b, SearchConfig(op, tier_slack=s), self.cache)
            self.memo[key] = len(codes) - 1
        return self.memo[key]

    def ad(self, a: PhyloNetwork, b: PhyloNetwork) -> int:
        key = self._key("ad", a, b)
        if key not in self.memo:
            res = agreement_distance(a, b)
            self.memo[key] = res.distance
            self.ad_results[(a.code, b.code)] = res
        return self.memo[key]

    def ad_directed(self, a: PhyloNetwork, b: PhyloNetwork) -> int:
        """AD computed with the arguments in the given order (no symmetric memo)."""
        key = ("ad>", a.code, b.code)
        if key not in self.memo:
            res = agreement_distance(a, b)
            self.memo[key] = res.distance
            self.ad_results[(a.code, b.code)] = res
        return self.memo[key]

    def ead(self, a: PhyloNetwork, b: PhyloNetwork) -> int:
        return self.bfs("replug", a, b)

    def ead_directed(self, a: PhyloNetwork, b: PhyloNetwork) -> int:
        key = ("ead>", a.code, b.code)
        if key not in self.memo:
            codes, _, _ = code_path(a, b, SearchConfig("replug", tier_slack=self.slack), self.cache)
            self.memo[key] = len(codes) - 1
        return self.memo[key]


# -- report -----------------------------------------------------------------------


@dataclass
class ClaimResult:
    name: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    counterexamples: List[str] = field(default_factory=list)
    runtime: float = 0.0

    def record(self, ok: bool, witness: Callable[[], str]) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.counterexamples) < 5:
                self.counterexamples.append(witness())


@dataclass
class VerificationReport:
    spec: CorpusSpec
    claims: Dict[str, ClaimResult]
    window_unstable: List[str] = field(default_factory=list)
    tallies: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    networks: int = 0
    pairs: int = 0

    @property
    def ok(self) -> bool:
        return all(c.failed == 0 for c in self.claims.values())

    def lines(self, timings: bool = False) -> List[str]:
        s = self.spec
        out = [f"corpus n={s.n_leaves} tiers={s.tiers[0]}..{s.tiers[1]} count={s.count} "
               f"seed={s.seed} networks={self.networks} pairs={self.pairs}"]
        for name in sorted(self.claims):
            c = self.claims[name]
            line = (f"claim={name} status={'pass' if c.failed == 0 else 'fail'} "
                    f"passed={c.passed} failed={c.failed} skipped={c.skipped}")
            if timings:
                line += f" seconds={c.runtime:.2f}"
            out.append(line)
            for w in c.counterexamples:
                out.append(f"counterexample claim={name} {w}")
        for name in sorted(self.tallies):
            equal, strict = self.tallies[name]
            out.append(f"tally claim={name} equal={equal} strict={strict}")
        out.append(f"window_unstable={len(self.window_unstable)}")
        for w in self.window_unstable:
            out.append(f"unstable {w}")
        out.append(f"result={'pass' if self.ok else 'fail'}")
        return out

    def text(self, timings: bool = False) -> str:
        return "\n".join(self.lines(timings)) + "\n"


def _witness(*nets: PhyloNetwork, **values) -> Callable[[], str]:
    def make() -> str:
        parts = [f"{k}={v}" for k, v in sorted(values.items())]
        for i, n in enumerate(nets):
            flat = serialize(n.graph).strip().replace("\n", ";")
            parts.append(f"net{i}={flat!r}")
        return " ".join(parts)
    return make


CLAIMS = ("ad_metric", "ead_metric", "ad_tbr", "ad_pr", "ad_ead", "ead_pr", "ad1_tbr1",
          "tree_maf", "tree_network", "displaying", "meag", "mag_sequence", "window", "pinned")


def verify_claims(spec: CorpusSpec, claims: Optional[Iterable[str]] = None,
                  cache: Optional[NeighborhoodCache] = None,
                  lifted: int = 0) -> VerificationReport:
    """Check the selected claims on the corpus (and pinned fixtures for ``pinned``).

    ``lifted`` adds that many seeded (tree, lifted network) pairs to the
    ``displaying`` claim.
    """
    chosen = list(CLAIMS if claims is None else claims)
    unknown = set(chosen) - set(CLAIMS)
    if unknown:
        raise ValueError(f"unknown claims {sorted(unknown)}")
    nets = corpus_networks(spec, cache)
    pairs = corpus_pairs(spec, nets)
    dist = Distances(cache)
    report = VerificationReport(spec, {c: ClaimResult(c) for c in chosen},
                                networks=len(nets), pairs=len(pairs))

    def run(name: str, body: Callable[[ClaimResult], None]) -> None:
        if name in report.claims:
            t0 = time.perf_counter()
            body(report.claims[name])
            report.claims[name].runtime += time.perf_counter() - t0

    def metric(res: ClaimResult, directed: Callable, sym: Callable) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            x, y = directed(a, b), directed(b, a)
            res.record(x == y, _witness(a, b, forward=x, backward=y, check="symmetry"))
            res.record((x == 0) == (a.code == b.code), _witness(a, b, value=x, check="identity"))
        for a in nets:
            v = directed(a, a)
            res.record(v == 0, _witness(a, value=v, check="identity"))
        for t in _triples(spec, len(nets)):
            a, b, c = (nets[i] for i in t)
            ab, bc, ac = sym(a, b), sym(b, c), sym(a, c)
            res.record(ac <= ab + bc and ab <= ac + bc and bc <= ab + ac,
                       _witness(a, b, c, ab=ab, bc=bc, ac=ac, check="triangle"))

    run("ad_metric", lambda r: metric(r, dist.ad_directed, dist.ad))
    run("ead_metric", lambda r: metric(r, dist.ead_directed, dist.ead))

    def bound(name: str, lo_f, hi_f, factor: int) -> None:
        def body(res: ClaimResult) -> None:
            equal = strict = 0
            for i, j in pairs:
                a, b = nets[i], nets[j]
                x, y = lo_f(a, b), hi_f(a, b)
                res.record(x <= y <= factor * x, _witness(a, b, low=x, high=y, factor=factor))
                equal += x == y
                strict += x < y
            report.tallies[name] = (equal, strict)
        run(name, body)

    bound("ad_tbr", dist.ad, lambda a, b: dist.bfs("tbr", a, b), 2)
    bound("ad_pr", dist.ad, lambda a, b: dist.bfs("pr", a, b), 4)
    bound("ad_ead", dist.ad, dist.ead, 2)
    bound("ead_pr", dist.ead, lambda a, b: dist.bfs("pr", a, b), 3)

    def ad1(res: ClaimResult) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            x, y = dist.ad(a, b), dist.bfs("tbr", a, b)
            res.record((x == 1) == (y == 1), _witness(a, b, ad=x, tbr=y))
    run("ad1_tbr1", ad1)

    def tree_maf(res: ClaimResult) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            if not (a.is_tree() and b.is_tree()):
                continue
            m, _ = maf_distance(a, b)
            x, y = dist.ad(a, b), dist.bfs("tbr", a, b)
            res.record(m == x == y, _witness(a, b, maf=m, ad=x, tbr=y))
    run("tree_maf", tree_maf)

    def tree_network(res: ClaimResult) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            if a.is_tree() == b.is_tree():
                continue
            x, y = dist.ad(a, b), dist.bfs("tbr", a, b)
            res.record(x == y, _witness(a, b, ad=x, tbr=y))
    run("tree_network", tree_network)

    def displaying(res: ClaimResult) -> None:
        cases = []
        for i, j in pairs:
            a, b = nets[i], nets[j]
            t, n = (a, b) if a.is_tree() else (b, a)
            if t.is_tree() and not n.is_tree() and displays(n, t):
                cases.append((t, n, n.tier))
        for idx in range(lifted):
            cases.append(lifted_pair(spec, idx))
        for t, n, r in cases:
            shown = displays(n, t)
            x, y = dist.ad(t, n), dist.bfs("tbr", t, n)
            res.record(shown and x == y == r, _witness(t, n, displays=shown, ad=x, tbr=y, r=r))
    run("displaying", displaying)

    def meag(res: ClaimResult) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            m, _ = meag_search(a, b)
            e = dist.ead(a, b)
            res.record(m == e, _witness(a, b, meag=m, replug=e))
    run("meag", meag)

    def mag_seq(res: ClaimResult) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            d = dist.ad_directed(a, b)
            r = dist.ad_results[(a.code, b.code)]
            if (r.embeddings[0].host, r.embeddings[1].host) != (a.graph, b.graph):
                r = agreement_distance(a, b)  # memo came from isomorphic twins
            try:
                seq = mag_to_tbr_sequence(a, b, r.graph, *r.embeddings)
                end = seq.replay()[-1] if seq.moves else a
                ok = len(seq) <= 2 * d and end.code == b.code
            except Exception as exc:  # recorded, never skipped
                ok, seq = False, None
                res.counterexamples.append(f"error={type(exc).__name__}:{exc}")
            res.record(ok, _witness(a, b, ad=d, length=len(seq) if seq else -1))
    run("mag_sequence", mag_seq)

    def window(res: ClaimResult) -> None:
        for i, j in pairs:
            a, b = nets[i], nets[j]
            for op in ("tbr", "pr", "replug"):
                x, y = dist.bfs(op, a, b), dist.bfs(op, a, b, slack=dist.slack + 1)
                ok = x == y
                res.record(ok, _witness(a, b, op=op, distance=x, widened=y))
                if not ok:
                    report.window_unstable.append(f"op={op} pair={i},{j} distance={x} widened={y}")
    run("window", window)

    def pinned(res: ClaimResult) -> None:
        fa, fb, want_ad, want_ead, want_tbr = PINNED_AD_LT_TBR
        a, b = PhyloNetwork(fixture(fa)), PhyloNetwork(fixture(fb))
        x, e, t = dist.ad(a, b), dist.ead(a, b), dist.bfs("tbr", a, b)
        res.record((x, e, t) == (want_ad, want_ead, want_tbr), _witness(a, b, ad=x, ead=e, tbr=t))
    run("pinned", pinned)
    return report


def _triples(spec: CorpusSpec, n: int) -> Iterable[Tuple[int, int, int]]:
    if spec.count == 0:
        return combinations(range(n), 3)
    return [(i, i + 1, i + 2) for i in range(n - 2)]


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line entry point (see :mod:`unets.cli`)."""
    from .cli import main
    return main(argv)
