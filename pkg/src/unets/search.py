"""Exact rearrangement distances by breadth-first search, and tier enumeration.

Distances are computed over canonical codes inside a tier window.  Only the
distance and the sequence of codes are found by the search; the concrete
moves of the witness are recovered afterwards by regenerating neighbourhoods
along the code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .multigraph import MultiGraph, refinement_invariant, remove_edge
from .phylo import PhyloNetwork, ReplugNetwork
from .rearrange import (OPERATION_KINDS, TBR0, TBR_PLUS, TIER_DELTA, Move, Network,
                        RearrangementSequence, find_move, neighbors)


class SearchError(RuntimeError):
    pass


class BudgetExhausted(SearchError):
    """The node budget ran out before the two networks were connected."""

    def __init__(self, explored: int):
        super().__init__(f"node budget exhausted after {explored} networks")
        self.explored = explored


class Unreachable(SearchError):
    """No sequence connects the two networks inside the tier window."""


@dataclass(frozen=True)
class SearchConfig:
    operation: str = "tbr"
    tier_window: Optional[Tuple[int, int]] = None
    tier_slack: int = 1
    node_budget: int = 2_000_000
    bidirectional: bool = True
    meet_probe: bool = True

    def window_for(self, ta: int, tb: int) -> Tuple[int, int]:
        if self.tier_window is not None:
            return self.tier_window
        return min(ta, tb), max(ta, tb) + self.tier_slack


@dataclass
class DistanceResult:
    distance: int
    witness: Optional[RearrangementSequence]
    explored: int
    window: Tuple[int, int]
    path_codes: List[bytes] = field(default_factory=list)


class NeighborhoodCache:
    """Neighbour code lists keyed by (operation, move kind, code).

    Also keeps one representative network per code so that cached codes can
    be expanded again.  A replug network and a proper network on the same
    graph share a code, so each kind gets its own registry.
    """

    def __init__(self):
        self._nbrs: Dict[Tuple[str, str, bytes], Tuple[bytes, ...]] = {}
        self.registry: Dict[bytes, PhyloNetwork] = {}
        self.replug_registry: Dict[bytes, ReplugNetwork] = {}
        self.hits = 0
        self.misses = 0

    def register(self, net: Network) -> bytes:
        space = self.replug_registry if isinstance(net, ReplugNetwork) else self.registry
        space.setdefault(net.code, net)
        return net.code

    def network(self, operation: str, code: bytes) -> Network:
        return (self.replug_registry if operation == "replug" else self.registry)[code]

    def tier_of(self, code: bytes, operation: str = "tbr") -> int:
        return self.network(operation, code).tier

    def kind_neighbors(self, operation: str, kind: str, code: bytes) -> Tuple[bytes, ...]:
        key = (operation, kind, code)
        got = self._nbrs.get(key)
        if got is not None:
            self.hits += 1
            return got
        self.misses += 1
        net = self.network(operation, code)
        out = []
        for nb in neighbors(net, operation, (kind,)):
            out.append(self.register(nb.network))
        got = tuple(out)
        self._nbrs[key] = got
        return got

    def neighbors(self, operation: str, code: bytes, window: Tuple[int, int]) -> List[bytes]:
        t = self.tier_of(code, operation)
        out = set()
        for kind in OPERATION_KINDS[operation]:
            if not window[0] <= t + TIER_DELTA[kind] <= window[1]:
                continue
            out.update(self.kind_neighbors(operation, kind, code))
        return sorted(out)

    def __len__(self) -> int:
        return len(self._nbrs)


_default_cache = NeighborhoodCache()


def default_cache() -> NeighborhoodCache:
    return _default_cache


def _as_kind(net: Network, operation: str) -> Network:
    if operation == "replug" and isinstance(net, PhyloNetwork):
        return ReplugNetwork.from_network(net)
    return net


def code_path(a: Network, b: Network, config: SearchConfig = SearchConfig(),
              cache: Optional[NeighborhoodCache] = None) -> Tuple[List[bytes], int, Tuple[int, int]]:
    """Shortest code path from ``a`` to ``b``; returns (codes, explored, window)."""
    cache = cache if cache is not None else _default_cache
    op = config.operation
    a, b = _as_kind(a, op), _as_kind(b, op)
    if a.n != b.n or sorted(a.graph.labels.values()) != sorted(b.graph.labels.values()):
        raise ValueError("networks have different leaf sets")
    window = config.window_for(a.tier, b.tier)
    if not (window[0] <= a.tier <= window[1] and window[0] <= b.tier <= window[1]):
        raise ValueError(f"tier window {window} excludes an endpoint")
    ca, cb = cache.register(a), cache.register(b)
    if ca == cb:
        return [ca], 1, window

    par = [{ca: None}, {cb: None}]
    front = [[ca], [cb]]
    explored = 2
    if not config.bidirectional:
        par[1] = {cb: None}
    probe = op == "tbr" and config.meet_probe and config.bidirectional
    while True:
        if config.bidirectional:
            side = 0 if len(front[0]) <= len(front[1]) else 1
        else:
            side = 0
        if not front[side]:
            raise Unreachable(f"no path inside tier window {window}")
        other = 1 - side
        if probe:
            hit = _probe_meet(cache, front[side], front[other])
            if hit is not None:
                x, y = hit
                pair = (x, y) if side == 0 else (y, x)
                left = _trace(par[0], pair[0])
                right = _trace(par[1], pair[1])
                return left[::-1] + right, explored, window
        new: List[bytes] = []
        mine = par[side]
        for x in sorted(front[side]):
            for y in cache.neighbors(op, x, window):
                if y not in mine:
                    mine[y] = x
                    new.append(y)
                    explored += 1
            if explored > config.node_budget:
                raise BudgetExhausted(explored)
        front[side] = new
        meets = [y for y in new if y in par[other]]
        if meets:
            m = min(meets)
            left = _trace(par[0], m)
            right = _trace(par[1], m)
            return left[::-1] + right[1:], explored, window


class TbrMeetProbe:
    """Finds frontier pairs that are exactly one TBR move apart.

    Removing one edge (and suppressing) maps a network to its single-edge
    removals.  Two networks in the same tier are one TBR0 apart iff they
    share a removal; a network is one TBR+ above another iff the other is
    among its removals.  Candidate pairs are found through a cheap
    refinement invariant and then decided exactly with canonical codes.
    """

    def __init__(self):
        self._cheap: Dict[bytes, frozenset] = {}
        self._exact: Dict[bytes, frozenset] = {}

    def _removals(self, net: Network) -> List[MultiGraph]:
        g = net.graph
        return [remove_edge(g, e) for e in sorted(g.edges) if not g.is_loop(e)]

    def cheap(self, net: Network) -> frozenset:
        got = self._cheap.get(net.code)
        if got is None:
            got = self._cheap[net.code] = frozenset(refinement_invariant(h) for h in self._removals(net))
        return got

    def exact(self, net: Network) -> frozenset:
        got = self._exact.get(net.code)
        if got is None:
            got = self._exact[net.code] = frozenset(h.code() for h in self._removals(net))
        return got

    def adjacent(self, x: Network, y: Network) -> bool:
        if x.code == y.code:
            return False
        if x.tier == y.tier:
            return not self.exact(x).isdisjoint(self.exact(y))
        if x.tier == y.tier + 1:
            return y.code in self.exact(x)
        if y.tier == x.tier + 1:
            return x.code in self.exact(y)
        return False

    def meet(self, xs: Sequence[Network], ys: Sequence[Network]) -> Optional[Tuple[bytes, bytes]]:
        """Least (x, y) code pair with x in ``xs`` one move from y in ``ys``."""
        same: Dict[Tuple, List[Network]] = {}
        whole: Dict[Tuple, List[Network]] = {}
        below: Dict[Tuple, List[Network]] = {}
        for y in sorted(ys, key=lambda n: n.code):
            whole.setdefault((y.tier, refinement_invariant(y.graph)), []).append(y)
            for key in self.cheap(y):
                same.setdefault((y.tier, key), []).append(y)
                below.setdefault((y.tier - 1, key), []).append(y)
        for x in sorted(xs, key=lambda n: n.code):
            cands: Dict[bytes, Network] = {}
            for key in self.cheap(x):
                for y in same.get((x.tier, key), ()):
                    cands[y.code] = y
                for y in whole.get((x.tier - 1, key), ()):
                    cands[y.code] = y
            for y in below.get((x.tier, refinement_invariant(x.graph)), ()):
                cands[y.code] = y
            for c in sorted(cands):
                if self.adjacent(x, cands[c]):
                    return x.code, c
        return None


_shared_probe = TbrMeetProbe()


def _probe_meet(cache: NeighborhoodCache, mine: Sequence[bytes],
                theirs: Sequence[bytes]) -> Optional[Tuple[bytes, bytes]]:
    """An edge between the two frontiers, or None.

    Any such edge closes a shortest path, since shorter connections would
    already have produced a meet.
    """
    return _shared_probe.meet([cache.registry[c] for c in mine], [cache.registry[c] for c in theirs])


def _trace(par: Dict[bytes, Optional[bytes]], x: bytes) -> List[bytes]:
    out = [x]
    while par[out[-1]] is not None:
        out.append(par[out[-1]])
    return out


def witness_from_codes(a: Network, codes: Sequence[bytes], operation: str) -> RearrangementSequence:
    """Concrete moves realising a code path, least move per step."""
    cur = _as_kind(a, operation)
    start = cur
    moves: List[Move] = []
    nets: List[Network] = []
    for target in codes[1:]:
        nb = find_move(cur, target, operation)
        if nb is None:  # pragma: no cover - path codes come from the same generator
            raise SearchError("code path step has no realising move")
        moves.append(nb.move)
        nets.append(nb.network)
        cur = nb.network
    return RearrangementSequence(start, moves, nets)


def bfs_distance(a: Network, b: Network, config: SearchConfig = SearchConfig(),
                 cache: Optional[NeighborhoodCache] = None, witness: bool = True) -> DistanceResult:
    """Exact distance between ``a`` and ``b`` under ``config.operation``."""
    codes, explored, window = code_path(a, b, config, cache)
    seq = witness_from_codes(a, codes, config.operation) if witness else None
    return DistanceResult(len(codes) - 1, seq, explored, window, codes)


def tbr_distance(a: PhyloNetwork, b: PhyloNetwork, tier_slack: int = 1, **kw) -> DistanceResult:
    return bfs_distance(a, b, SearchConfig("tbr", tier_slack=tier_slack), **kw)


def pr_distance(a: PhyloNetwork, b: PhyloNetwork, tier_slack: int = 1, **kw) -> DistanceResult:
    return bfs_distance(a, b, SearchConfig("pr", tier_slack=tier_slack), **kw)


def replug_distance(a: Network, b: Network, tier_slack: int = 1, **kw) -> DistanceResult:
    return bfs_distance(a, b, SearchConfig("replug", tier_slack=tier_slack), **kw)


@dataclass
class WindowReport:
    distance: int
    widened_distance: int
    window: Tuple[int, int]
    widened_window: Tuple[int, int]

    @property
    def stable(self) -> bool:
        return self.distance == self.widened_distance


def window_stability(a: Network, b: Network, operation: str = "tbr", slack: int = 1,
                     cache: Optional[NeighborhoodCache] = None) -> WindowReport:
    """Compare the distance at ``slack`` with the distance at ``slack + 1``."""
    d0, _, w0 = code_path(a, b, SearchConfig(operation, tier_slack=slack), cache)
    d1, _, w1 = code_path(a, b, SearchConfig(operation, tier_slack=slack + 1), cache)
    return WindowReport(len(d0) - 1, len(d1) - 1, w0, w1)


# -- enumeration -----------------------------------------------------------


def caterpillar(n: int) -> PhyloNetwork:
    """The caterpillar tree with leaves 1..n in order along its spine."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return PhyloNetwork(MultiGraph([0], [], {0: 1}))
    if n == 2:
        return PhyloNetwork(MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 2}))
    spine = list(range(n, 2 * n - 2))
    edges = [(0, spine[0]), (1, spine[0])]
    edges += [(spine[k - 1], spine[k]) for k in range(1, len(spine))]
    edges += [(k + 1, spine[k]) for k in range(1, len(spine) - 1)]
    if n > 3:
        edges.append((n - 2, spine[-1]))
    edges.append((n - 1, spine[-1]))
    return PhyloNetwork(MultiGraph(range(2 * n - 2), edges, {i: i + 1 for i in range(n)}))


def _close(seeds: Iterable[bytes], cache: NeighborhoodCache, kind: str = TBR0) -> List[bytes]:
    seen = set(seeds)
    frontier = sorted(seen)
    while frontier:
        nxt = []
        for c in frontier:
            for y in cache.kind_neighbors("tbr", kind, c):
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = sorted(nxt)
    return sorted(seen)


def enumerate_networks(n: int, tier: int, cache: Optional[NeighborhoodCache] = None) -> Dict[bytes, PhyloNetwork]:
    """Every proper network on n leaves in the given tier, keyed by canonical code.

    Tier 0 is the TBR0 closure of a caterpillar; tier r is the TBR0 closure
    of the TBR+ images of tier r - 1.
    """
    cache = cache if cache is not None else _default_cache
    if tier < 0:
        raise ValueError("tier must be non-negative")
    if n < 2 and tier > 0:
        return {}
    if tier == 0:
        codes = _close([cache.register(caterpillar(n))], cache)
    else:
        lower = enumerate_networks(n, tier - 1, cache)
        lifted = set()
        for c in sorted(lower):
            lifted.update(cache.kind_neighbors("tbr", TBR_PLUS, c))
        codes = _close(lifted, cache)
    return {c: cache.registry[c] for c in codes}


def enumerate_tier(n: int, tier: int, cache: Optional[NeighborhoodCache] = None) -> frozenset:
    """Canonical codes of all proper networks with n leaves in ``tier``."""
    return frozenset(enumerate_networks(n, tier, cache))
