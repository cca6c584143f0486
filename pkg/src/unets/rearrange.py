"""One-step neighbourhoods under TBR, PR and replug operations.

Every generator returns the distinct resulting networks (up to label
preserving isomorphism) together with one witness :class:`Move` each: the
lexicographically least move descriptor producing that network.  The source
network itself is never listed as its own neighbour.

Edge ids inside a move refer to the graph the move is applied to at that
point of :func:`apply`: the source for the first subdivision or removal, the
intermediate graph for later ones.  Replaying a move therefore reproduces the
same graph ids as during generation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

from .multigraph import (GraphError, MultiGraph, prune_edge, regraft_edge, remove_edge,
                         subdivide_edge)
from .phylo import NetworkError, PhyloNetwork, ReplugNetwork

TBR0 = "TBR0"
TBR_PLUS = "TBRplus"
TBR_MINUS = "TBRminus"
PR0 = "PR0"
REPLUG_H = "ReplugH"
REPLUG_PLUS = "ReplugPlus"
REPLUG_MINUS = "ReplugMinus"

KINDS = (TBR0, TBR_PLUS, TBR_MINUS, PR0, REPLUG_H, REPLUG_PLUS, REPLUG_MINUS)
_KIND_RANK = {k: i for i, k in enumerate(KINDS)}
TIER_DELTA = {TBR0: 0, PR0: 0, REPLUG_H: 0, TBR_PLUS: 1, REPLUG_PLUS: 1,
              TBR_MINUS: -1, REPLUG_MINUS: -1}

Network = Union[PhyloNetwork, ReplugNetwork]


class MoveError(ValueError):
    """A move cannot be applied to the given network."""


@dataclass(frozen=True, order=True)
class Move:
    """One rearrangement step.

    ``edge`` is the moved/removed edge (None for additions), ``ends`` the
    vertices it is pruned at, and ``targets`` the attachment descriptors:
    edge ids to subdivide, or ``-1 - v`` for regrafting onto labelled
    singleton ``v``.
    """

    rank: int = field(repr=False)
    kind: str = field(compare=False)
    edge: int = -1
    ends: Tuple[int, ...] = ()
    targets: Tuple[int, ...] = ()

    @classmethod
    def make(cls, kind: str, edge: Optional[int] = None, ends: Iterable[int] = (),
             targets: Iterable[int] = ()) -> "Move":
        return cls(_KIND_RANK[kind], kind, -1 if edge is None else edge, tuple(ends), tuple(targets))

    @property
    def descriptor(self) -> Tuple:
        return (self.rank, self.edge, self.ends, self.targets)

    def __str__(self) -> str:
        parts = [self.kind]
        if self.edge >= 0:
            parts.append(f"edge={self.edge}")
        if self.ends:
            parts.append("at=" + ",".join(map(str, self.ends)))
        if self.targets:
            parts.append("to=" + ",".join(
                f"s{-1 - t}" if t < 0 else str(t) for t in self.targets))
        return " ".join(parts)


class Neighbor(NamedTuple):
    move: Move
    network: Network


# -- raw graph transformations ----------------------------------------------


def _add_between(g: MultiGraph, x: int, y: int) -> MultiGraph:
    g1, p = subdivide_edge(g, x)
    g2, q = subdivide_edge(g1, y)
    return g2.add_edge(p, q)[0]


def _apply_graph(move: Move, g: MultiGraph) -> MultiGraph:
    k = move.kind
    try:
        if k in (TBR_PLUS, REPLUG_PLUS):
            x, y = move.targets
            return _add_between(g, x, y)
        if k in (TBR_MINUS, REPLUG_MINUS):
            return remove_edge(g, move.edge)
        if k == TBR0 and len(move.ends) == 2:
            h = remove_edge(g, move.edge)
            x, y = move.targets
            return _add_between(h, x, y)
        if k in (TBR0, PR0, REPLUG_H):
            (u,) = move.ends
            h, s = prune_edge(g, move.edge, u)
            (t,) = move.targets
            if t < 0:
                return regraft_edge(h, s, singleton=-1 - t)
            return regraft_edge(h, s, edge=t)
    except (GraphError, ValueError) as exc:
        raise MoveError(f"{move}: {exc}") from None
    raise MoveError(f"unknown move kind {k}")


def apply(move: Move, src: Network) -> Network:
    """Replay ``move`` on ``src`` and validate the result."""
    g = _apply_graph(move, src.graph)
    cls = ReplugNetwork if move.kind.startswith("Replug") else type(src)
    if cls is PhyloNetwork and move.kind in (TBR_MINUS,) and _has_loop(g):
        raise MoveError(f"{move}: suppression creates a loop")
    try:
        return cls(g)
    except NetworkError as exc:
        raise MoveError(f"{move}: result invalid ({exc})") from None


def _has_loop(g: MultiGraph) -> bool:
    return any(u == v for u, v in g.edges.values())


# -- candidate enumeration ------------------------------------------------


def _pairs(h: MultiGraph) -> Iterator[Tuple[int, int]]:
    """Unordered attachment pairs for adding one edge to ``h``.

    Yields (x, y) where y is an id in the graph after subdividing x: every
    later original edge, plus one half of x itself (both halves give the
    same graph).
    """
    ids = sorted(h.edges)
    nxt = h.next_edge
    for i, x in enumerate(ids):
        # subdivide_edge(h, x) creates edges nxt (first half) and nxt+1
        for y in ids[i + 1:]:
            yield x, y
        yield x, nxt


def _candidate_moves(g: MultiGraph, kinds: Iterable[str]) -> Iterator[Tuple[Move, MultiGraph]]:
    kinds = set(kinds)
    inc = g.incidence
    for kind in KINDS:
        if kind not in kinds:
            continue
        if kind == TBR0:
            for e in sorted(g.edges):
                u, v = g.edges[e]
                if u == v:
                    continue
                leaf_u, leaf_v = u in g.labels, v in g.labels
                if leaf_u and leaf_v:
                    continue
                if not leaf_u and not leaf_v:
                    h = remove_edge(g, e)
                    for x, y in _pairs(h):
                        yield Move.make(TBR0, e, (min(u, v), max(u, v)), (x, y)), _add_between(h, x, y)
                else:
                    inner = v if leaf_u else u
                    yield from _prune_regraft(g, kind, e, inner, singletons=False)
        elif kind == PR0:
            for e in sorted(g.edges):
                u, v = g.edges[e]
                if u == v:
                    continue
                for end in sorted({u, v}):
                    if end in g.labels or len(inc[end]) != 3:
                        continue
                    yield from _prune_regraft(g, kind, e, end, singletons=False)
        elif kind == REPLUG_H:
            for e in sorted(g.edges):
                u, v = g.edges[e]
                if u == v:
                    continue
                for end in sorted({u, v}):
                    d = len(inc[end])
                    if (end in g.labels and d == 1) or (end not in g.labels and d == 3):
                        yield from _prune_regraft(g, kind, e, end, singletons=True)
        elif kind in (TBR_PLUS, REPLUG_PLUS):
            for x, y in _pairs(g):
                yield Move.make(kind, None, (), (x, y)), _add_between(g, x, y)
        elif kind in (TBR_MINUS, REPLUG_MINUS):
            bridges = set(g.bridges()) if kind == TBR_MINUS else set()
            for e in sorted(g.edges):
                if e in bridges:
                    continue
                yield Move.make(kind, e), remove_edge(g, e)


def _prune_regraft(g: MultiGraph, kind: str, e: int, end: int, singletons: bool):
    h, s = prune_edge(g, e, end)
    (own,) = h.incidence[s]
    for t in sorted(h.edges):
        if t == own and not singletons:
            continue
        yield Move.make(kind, e, (end,), (t,)), regraft_edge(h, s, edge=t)
    if singletons:
        for v in h.singletons():
            yield Move.make(kind, e, (end,), (-1 - v,)), regraft_edge(h, s, singleton=v)


# -- public generators ------------------------------------------------------


def _collect(src: Network, kinds: Iterable[str], cls) -> List[Neighbor]:
    seen: Dict[bytes, Optional[Neighbor]] = {src.code: None}
    out: List[Neighbor] = []
    for move, g in _candidate_moves(src.graph, kinds):
        if cls is PhyloNetwork and _has_loop(g):
            continue
        code = g.code()
        if code in seen:
            continue
        try:
            net = cls(g)
        except NetworkError:
            seen[code] = None
            continue
        net._code = code
        seen[code] = nb = Neighbor(move, net)
        out.append(nb)
    return out


def tbr_neighbors(net: PhyloNetwork, kinds: Iterable[str] = (TBR0, TBR_PLUS, TBR_MINUS)) -> List[Neighbor]:
    """Networks one TBR of the requested kinds away from ``net``."""
    kinds = set(kinds)
    bad = kinds - {TBR0, TBR_PLUS, TBR_MINUS}
    if bad:
        raise ValueError(f"not TBR kinds: {sorted(bad)}")
    return _collect(net, kinds, PhyloNetwork)


def pr_neighbors(net: PhyloNetwork, kinds: Iterable[str] = (PR0, TBR_PLUS, TBR_MINUS)) -> List[Neighbor]:
    """Networks one PR away; PR+ and PR- coincide with TBR+ and TBR-."""
    kinds = set(kinds)
    aliases = {"PRplus": TBR_PLUS, "PRminus": TBR_MINUS}
    kinds = {aliases.get(k, k) for k in kinds}
    bad = kinds - {PR0, TBR_PLUS, TBR_MINUS}
    if bad:
        raise ValueError(f"not PR kinds: {sorted(bad)}")
    return _collect(net, kinds, PhyloNetwork)


def replug_neighbors(net: ReplugNetwork,
                     kinds: Iterable[str] = (REPLUG_H, REPLUG_PLUS, REPLUG_MINUS)) -> List[Neighbor]:
    """Replug networks one replug operation away (connectivity and properness not required)."""
    if isinstance(net, PhyloNetwork):
        net = ReplugNetwork.from_network(net)
    kinds = set(kinds)
    bad = kinds - {REPLUG_H, REPLUG_PLUS, REPLUG_MINUS}
    if bad:
        raise ValueError(f"not replug kinds: {sorted(bad)}")
    return _collect(net, kinds, ReplugNetwork)


OPERATION_KINDS = {
    "tbr": (TBR0, TBR_PLUS, TBR_MINUS),
    "pr": (PR0, TBR_PLUS, TBR_MINUS),
    "replug": (REPLUG_H, REPLUG_PLUS, REPLUG_MINUS),
}


def neighbors(net: Network, operation: str, kinds: Optional[Iterable[str]] = None) -> List[Neighbor]:
    if operation not in OPERATION_KINDS:
        raise ValueError(f"unknown operation {operation!r}")
    kinds = OPERATION_KINDS[operation] if kinds is None else tuple(kinds)
    if operation == "tbr":
        return tbr_neighbors(net, kinds)
    if operation == "pr":
        return pr_neighbors(net, kinds)
    return replug_neighbors(net, kinds)


def find_move(src: Network, target_code: bytes, operation: str,
              kinds: Optional[Iterable[str]] = None) -> Optional[Neighbor]:
    """Least move of ``operation`` turning ``src`` into the network with ``target_code``."""
    for nb in neighbors(src, operation, kinds):
        if nb.network.code == target_code:
            return nb
    return None


@dataclass
class RearrangementSequence:
    """A start network, its moves and the networks they pass through."""

    start: Network
    moves: List[Move]
    networks: List[Network]

    @property
    def end(self) -> Network:
        return self.networks[-1] if self.networks else self.start

    def __len__(self) -> int:
        return len(self.moves)

    def replay(self) -> List[Network]:
        """Re-apply every move from ``start``, validating each intermediate."""
        cur = self.start
        out = []
        for m in self.moves:
            cur = apply(m, cur)
            out.append(cur)
        return out
