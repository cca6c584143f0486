"""Validated phylogenetic networks, replug networks, properness and display."""

from __future__ import annotations

from typing import Dict, List, Optional, Set, Tuple

from .multigraph import CanonicalCode, GraphError, MultiGraph


class NetworkError(ValueError):
    """A graph failed network validation; ``clause`` names the violated condition."""

    def __init__(self, clause: str, message: str):
        super().__init__(f"{clause}: {message}")
        self.clause = clause


class _Validated:
    __slots__ = ("graph", "n", "tier", "_code")

    def __init__(self, graph: MultiGraph, n: int, tier: int):
        self.graph = graph
        self.n = n
        self.tier = tier
        self._code = None

    @property
    def code(self) -> CanonicalCode:
        if self._code is None:
            self._code = self.graph.code()
        return self._code

    def __eq__(self, other):
        return type(other) is type(self) and other.code == self.code

    def __hash__(self):
        return hash(self.code)

    def __repr__(self):
        return (f"{type(self).__name__}(n={self.n}, tier={self.tier}, "
                f"|V|={len(self.graph.vertices)}, |E|={len(self.graph.edges)})")


class PhyloNetwork(_Validated):
    """A proper unrooted binary phylogenetic network on {1, ..., n}.

    Construct through :func:`validate_network`; the constructor validates too,
    so holding a ``PhyloNetwork`` means every network invariant holds.
    """

    __slots__ = ()

    def __init__(self, graph: MultiGraph):
        n = _check_network(graph)
        super().__init__(graph, n, len(graph.edges) - len(graph.vertices) + 1)

    def is_tree(self) -> bool:
        return self.tier == 0


class ReplugNetwork(_Validated):
    """Leaves and singletons labelled 1..n, every other vertex of degree 3.

    May be disconnected, contain loops and be improper.  ``tier`` is
    |E| - |V| + 1, which replug operations that prune and regraft keep fixed.
    """

    __slots__ = ()

    def __init__(self, graph: MultiGraph):
        n = _check_labelling(graph, allow_singletons=True)
        for v in sorted(graph.vertices):
            if v not in graph.labels and graph.degree(v) != 3:
                raise NetworkError("degree", f"unlabelled vertex {v} has degree {graph.degree(v)}")
        super().__init__(graph, n, len(graph.edges) - len(graph.vertices) + 1)

    @classmethod
    def from_network(cls, net: PhyloNetwork) -> "ReplugNetwork":
        return cls(net.graph)


def _check_labelling(g: MultiGraph, allow_singletons: bool) -> int:
    labels = sorted(g.labels.values())
    n = len(labels)
    if labels != list(range(1, n + 1)):
        raise NetworkError("labelling", f"labels {labels} are not exactly 1..{n}")
    for v in sorted(g.vertices):
        d = g.degree(v)
        if v in g.labels:
            if d == 0 and not allow_singletons:
                raise NetworkError("labelling", f"labelled vertex {v} is isolated")
        elif d == 1:
            raise NetworkError("labelling", f"leaf {v} is unlabelled")
    return n


def _check_network(g: MultiGraph) -> int:
    if not g.vertices:
        raise NetworkError("connectivity", "empty graph")
    if not g.is_connected():
        raise NetworkError("connectivity", "graph is disconnected")
    for v in sorted(g.vertices):
        d = g.degree(v)
        if d not in (1, 3) and not (d == 0 and len(g.vertices) == 1):
            raise NetworkError("degree", f"vertex {v} has degree {d}")
        if d == 3 and v in g.labels:
            raise NetworkError("degree", f"labelled vertex {v} has degree 3")
    n = _check_labelling(g, allow_singletons=len(g.vertices) == 1)
    ok, witness = is_proper(g)
    if not ok:
        raise NetworkError("properness", f"cut-edge {witness} does not separate two labelled leaves")
    return n


def validate_network(g: MultiGraph) -> PhyloNetwork:
    """Validate ``g`` as a proper unrooted binary phylogenetic network."""
    return PhyloNetwork(g)


def tier(net: PhyloNetwork) -> int:
    return net.tier


def is_proper(g: MultiGraph) -> Tuple[bool, Optional[int]]:
    """True iff both sides of every cut-edge contain a labelled vertex.

    Returns ``(False, edge_id)`` with a violating cut-edge otherwise.
    """
    if not g.is_connected():
        raise GraphError("properness is only defined for connected graphs")
    for e in g.bridges():
        u, v = g.edges[e]
        side = g.side_of(e, u)
        if not any(x in g.labels for x in side):
            return False, e
        if not any(x in g.labels for x in g.vertices - side):
            return False, e
    return True, None


# -- display ---------------------------------------------------------------


def displays(host: PhyloNetwork, pattern: PhyloNetwork) -> bool:
    """True iff some subdivision of ``pattern`` is a subgraph of ``host``."""
    if sorted(host.graph.labels.values()) != sorted(pattern.graph.labels.values()):
        raise ValueError("leaf sets differ")
    return find_subdivision_embedding(pattern.graph, host.graph) is not None


def find_subdivision_embedding(pattern: MultiGraph, host: MultiGraph
                               ) -> Optional[Tuple[Dict[int, int], Dict[int, Tuple[int, ...]]]]:
    """Backtracking search for an injective subdivision embedding.

    Labelled pattern vertices go to host vertices with the same label; each
    pattern edge becomes a host path, paths are edge-disjoint and their inner
    vertices are used by nothing else.  Returns (vertex map, edge -> host edge
    path) or None.
    """
    hinc = host.incidence
    label_pos = {l: v for v, l in host.labels.items()}
    vmap: Dict[int, int] = {}
    for v, l in pattern.labels.items():
        if l not in label_pos:
            return None
        vmap[v] = label_pos[l]
    used_vertices: Set[int] = set(vmap.values())
    used_edges: Set[int] = set()
    paths: Dict[int, Tuple[int, ...]] = {}

    # edge order: grow outward from mapped vertices so each edge has a mapped end
    order: List[Tuple[int, int]] = []
    placed = set(vmap)
    remaining = set(pattern.edges)
    while remaining:
        pick = None
        for e in sorted(remaining):
            a, b = pattern.edges[e]
            if a in placed:
                pick = (e, a)
                break
            if b in placed:
                pick = (e, b)
                break
        if pick is None:
            # unlabelled component: anchor at its least vertex
            e = min(remaining)
            pick = (e, pattern.edges[e][0])
            placed.add(pick[1])
        order.append(pick)
        remaining.discard(pick[0])
        placed.add(pattern.other_end(pick[0], pick[1]))

    def candidates_for(pv: int) -> List[int]:
        d = pattern.degree(pv)
        return [x for x in sorted(host.vertices)
                if x not in used_vertices and x not in host.labels and host.degree(x) >= d]

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        e, start = order[i]
        if start not in vmap:
            for x in candidates_for(start):
                vmap[start] = x
                used_vertices.add(x)
                if extend(i):
                    return True
                del vmap[start]
                used_vertices.discard(x)
            return False
        end = pattern.other_end(e, start)
        src = vmap[start]
        loop = end == start
        # depth-first over simple host paths from src
        path_e: List[int] = []
        path_v: List[int] = [src]

        def walk(x: int) -> bool:
            for he in hinc[x]:
                if he in used_edges or he in path_e:
                    continue
                y = host.other_end(he, x)
                path_e.append(he)
                # try to end here
                if end in vmap:
                    if y == vmap[end] and (not loop or path_e):
                        used_edges.update(path_e)
                        paths[e] = tuple(path_e)
                        if extend(i + 1):
                            return True
                        used_edges.difference_update(path_e)
                        del paths[e]
                elif y not in used_vertices and y not in path_v and y not in host.labels \
                        and host.degree(y) >= pattern.degree(end):
                    vmap[end] = y
                    used_vertices.add(y)
                    used_edges.update(path_e)
                    paths[e] = tuple(path_e)
                    if extend(i + 1):
                        return True
                    used_edges.difference_update(path_e)
                    del paths[e]
                    del vmap[end]
                    used_vertices.discard(y)
                # or pass through y as an inner vertex
                if y not in used_vertices and y not in path_v and y not in host.labels:
                    path_v.append(y)
                    used_vertices.add(y)
                    if walk(y):
                        return True
                    used_vertices.discard(y)
                    path_v.pop()
                path_e.pop()
            return False

        return walk(src)

    if extend(0):
        return dict(vmap), dict(paths)
    return None
