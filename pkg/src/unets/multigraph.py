"""Undirected multigraphs with loops, parallel edges and leaf labels.

Graph values are immutable: every operation returns a new graph.  Vertex and
edge ids are non-negative integers; fresh ids are allocated monotonically
from counters carried by the graph value, so replaying the same operations
always produces the same ids.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

Edge = Tuple[int, int]
CanonicalCode = bytes


class GraphError(ValueError):
    """Raised when an operation's precondition is violated."""


class MultiGraph:
    """An immutable undirected multigraph with a partial injective labelling.

    Loops count two towards the degree of their vertex.  Labelled vertices
    must have degree 0 (labelled singleton) or 1 (leaf).
    """

    __slots__ = ("_vertices", "_edges", "_labels", "_next_vertex", "_next_edge",
                 "_incidence", "_code")

    def __init__(self, vertices: Iterable[int] = (), edges: Mapping[int, Edge] | Iterable[Edge] = (),
                 labels: Optional[Mapping[int, int]] = None):
        verts = frozenset(vertices)
        if isinstance(edges, Mapping):
            emap = {int(k): (int(u), int(v)) for k, (u, v) in edges.items()}
        else:
            emap = {i: (int(u), int(v)) for i, (u, v) in enumerate(edges)}
        labs = dict(labels or {})
        for eid, (u, v) in emap.items():
            if u not in verts or v not in verts:
                raise GraphError(f"edge {eid} has an undeclared endpoint")
        for v, lab in labs.items():
            if v not in verts:
                raise GraphError(f"label on undeclared vertex {v}")
            if not isinstance(lab, int) or lab <= 0:
                raise GraphError(f"label of vertex {v} must be a positive integer")
        if len(set(labs.values())) != len(labs):
            raise GraphError("two vertices carry the same label")
        self._init(verts, emap, labs,
                   max(verts, default=-1) + 1, max(emap, default=-1) + 1)
        for v in labs:
            if self.degree(v) > 1:
                raise GraphError(f"labelled vertex {v} has degree {self.degree(v)}")

    def _init(self, vertices, edges, labels, next_vertex, next_edge):
        self._vertices = vertices
        self._edges = edges
        self._labels = labels
        self._next_vertex = next_vertex
        self._next_edge = next_edge
        self._incidence = None
        self._code = None

    @classmethod
    def _raw(cls, vertices, edges, labels, next_vertex, next_edge) -> "MultiGraph":
        g = cls.__new__(cls)
        g._init(vertices, edges, labels, next_vertex, next_edge)
        return g

    # -- inspection ---------------------------------------------------------

    @property
    def vertices(self) -> frozenset:
        return self._vertices

    @property
    def edges(self) -> Mapping[int, Edge]:
        return self._edges

    @property
    def labels(self) -> Mapping[int, int]:
        return self._labels

    @property
    def next_vertex(self) -> int:
        return self._next_vertex

    @property
    def next_edge(self) -> int:
        return self._next_edge

    def label(self, v: int) -> Optional[int]:
        return self._labels.get(v)

    def vertex_of_label(self, label: int) -> int:
        for v, lab in self._labels.items():
            if lab == label:
                return v
        raise KeyError(label)

    @property
    def incidence(self) -> Dict[int, List[int]]:
        """Map vertex -> incident edge ids (a loop is listed twice)."""
        if self._incidence is None:
            inc: Dict[int, List[int]] = {v: [] for v in self._vertices}
            for eid in sorted(self._edges):
                u, v = self._edges[eid]
                inc[u].append(eid)
                inc[v].append(eid)
            self._incidence = inc
        return self._incidence

    def degree(self, v: int) -> int:
        return len(self.incidence[v])

    def other_end(self, eid: int, v: int) -> int:
        a, b = self._edges[eid]
        return b if a == v else a

    def neighbors(self, v: int) -> List[int]:
        return [self.other_end(e, v) for e in self.incidence[v]]

    def is_loop(self, eid: int) -> bool:
        u, v = self._edges[eid]
        return u == v

    def is_sprout(self, v: int) -> bool:
        return v not in self._labels and self.degree(v) == 1

    def sprouts(self) -> List[int]:
        return sorted(v for v in self._vertices if self.is_sprout(v))

    def leaves(self) -> List[int]:
        return sorted(v for v in self._labels if self.degree(v) == 1)

    def singletons(self) -> List[int]:
        return sorted(v for v in self._labels if self.degree(v) == 0)

    def components(self) -> List[List[int]]:
        """Vertex sets of the connected components, each sorted, in order of least vertex."""
        seen = set()
        comps = []
        inc = self.incidence
        for s in sorted(self._vertices):
            if s in seen:
                continue
            seen.add(s)
            stack = [s]
            comp = []
            while stack:
                x = stack.pop()
                comp.append(x)
                for e in inc[x]:
                    y = self.other_end(e, x)
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def cyclomatic_number(self) -> int:
        """|E| - |V| + number of components."""
        return len(self._edges) - len(self._vertices) + len(self.components())

    def bridges(self) -> List[int]:
        """Edge ids of all cut-edges (parallel edges and loops never qualify)."""
        inc = self.incidence
        disc: Dict[int, int] = {}
        low: Dict[int, int] = {}
        out: List[int] = []
        counter = 0
        for root in sorted(self._vertices):
            if root in disc:
                continue
            disc[root] = low[root] = counter
            counter += 1
            stack = [(root, -1, iter(inc[root]))]
            while stack:
                v, via, it = stack[-1]
                advanced = False
                for e in it:
                    if e == via:
                        continue
                    w = self.other_end(e, v)
                    if w not in disc:
                        disc[w] = low[w] = counter
                        counter += 1
                        stack.append((w, e, iter(inc[w])))
                        advanced = True
                        break
                    low[v] = min(low[v], disc[w])
                if advanced:
                    continue
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        out.append(via)
        return sorted(out)

    def side_of(self, eid: int, start: int) -> set:
        """Vertices reachable from ``start`` without traversing ``eid``."""
        inc = self.incidence
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for e in inc[x]:
                if e == eid:
                    continue
                y = self.other_end(e, x)
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def __repr__(self) -> str:
        return (f"MultiGraph(|V|={len(self._vertices)}, |E|={len(self._edges)}, "
                f"labels={dict(sorted(self._labels.items()))})")

    # -- construction helpers ----------------------------------------------

    def _copy_parts(self):
        return set(self._vertices), dict(self._edges), dict(self._labels)

    def add_vertex(self, label: Optional[int] = None) -> Tuple["MultiGraph", int]:
        v = self._next_vertex
        labels = dict(self._labels)
        if label is not None:
            if label in labels.values():
                raise GraphError(f"label {label} already present")
            labels[v] = label
        g = MultiGraph._raw(self._vertices | {v}, self._edges, labels, v + 1, self._next_edge)
        return g, v

    def add_edge(self, u: int, v: int) -> Tuple["MultiGraph", int]:
        if u not in self._vertices or v not in self._vertices:
            raise GraphError("edge endpoint not in graph")
        eid = self._next_edge
        edges = dict(self._edges)
        edges[eid] = (u, v)
        g = MultiGraph._raw(self._vertices, edges, self._labels, self._next_vertex, eid + 1)
        return g, eid

    def subgraph(self, vertices: Iterable[int], edge_ids: Iterable[int]) -> "MultiGraph":
        vs = frozenset(vertices)
        edges = {e: self._edges[e] for e in edge_ids}
        labels = {v: l for v, l in self._labels.items() if v in vs}
        return MultiGraph._raw(vs, edges, labels, self._next_vertex, self._next_edge)

    def relabel_vertices(self, mapping: Mapping[int, int]) -> "MultiGraph":
        """Rename vertex ids (labels travel with their vertices)."""
        verts = frozenset(mapping[v] for v in self._vertices)
        edges = {e: (mapping[u], mapping[v]) for e, (u, v) in self._edges.items()}
        labels = {mapping[v]: l for v, l in self._labels.items()}
        return MultiGraph(verts, edges, labels)

    def compact(self) -> "MultiGraph":
        """Renumber vertices and edges to 0..k-1 preserving relative order."""
        vmap = {v: i for i, v in enumerate(sorted(self._vertices))}
        emap = {e: i for i, e in enumerate(sorted(self._edges))}
        return MultiGraph._raw(
            frozenset(vmap.values()),
            {emap[e]: (vmap[u], vmap[v]) for e, (u, v) in self._edges.items()},
            {vmap[v]: l for v, l in self._labels.items()},
            len(vmap), len(emap))

    def code(self) -> CanonicalCode:
        if self._code is None:
            self._code = canonical_form(self)
        return self._code


def disjoint_union(graphs: Sequence[MultiGraph]) -> Tuple[MultiGraph, List[Dict[int, int]], List[Dict[int, int]]]:
    """Union with renumbered ids; returns the graph and per-input vertex/edge maps."""
    vertices = set()
    edges: Dict[int, Edge] = {}
    labels: Dict[int, int] = {}
    vmaps, emaps = [], []
    nv = ne = 0
    for g in graphs:
        vm = {}
        for v in sorted(g.vertices):
            vm[v] = nv
            vertices.add(nv)
            if v in g.labels:
                labels[nv] = g.labels[v]
            nv += 1
        em = {}
        for e in sorted(g.edges):
            u, w = g.edges[e]
            edges[ne] = (vm[u], vm[w])
            em[e] = ne
            ne += 1
        vmaps.append(vm)
        emaps.append(em)
    return MultiGraph(vertices, edges, labels), vmaps, emaps


# -- suboperations ---------------------------------------------------------


def suppress_vertex(g: MultiGraph, v: int) -> MultiGraph:
    """Delete the unlabelled degree-2 vertex ``v`` and join its two far endpoints."""
    if v not in g.vertices:
        raise GraphError(f"unknown vertex {v}")
    if v in g.labels:
        raise GraphError(f"cannot suppress labelled vertex {v}")
    inc = g.incidence[v]
    if len(inc) != 2:
        raise GraphError(f"cannot suppress vertex {v} of degree {len(inc)}")
    e1, e2 = inc
    if e1 == e2:
        raise GraphError(f"cannot suppress vertex {v}: its only edge is a loop")
    a = g.other_end(e1, v)
    b = g.other_end(e2, v)
    edges = dict(g.edges)
    del edges[e1]
    del edges[e2]
    eid = g.next_edge
    edges[eid] = (a, b)
    return MultiGraph._raw(g.vertices - {v}, edges, g.labels, g.next_vertex, eid + 1)


def subdivide_edge(g: MultiGraph, e: int) -> Tuple[MultiGraph, int]:
    """Replace edge ``e`` by a path of length two through a fresh vertex."""
    if e not in g.edges:
        raise GraphError(f"unknown edge {e}")
    u, w = g.edges[e]
    v = g.next_vertex
    edges = dict(g.edges)
    del edges[e]
    ne = g.next_edge
    edges[ne] = (u, v)
    edges[ne + 1] = (v, w)
    return MultiGraph._raw(g.vertices | {v}, edges, g.labels, v + 1, ne + 2), v


def _suppress_if_needed(g: MultiGraph, v: int) -> MultiGraph:
    if v in g.vertices and v not in g.labels and g.degree(v) == 2:
        e1, e2 = g.incidence[v]
        if e1 != e2:
            return suppress_vertex(g, v)
    return g


def prune_edge(g: MultiGraph, e: int, end: int) -> Tuple[MultiGraph, int]:
    """Detach edge ``e`` at ``end``; returns the new graph and the fresh sprout.

    ``end`` must be a labelled leaf or an unlabelled degree-3 vertex.  If
    ``end`` drops to degree two it is suppressed.
    """
    if e not in g.edges:
        raise GraphError(f"unknown edge {e}")
    u, w = g.edges[e]
    if end not in (u, w):
        raise GraphError(f"vertex {end} is not an endpoint of edge {e}")
    deg = g.degree(end)
    if end in g.labels:
        if deg != 1:
            raise GraphError(f"labelled vertex {end} must have degree 1 to be pruned at")
    elif deg != 3:
        raise GraphError(f"unlabelled vertex {end} must have degree 3 to be pruned at (has {deg})")
    other = w if u == end else u
    sprout = g.next_vertex
    edges = dict(g.edges)
    del edges[e]
    ne = g.next_edge
    edges[ne] = (sprout, other)
    h = MultiGraph._raw(g.vertices | {sprout}, edges, g.labels, sprout + 1, ne + 1)
    return _suppress_if_needed(h, end), sprout


def regraft_edge(g: MultiGraph, sprout: int, edge: Optional[int] = None,
                 singleton: Optional[int] = None) -> MultiGraph:
    """Attach ``sprout`` to an edge (subdividing it) or to a labelled singleton."""
    if (edge is None) == (singleton is None):
        raise GraphError("regraft needs exactly one of edge or singleton")
    if sprout not in g.vertices or not g.is_sprout(sprout):
        raise GraphError(f"vertex {sprout} is not a sprout")
    (se,) = g.incidence[sprout]
    if singleton is not None:
        if singleton not in g.labels or g.degree(singleton) != 0:
            raise GraphError(f"vertex {singleton} is not a labelled singleton")
        target = singleton
        h = g
    else:
        if edge not in g.edges:
            raise GraphError(f"unknown edge {edge}")
        h, target = subdivide_edge(g, edge)
        if edge == se:
            # the sprout's own edge was split; its half now hangs from the sprout
            (se,) = h.incidence[sprout]
    edges = dict(h.edges)
    a, b = edges[se]
    edges[se] = (target if a == sprout else a, target if b == sprout else b)
    return MultiGraph._raw(h.vertices - {sprout}, edges, h.labels, h.next_vertex, h.next_edge)


def remove_edge(g: MultiGraph, e: int) -> MultiGraph:
    """Delete ``e`` and suppress endpoints that become unlabelled degree-2 vertices."""
    if e not in g.edges:
        raise GraphError(f"unknown edge {e}")
    u, w = g.edges[e]
    edges = dict(g.edges)
    del edges[e]
    h = MultiGraph._raw(g.vertices, edges, g.labels, g.next_vertex, g.next_edge)
    h = _suppress_if_needed(h, u)
    if w != u:
        h = _suppress_if_needed(h, w)
    return h


def suppress_all(g: MultiGraph) -> MultiGraph:
    """Suppress every suppressible unlabelled degree-2 vertex."""
    changed = True
    while changed:
        changed = False
        for v in sorted(g.vertices):
            if v not in g.labels and v in g.vertices and g.degree(v) == 2:
                e1, e2 = g.incidence[v]
                if e1 != e2:
                    g = suppress_vertex(g, v)
                    changed = True
    return g


# -- canonical form --------------------------------------------------------


def _refine(colors: List[int], adj: List[List[int]]) -> List[int]:
    ncls = len(set(colors))
    while True:
        get = colors.__getitem__
        keys = [(c, tuple(sorted(map(get, nb)))) for c, nb in zip(colors, adj)]
        uniq = set(keys)
        if len(uniq) == ncls:
            return colors
        rank = {k: i for i, k in enumerate(sorted(uniq))}
        colors = [rank[k] for k in keys]
        ncls = len(uniq)


def _encode(order_colors: List[int], lab: List[int], elist: List[Tuple[int, int]]):
    pos = order_colors
    edges = sorted((pos[a], pos[b]) if pos[a] <= pos[b] else (pos[b], pos[a]) for a, b in elist)
    labs = [0] * len(pos)
    for i, l in enumerate(lab):
        labs[pos[i]] = l
    return tuple(labs), tuple(edges)


def _one_per_twin_class(members: List[int], adj: List[List[int]]) -> List[int]:
    """Drop members whose swap with an earlier kept member is an automorphism.

    Swapping two vertices of one colour cell that have the same multiset of
    other neighbours and the same loops fixes every other vertex, so both
    branches of the individualisation search yield the same encodings.
    """
    kept: List[int] = []
    sigs: List[Tuple[int, Dict[int, int]]] = []
    for i in members:
        mult: Dict[int, int] = defaultdict(int)
        for j in adj[i]:
            mult[j] += 1
        for r, rm in sigs:
            if rm.get(r, 0) == mult.get(i, 0) and rm.get(i, 0) == mult.get(r, 0) and \
                    {x: c for x, c in rm.items() if x not in (r, i)} == \
                    {x: c for x, c in mult.items() if x not in (r, i)}:
                break
        else:
            kept.append(i)
            sigs.append((i, mult))
    return kept


def canonical_labeling(g: MultiGraph) -> Tuple[CanonicalCode, List[int]]:
    """Return the canonical code and the vertices listed in canonical order."""
    verts = sorted(g.vertices)
    n = len(verts)
    idx = {v: i for i, v in enumerate(verts)}
    adj: List[List[int]] = [[] for _ in range(n)]
    elist = []
    for a, b in g.edges.values():
        ia, ib = idx[a], idx[b]
        adj[ia].append(ib)
        adj[ib].append(ia)
        elist.append((ia, ib))
    lab = [g.labels.get(v, 0) for v in verts]
    init_keys = [(lab[i], len(adj[i]), sum(1 for j in adj[i] if j == i)) for i in range(n)]
    uniq = sorted(set(init_keys))
    rank = {k: i for i, k in enumerate(uniq)}
    colors = _refine([rank[k] for k in init_keys], adj)

    best = None
    best_colors = None
    stack = [colors]
    while stack:
        cols = stack.pop()
        if len(set(cols)) == n:
            enc = _encode(cols, lab, elist)
            if best is None or enc < best:
                best, best_colors = enc, cols
            continue
        counts: Dict[int, int] = defaultdict(int)
        for c in cols:
            counts[c] += 1
        # smallest non-singleton cell, lowest colour first
        target = min((cnt, c) for c, cnt in counts.items() if cnt > 1)[1]
        members = _one_per_twin_class([i for i in range(n) if cols[i] == target], adj)
        for i in reversed(members):
            keys = [(c, 0 if j == i else (1 if c == target else 0)) for j, c in enumerate(cols)]
            uq = sorted(set(keys))
            rk = {k: r for r, k in enumerate(uq)}
            stack.append(_refine([rk[k] for k in keys], adj))
    labs, edges = best if best is not None else ((), ())
    code = _pack(n, labs, edges)
    order = [0] * n
    if best_colors is not None:
        for i, c in enumerate(best_colors):
            order[c] = verts[i]
    return code, order


def _pack(n: int, labs: Tuple[int, ...], edges: Tuple[Tuple[int, int], ...]) -> bytes:
    out = [n, len(edges)]
    out.extend(labs)
    for a, b in edges:
        out.append(a)
        out.append(b)
    return b"".join(x.to_bytes(2, "big") for x in out)


def refinement_invariant(g: MultiGraph) -> Tuple:
    """A cheap isomorphism invariant: the stable colour-refinement quotient.

    Isomorphic graphs always get equal values; non-isomorphic graphs may too.
    """
    verts = sorted(g.vertices)
    idx = {v: i for i, v in enumerate(verts)}
    adj: List[List[int]] = [[] for _ in verts]
    for a, b in g.edges.values():
        adj[idx[a]].append(idx[b])
        adj[idx[b]].append(idx[a])
    lab = [g.labels.get(v, 0) for v in verts]
    init_keys = [(lab[i], len(adj[i])) for i in range(len(verts))]
    rank = {k: i for i, k in enumerate(sorted(set(init_keys)))}
    colors = _refine([rank[k] for k in init_keys], adj)
    quotient = sorted((colors[i], tuple(sorted(colors[j] for j in adj[i]))) for i in range(len(verts)))
    return len(verts), len(g.edges), tuple(quotient)


def canonical_form(g: MultiGraph) -> CanonicalCode:
    """Isomorphism-invariant byte code of a leaf-labelled multigraph.

    Colour refinement on (label, degree, loops) followed by an exhaustive
    individualisation search that keeps the lexicographically least encoding.
    """
    return canonical_labeling(g)[0]


def isomorphism(g: MultiGraph, h: MultiGraph) -> Optional[Tuple[Dict[int, int], Dict[int, int]]]:
    """A label-preserving isomorphism ``g -> h`` as (vertex map, edge map), or None."""
    cg, og = canonical_labeling(g)
    ch, oh = canonical_labeling(h)
    if cg != ch:
        return None
    vmap = dict(zip(og, oh))
    buckets: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for e in sorted(h.edges):
        a, b = h.edges[e]
        buckets[(min(a, b), max(a, b))].append(e)
    emap = {}
    for e in sorted(g.edges):
        a, b = g.edges[e]
        x, y = vmap[a], vmap[b]
        emap[e] = buckets[(min(x, y), max(x, y))].pop(0)
    return vmap, emap


def brute_force_isomorphic(g: MultiGraph, h: MultiGraph) -> bool:
    """Reference isomorphism test over all label-preserving vertex bijections."""
    from itertools import permutations

    if len(g.vertices) != len(h.vertices) or len(g.edges) != len(h.edges):
        return False
    if sorted(g.labels.values()) != sorted(h.labels.values()):
        return False

    def multiset(graph, f):
        out = defaultdict(int)
        for a, b in graph.edges.values():
            x, y = f(a), f(b)
            out[(min(x, y), max(x, y))] += 1
        return out

    target = multiset(h, lambda v: v)
    fixed = {v: h.vertex_of_label(l) for v, l in g.labels.items()}
    free_g = sorted(v for v in g.vertices if v not in g.labels)
    free_h = sorted(v for v in h.vertices if v not in h.labels)
    for perm in permutations(free_h):
        f = dict(fixed)
        f.update(zip(free_g, perm))
        if multiset(g, f.__getitem__) == target:
            return True
    return False


def walk_vertices(g: MultiGraph, start: int, path_edges: Sequence[int]) -> List[int]:
    """Vertex sequence of the walk that follows ``path_edges`` from ``start``."""
    out = [start]
    cur = start
    for e in path_edges:
        a, b = g.edges[e]
        if cur == a:
            cur = b
        elif cur == b:
            cur = a
        else:
            raise GraphError(f"edge {e} is not incident to vertex {cur}")
        out.append(cur)
    return out


def iter_edges_sorted(g: MultiGraph) -> Iterator[Tuple[int, int, int]]:
    for e in sorted(g.edges):
        u, v = g.edges[e]
        yield e, u, v
