"""Agreement graphs, agreement embeddings, AD, EAD, MAF and the MAG-to-TBR construction.

Vocabulary used throughout:

* An *agreement graph* ``G`` is a disjoint union of agreement subgraphs
  ``S_1..S_m`` and disagreement edges ``E_1..E_k`` (each a single edge on two
  unlabelled vertices).
* An *agreement embedding* maps every edge of ``G`` to a host path so that the
  images are edge-disjoint and cover the host.  Vertices of ``G`` map
  injectively, except that a sprout may share a host leaf with a labelled
  singleton.
* In a host, the edges covered by agreement subgraphs are *black*; the edges
  covered by disagreement edges are *red*.

For a proper host, an embedding of a sprout-free agreement graph is
determined (up to re-routing of the red paths) by its red edge set ``R``:
every non-leaf host vertex has red degree 0, 1 or 3, and the black
components are what remains after suppressing black degree-2 vertices.  The
number of red paths is ``(d1 + d3) / 2`` where ``d1``/``d3`` count vertices of
red degree 1/3.  :func:`agreement_distance` enumerates such red sets and
matches black-component multisets between the two hosts.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations, product
from typing import (Dict, FrozenSet, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence,
                    Set, Tuple)

from .multigraph import (CanonicalCode, GraphError, MultiGraph, disjoint_union, isomorphism,
                         remove_edge, walk_vertices)
from .phylo import PhyloNetwork
from .rearrange import (TBR_MINUS, TBR_PLUS, Move, RearrangementSequence, find_move)
from .search import NeighborhoodCache, SearchConfig, code_path

MAG = "MAG"
MEAG = "MEAG"


class AgreementError(ValueError):
    """Malformed agreement graph or embedding, or an unmet precondition."""


# -- agreement graphs --------------------------------------------------------


@dataclass(frozen=True)
class AgreementGraph:
    """Agreement subgraphs plus disagreement edges, held in one multigraph.

    ``subgraphs`` lists the vertex sets of ``S_1..S_m``; ``disagreement``
    lists the edge ids of ``E_1..E_k`` in order.
    """

    graph: MultiGraph
    subgraphs: Tuple[FrozenSet[int], ...]
    disagreement: Tuple[int, ...]
    mode: str = MAG

    def __post_init__(self):
        g = self.graph
        labels = sorted(g.labels.values())
        if labels != list(range(1, len(labels) + 1)):
            raise AgreementError(f"labels {labels} are not exactly 1..n")
        covered: Set[int] = set()
        for vs in self.subgraphs:
            if not vs:
                raise AgreementError("empty agreement subgraph")
            covered |= vs
        dis_vertices = set()
        for e in self.disagreement:
            u, v = g.edges[e]
            if u == v or u in g.labels or v in g.labels or g.degree(u) != 1 or g.degree(v) != 1:
                raise AgreementError(f"disagreement edge {e} is not a single edge on two unlabelled vertices")
            dis_vertices |= {u, v}
        if covered & dis_vertices or covered | dis_vertices != set(g.vertices):
            raise AgreementError("components do not partition the vertex set")
        for v in covered:
            if v not in g.labels and g.degree(v) == 2 and len(set(g.incidence[v])) == 2:
                raise AgreementError(f"agreement subgraph vertex {v} has degree 2")
            if v not in g.labels and g.degree(v) == 0:
                raise AgreementError(f"unlabelled isolated vertex {v}")
            if self.mode == MAG and g.is_sprout(v):
                raise AgreementError(f"agreement subgraph vertex {v} is a sprout")

    @classmethod
    def build(cls, components: Sequence[MultiGraph], k: int, mode: str = MAG) -> "AgreementGraph":
        g, vmaps, _ = disjoint_union(list(components))
        subs = tuple(frozenset(vm.values()) for vm in vmaps)
        dis = []
        for _ in range(k):
            g, p = g.add_vertex()
            g, q = g.add_vertex()
            g, e = g.add_edge(p, q)
            dis.append(e)
        return cls(g, subs, tuple(dis), mode)

    @property
    def k(self) -> int:
        return len(self.disagreement)

    @property
    def m(self) -> int:
        return len(self.subgraphs)

    def subgraph(self, i: int) -> MultiGraph:
        vs = self.subgraphs[i]
        es = [e for e, (u, _) in self.graph.edges.items() if u in vs]
        return self.graph.subgraph(vs, es)

    @property
    def subgraph_edges(self) -> List[int]:
        dis = set(self.disagreement)
        return sorted(e for e in self.graph.edges if e not in dis)

    def component_of_vertex(self, v: int) -> int:
        for i, vs in enumerate(self.subgraphs):
            if v in vs:
                return i
        raise KeyError(v)

    def sprout_tally(self) -> int:
        """Number of sprouts inside agreement subgraphs."""
        return sum(1 for vs in self.subgraphs for v in vs if self.graph.is_sprout(v))

    def total_sprouts(self) -> int:
        return len(self.graph.sprouts())

    def key(self) -> Tuple[CanonicalCode, ...]:
        return tuple(sorted(self.subgraph(i).code() for i in range(self.m)))


@dataclass(frozen=True)
class AgreementEmbedding:
    """A mapping of (part of) an agreement graph onto a host network.

    ``paths[e]`` is the host edge path of G-edge ``e`` listed from the image of
    ``graph.graph.edges[e][0]``; ``vmap`` maps every embedded G vertex to a
    host vertex; ``used`` lists the disagreement edges embedded, in order.
    """

    graph: AgreementGraph
    host: MultiGraph
    paths: Mapping[int, Tuple[int, ...]]
    vmap: Mapping[int, int]
    used: Tuple[int, ...]

    @property
    def disagreement_usage(self) -> int:
        return len(self.used)

    def red_edges(self) -> Set[int]:
        return {h for e in self.used for h in self.paths[e]}

    def attachments(self) -> Dict[int, Tuple[Tuple[str, int], Tuple[str, int]]]:
        """Where each used disagreement edge's two sprouts are attached.

        Owners are ``("S", i)`` for agreement subgraph i (including a
        labelled singleton's leaf) or ``("E", j)`` for the j-th used
        disagreement edge (0-based position in ``used``).
        """
        owner_of_edge: Dict[int, Tuple[str, int]] = {}
        for i, vs in enumerate(self.graph.subgraphs):
            for e, (u, _) in self.graph.graph.edges.items():
                if u in vs:
                    owner_of_edge[e] = ("S", i)
        for j, e in enumerate(self.used):
            owner_of_edge[e] = ("E", j)
        interior = _interior_map(self.host, self.paths, self.vmap, self.graph.graph)
        singleton_at = {self.vmap[v]: self.graph.component_of_vertex(v)
                        for v in self.graph.graph.singletons() if v in self.vmap}
        out = {}
        for e in self.used:
            ends = []
            for p in self.graph.graph.edges[e]:
                x = self.vmap[p]
                if x in interior:
                    ends.append(owner_of_edge[interior[x]])
                elif x in singleton_at:
                    ends.append(("S", singleton_at[x]))
                else:
                    raise AgreementError(f"sprout {p} at host vertex {x} is not attached")
            out[e] = tuple(ends)
        return out


def _interior_map(host: MultiGraph, paths: Mapping[int, Tuple[int, ...]],
                  vmap: Mapping[int, int], g: MultiGraph) -> Dict[int, int]:
    interior = {}
    for e, path in paths.items():
        vs = walk_vertices(host, vmap[g.edges[e][0]], path)
        for x in vs[1:-1]:
            interior[x] = e
    return interior


def verify_embedding(emb: AgreementEmbedding) -> List[str]:
    """Every violated agreement-embedding condition of ``emb`` (empty if valid)."""
    problems: List[str] = []
    G = emb.graph
    g = G.graph
    host = emb.host
    dis = set(G.disagreement)
    used = set(emb.used)
    if not used <= dis:
        problems.append("used edges that are not disagreement edges")
    want_edges = set(G.subgraph_edges) | used
    if set(emb.paths) != want_edges:
        problems.append("paths are not given for exactly the embedded edges")
        return problems
    want_vertices = {v for vs in G.subgraphs for v in vs} | {v for e in used for v in g.edges[e]}
    if set(emb.vmap) != want_vertices:
        problems.append("vertex map does not cover exactly the embedded vertices")
        return problems
    count: Dict[int, int] = defaultdict(int)
    interior: Dict[int, int] = {}
    for e in sorted(want_edges):
        path = emb.paths[e]
        u, v = g.edges[e]
        if not path:
            problems.append(f"edge {e} has an empty image")
            continue
        try:
            vs = walk_vertices(host, emb.vmap[u], path)
        except (GraphError, KeyError):
            problems.append(f"image of edge {e} is not a walk from its first endpoint")
            continue
        if vs[-1] != emb.vmap[v]:
            problems.append(f"image of edge {e} ends at the wrong vertex")
        inner = vs[1:-1]
        ends = {vs[0], vs[-1]}
        if len(set(inner)) != len(inner) or ends & set(inner) or (u != v and vs[0] == vs[-1]):
            problems.append(f"image of edge {e} is not a path")
        if u == v and vs[0] != vs[-1]:
            problems.append(f"image of loop {e} is not a cycle")
        for h in path:
            count[h] += 1
        for x in inner:
            if x in interior:
                problems.append(f"host vertex {x} is interior to two images")
            interior[x] = e
    for h in host.edges:
        if count.get(h, 0) != 1:
            problems.append(f"host edge {h} covered {count.get(h, 0)} times")
    at: Dict[int, List[int]] = defaultdict(list)
    for v, x in emb.vmap.items():
        at[x].append(v)
    for x, vs in at.items():
        if len(vs) > 2:
            problems.append(f"host vertex {x} holds {len(vs)} graph vertices")
        elif len(vs) == 2:
            kinds = sorted((g.is_sprout(v), v in g.labels and g.degree(v) == 0) for v in vs)
            if kinds != [(False, True), (True, False)]:
                problems.append(f"host vertex {x} holds two vertices that are not a sprout and a singleton")
        for v in vs:
            if not g.is_sprout(v) and x in interior:
                problems.append(f"non-sprout vertex {v} sits inside an image at {x}")
    for v, lab in g.labels.items():
        x = emb.vmap.get(v)
        if x is None or host.labels.get(x) != lab:
            problems.append(f"label {lab} is not mapped to the host leaf with that label")
    if sorted(host.labels.values()) != sorted(g.labels.values()):
        problems.append("label sets differ")
    singleton_hosts = {emb.vmap[v] for v in g.singletons()}
    for v in emb.vmap:
        if g.is_sprout(v):
            x = emb.vmap[v]
            if x not in interior and x not in singleton_hosts:
                problems.append(f"sprout {v} at host vertex {x} is not attached")
    return problems


# -- independent embedding oracle -------------------------------------------


def check_agreement_embedding(G: AgreementGraph, host, allowed_disagreement: int
                              ) -> Optional[AgreementEmbedding]:
    """Backtracking search for an agreement embedding using exactly the first
    ``allowed_disagreement`` disagreement edges.

    Agreement subgraphs are placed edge by edge along host paths; the host
    edges left over must then split into exactly ``allowed_disagreement``
    paths whose ends obey the sprout rules.  Self-attachment of a
    disagreement edge is permitted.  Returns a certified embedding or None.
    """
    hg: MultiGraph = host.graph if hasattr(host, "graph") else host
    g = G.graph
    if sorted(g.labels.values()) != sorted(hg.labels.values()):
        raise AgreementError("agreement graph and host carry different label sets")
    if not 0 <= allowed_disagreement <= G.k:
        return None
    dis_used = G.disagreement[:allowed_disagreement]
    hinc = hg.incidence
    host_of_label = {l: v for v, l in hg.labels.items()}

    vmap: Dict[int, int] = {}
    at: Dict[int, List[int]] = defaultdict(list)
    interior: Dict[int, int] = {}
    used: Set[int] = set()
    paths: Dict[int, Tuple[int, ...]] = {}

    for v, lab in g.labels.items():
        x = host_of_label[lab]
        if g.degree(v) > hg.degree(x):
            return None
        vmap[v] = x
        at[x].append(v)

    def is_singleton(v: int) -> bool:
        return v in g.labels and g.degree(v) == 0

    def sprout_ok(y: int) -> bool:
        occ = at.get(y, ())
        return not occ or (len(occ) == 1 and is_singleton(occ[0]))

    def vertex_ok(v: int, y: int) -> bool:
        if g.is_sprout(v):
            return sprout_ok(y)
        return (not at.get(y) and y not in interior and y not in hg.labels
                and hg.degree(y) == g.degree(v))

    def pass_ok(y: int) -> bool:
        return y not in hg.labels and all(g.is_sprout(w) for w in at.get(y, ()))

    # placement plan: per component, BFS edge order from a mapped (or anchor) vertex
    plan: List[Tuple[Optional[int], int]] = []
    ginc = g.incidence
    for vs in G.subgraphs:
        comp_edges = {e for e, (u, _) in g.edges.items() if u in vs}
        if not comp_edges:
            continue
        roots = sorted(v for v in vs if v in g.labels)
        if not roots:
            nonsprout = sorted(v for v in vs if not g.is_sprout(v))
            roots = [nonsprout[0] if nonsprout else min(vs)]
            plan.append((None, roots[0]))
        placed = set(roots)
        queue = list(roots)
        done: Set[int] = set()
        while queue:
            x = queue.pop(0)
            for e in ginc[x]:
                if e in done:
                    continue
                done.add(e)
                plan.append((e, x))
                y = g.other_end(e, x)
                if y not in placed:
                    placed.add(y)
                    queue.append(y)
        if done != comp_edges:  # pragma: no cover - components are connected
            raise AgreementError("agreement subgraph is not connected")

    def place(i: int) -> bool:
        if i == len(plan):
            return decompose_rest()
        e, start = plan[i]
        if e is None:
            for y in sorted(hg.vertices):
                if vertex_ok(start, y):
                    vmap[start] = y
                    at[y].append(start)
                    if place(i + 1):
                        return True
                    at[y].pop()
                    del vmap[start]
            return False
        end = g.other_end(e, start)
        src = vmap[start]
        path_e: List[int] = []
        path_v: List[int] = [src]

        def commit(stop: int, new_end: bool) -> bool:
            if new_end:
                vmap[end] = stop
                at[stop].append(end)
            for x in path_v[1:]:
                interior[x] = e
            used.update(path_e)
            a, _ = g.edges[e]
            paths[e] = tuple(path_e) if a == start else tuple(reversed(path_e))
            if place(i + 1):
                return True
            del paths[e]
            used.difference_update(path_e)
            for x in path_v[1:]:
                del interior[x]
            if new_end:
                at[stop].pop()
                del vmap[end]
            return False

        def walk(x: int) -> bool:
            for h in hinc[x]:
                if h in used or h in path_e:
                    continue
                y = hg.other_end(h, x)
                path_e.append(h)
                if end in vmap:
                    if y == vmap[end] and (y not in path_v or (end == start and y == src)):
                        if commit(y, False):
                            return True
                elif y not in path_v and vertex_ok(end, y):
                    if commit(y, True):
                        return True
                if y not in path_v and pass_ok(y):
                    path_v.append(y)
                    if walk(y):
                        return True
                    path_v.pop()
                path_e.pop()
            return False

        return walk(src)

    def decompose_rest() -> bool:
        rest = [h for h in sorted(hg.edges) if h not in used]
        deg: Dict[int, int] = defaultdict(int)
        for h in rest:
            a, b = hg.edges[h]
            deg[a] += 1
            deg[b] += 1
        odd = sum(1 for d in deg.values() if d % 2)
        if odd != 2 * allowed_disagreement:
            return False
        return split(set(rest), 0)

    def split(rest: Set[int], j: int) -> bool:
        if not rest:
            return j == allowed_disagreement and final_ok()
        if j == allowed_disagreement:
            return False
        e0 = min(rest)
        a0, b0 = hg.edges[e0]
        de = dis_used[j]
        p, q = g.edges[de]
        if a0 == b0:
            return False
        for left in extensions(a0, b0, rest - {e0}):
            lv, le = left
            for right in extensions(b0, a0, rest - {e0} - set(le), lv):
                rv, re_ = right
                verts = list(reversed(lv)) + rv
                edges_ = list(reversed(le)) + [e0] + re_
                s, t = verts[0], verts[-1]
                if s == t:
                    continue
                if not (sprout_ok(s) and sprout_ok(t)):
                    continue
                inner = verts[1:-1]
                if any(x in interior or not pass_ok(x) for x in inner):
                    continue
                vmap[p], vmap[q] = s, t
                at[s].append(p)
                at[t].append(q)
                for x in inner:
                    interior[x] = de
                paths[de] = tuple(edges_)
                if split(rest - set(edges_), j + 1):
                    return True
                del paths[de]
                for x in inner:
                    del interior[x]
                at[s].pop()
                at[t].pop()
                del vmap[p], vmap[q]
        return False

    def extensions(x: int, other: int, avail: Set[int], avoid: Sequence[int] = ()) -> Iterator[Tuple[List[int], List[int]]]:
        """Simple continuations from x (away from the seed edge): vertex and edge lists."""
        seen = {other} | set(avoid)

        def rec(v: int, vs: List[int], es: List[int]):
            yield list(vs), list(es)
            if not pass_ok(v):
                return
            for h in hinc[v]:
                if h not in avail or h in es:
                    continue
                w = hg.other_end(h, v)
                if w in seen or w in vs:
                    continue
                vs.append(w)
                es.append(h)
                yield from rec(w, vs, es)
                es.pop()
                vs.pop()

        yield from rec(x, [x], [])

    def final_ok() -> bool:
        singles = {vmap[v] for v in g.singletons()}
        for v, x in vmap.items():
            if g.is_sprout(v) and x not in interior and x not in singles:
                return False
        return True

    if not place(0):
        return None
    emb = AgreementEmbedding(G, hg, dict(paths), dict(vmap), tuple(dis_used))
    problems = verify_embedding(emb)
    if problems:  # pragma: no cover - the search enforces every condition
        raise AgreementError("oracle produced an invalid embedding: " + "; ".join(problems))
    return emb


# -- ordered embeddings ------------------------------------------------------


def ordered_violations(emb: AgreementEmbedding) -> List[str]:
    """Violated ordered-embedding clauses, with disagreement edges in ``used`` order.

    * E_1 attaches to two distinct agreement subgraphs (when m >= 2);
    * E_2..E_{m-1} attach to subgraphs or earlier disagreement edges and
      merge two distinct covered components;
    * every later E_i attaches only to subgraphs or earlier disagreement edges.
    """
    out: List[str] = []
    m = emb.graph.m
    att = emb.attachments()
    parent: Dict[Tuple[str, int], Tuple[str, int]] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(m):
        find(("S", i))
    for j, e in enumerate(emb.used):
        ends = att[e]
        for kind, idx in ends:
            if kind == "E" and idx >= j:
                what = "itself" if idx == j else f"later disagreement edge E{idx + 1}"
                out.append(f"E{j + 1} is attached to {what}")
        pos = j + 1
        if pos == 1 and m >= 2:
            if any(kind != "S" for kind, _ in ends) or ends[0] == ends[1]:
                out.append("E1 is not attached to two distinct agreement subgraphs")
        if pos <= m - 1:
            ra, rb = find(ends[0]), find(ends[1])
            if ra == rb:
                out.append(f"E{pos} does not reduce the number of covered components")
            parent[ra] = rb
            parent[find(("E", j))] = rb
        else:
            for x in ends:
                parent[find(x)] = find(("E", j))
    return out


def is_ordered(emb: AgreementEmbedding) -> bool:
    return not ordered_violations(emb)


def _trail_decomposition(hg: MultiGraph, red: Set[int], comp: Dict[int, int]
                         ) -> Optional[List[Tuple[int, Tuple[int, ...]]]]:
    """Split red edges into ordered paths by depth-first search.

    ``comp`` maps every black host vertex to a black component id.  While
    several black components remain, each path joins two of them; afterwards
    any path with distinct black ends is taken.  Path ends must be black
    vertices of red degree one; after a path is taken its vertices turn
    black.  Returns ``[(start vertex, edge path), ...]`` or None when stuck.
    """
    red = set(red)
    comp = dict(comp)
    parent = {c: c for c in set(comp.values())}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    inc = hg.incidence
    rdeg: Dict[int, int] = defaultdict(int)
    for h in red:
        a, b = hg.edges[h]
        rdeg[a] += 1
        rdeg[b] += 1
    out: List[Tuple[int, Tuple[int, ...]]] = []

    def search(x: int, joining: bool) -> Optional[Tuple[List[int], List[int]]]:
        cx = find(comp[x])
        stack = [(x, iter(sorted(h for h in inc[x] if h in red)))]
        verts = [x]
        edges: List[int] = []
        seen = {x}
        while stack:
            v, it = stack[-1]
            advanced = False
            for h in it:
                w = hg.other_end(h, v)
                if w in comp:
                    if w != x and (not joining or find(comp[w]) != cx):
                        return verts + [w], edges + [h]
                    continue
                if w in seen:
                    continue
                seen.add(w)
                stack.append((w, iter(sorted(h2 for h2 in inc[w] if h2 in red and h2 != h))))
                verts.append(w)
                edges.append(h)
                advanced = True
                break
            if not advanced:
                stack.pop()
                verts.pop()
                if edges:
                    edges.pop()
        return None

    while red:
        joining = len({find(c) for c in comp.values()}) > 1
        found = None
        for x in sorted(v for v in comp if rdeg.get(v, 0) == 1):
            found = search(x, joining)
            if found:
                break
        if found is None:
            if joining:
                # no component-joining path exists; fall back is not allowed
                return None
            return None
        verts, edges = found
        cx = find(comp[verts[0]])
        for v in verts[1:-1]:
            comp[v] = cx
        parent[find(comp[verts[-1]])] = cx
        for h in edges:
            red.discard(h)
            a, b = hg.edges[h]
            rdeg[a] -= 1
            rdeg[b] -= 1
        if any(rdeg.get(v, 0) > 1 for v in verts if v in comp and v in (verts[0], verts[-1])):
            return None
        out.append((verts[0], tuple(edges)))
    return out


def ordered_embedding(emb: AgreementEmbedding) -> AgreementEmbedding:
    """Re-route the disagreement edges of ``emb`` into an ordered embedding.

    Agreement subgraph images are kept; the red edges are re-split by the
    black/red depth-first construction and assigned to ``used`` in order.
    """
    if not emb.used:
        return emb
    hg = emb.host
    G = emb.graph
    g = G.graph
    comp: Dict[int, int] = {}
    for i, vs in enumerate(G.subgraphs):
        for v in vs:
            comp[emb.vmap[v]] = i
        for e, (u, _) in g.edges.items():
            if u in vs:
                for x in walk_vertices(hg, emb.vmap[u], emb.paths[e]):
                    comp[x] = i
    trails = _trail_decomposition(hg, emb.red_edges(), comp)
    if trails is None or len(trails) != len(emb.used):
        raise AgreementError("red edges admit no ordered decomposition of the same size")
    paths = dict(emb.paths)
    vmap = dict(emb.vmap)
    for e, (start, tr) in zip(emb.used, trails):
        p, q = g.edges[e]
        paths[e] = tr
        vmap[p] = start
        vmap[q] = walk_vertices(hg, start, tr)[-1]
    return AgreementEmbedding(G, hg, paths, vmap, emb.used)


def embedding_change(emb: AgreementEmbedding, u_sprout: int, v_sprout: int) -> AgreementEmbedding:
    """Swap a path prefix between the edges at sprouts ``u_sprout`` and ``v_sprout``.

    With e = (u, w) mapped to P = (y..w) and f = (v, z) mapped to
    P' = (x..y..z), where y is inside P', the result maps e to (x..y..w) and
    f to (y..z): u moves to x and v moves to y.
    """
    g = emb.graph.graph
    hg = emb.host
    for s in (u_sprout, v_sprout):
        if s not in emb.vmap or not g.is_sprout(s):
            raise AgreementError(f"vertex {s} is not an embedded sprout")
    (e,) = g.incidence[u_sprout]
    (f,) = g.incidence[v_sprout]
    if e == f:
        raise AgreementError("the two sprouts lie on the same edge")

    def from_end(edge: int, sprout: int) -> List[int]:
        path = list(emb.paths[edge])
        return path if g.edges[edge][0] == sprout else path[::-1]

    p_e = from_end(e, u_sprout)
    p_f = from_end(f, v_sprout)
    y = emb.vmap[u_sprout]
    fv = walk_vertices(hg, emb.vmap[v_sprout], p_f)
    if y not in fv[1:-1]:
        raise AgreementError("first sprout is not attached to the edge of the second")
    i = fv.index(y, 1)
    new_e = p_f[:i] + p_e
    new_f = p_f[i:]

    def orient(edge: int, sprout: int, path: List[int]) -> Tuple[int, ...]:
        return tuple(path) if g.edges[edge][0] == sprout else tuple(reversed(path))

    paths = dict(emb.paths)
    paths[e] = orient(e, u_sprout, new_e)
    paths[f] = orient(f, v_sprout, new_f)
    vmap = dict(emb.vmap)
    vmap[u_sprout] = fv[0]
    vmap[v_sprout] = y
    return AgreementEmbedding(emb.graph, hg, paths, vmap, emb.used)


# -- red/black decompositions -------------------------------------------------


@dataclass
class BlackComponent:
    graph: MultiGraph                    # vertices are host vertex ids
    paths: Dict[int, Tuple[int, ...]]    # component edge -> host path from edges[e][0]

    @property
    def code(self) -> CanonicalCode:
        return self.graph.code()


@dataclass
class RedBlackDecomposition:
    host: MultiGraph
    red: FrozenSet[int]
    components: List[BlackComponent]
    trails: Optional[List[Tuple[int, Tuple[int, ...]]]] = None

    @property
    def k(self) -> int:
        return len(self.trails) if self.trails is not None else _red_count(self.host, self.red)

    @property
    def key(self) -> Tuple[CanonicalCode, ...]:
        return tuple(sorted(c.code for c in self.components))

    def black_comp_map(self) -> Dict[int, int]:
        out = {}
        for i, c in enumerate(self.components):
            for v in c.graph.vertices:
                out[v] = i
            for e, p in c.paths.items():
                for x in walk_vertices(self.host, c.graph.edges[e][0], p):
                    out[x] = i
        return out

    def with_trails(self) -> Optional["RedBlackDecomposition"]:
        trails = _trail_decomposition(self.host, set(self.red), self.black_comp_map())
        if trails is None:
            return None
        return RedBlackDecomposition(self.host, self.red, self.components, trails)


def _red_count(hg: MultiGraph, red) -> int:
    rdeg: Dict[int, int] = defaultdict(int)
    for h in red:
        a, b = hg.edges[h]
        rdeg[a] += 1
        rdeg[b] += 1
    return sum(1 for d in rdeg.values() if d in (1, 3)) // 2


def _walk_components(hg: MultiGraph, black: Set[int], keep: Set[int]) -> Optional[List[BlackComponent]]:
    """Suppress pass-through vertices of the black subgraph.

    ``keep`` are the vertices that survive (black degree other than two, or
    otherwise forced).  Returns None if some black cycle has no kept vertex.
    """
    inc = hg.incidence
    binc = {v: [h for h in inc[v] if h in black] for v in hg.vertices}
    seen: Set[int] = set()
    edges: List[Tuple[int, int, Tuple[int, ...]]] = []
    for v in sorted(keep):
        for h in binc[v]:
            if h in seen:
                continue
            path = [h]
            seen.add(h)
            cur = hg.other_end(h, v)
            prev = h
            while cur not in keep:
                nxt = [x for x in binc[cur] if x != prev or binc[cur].count(x) > 1]
                nxt = [x for x in nxt if x not in seen]
                if not nxt:  # pragma: no cover - degree bookkeeping
                    return None
                prev = nxt[0]
                seen.add(prev)
                path.append(prev)
                cur = hg.other_end(prev, cur)
            edges.append((v, cur, tuple(path)))
    if len(seen) != len(black):
        return None
    parent = {v: v for v in keep}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, _ in edges:
        parent[find(a)] = find(b)
    groups: Dict[int, List[int]] = defaultdict(list)
    for v in sorted(keep):
        groups[find(v)].append(v)
    comps = []
    for root in sorted(groups, key=lambda r: groups[r][0]):
        vs = groups[root]
        es = [(a, b, p) for a, b, p in edges if find(a) == root]
        eg = {i: (a, b) for i, (a, b, _) in enumerate(es)}
        labels = {v: hg.labels[v] for v in vs if v in hg.labels}
        cg = MultiGraph._raw(frozenset(vs), eg, labels, max(hg.vertices) + 1, len(eg))
        comps.append(BlackComponent(cg, {i: p for i, (_, _, p) in enumerate(es)}))
    return comps


def red_black(hg: MultiGraph, red: Iterable) -> Optional[RedBlackDecomposition]:
    """Black components for red set ``red``, or None if ``red`` is infeasible.

    Feasible means: red degree 0, 1 or 3 at every vertex and no black cycle
    without a branch vertex.
    """
    red = frozenset(red)
    rdeg: Dict[int, int] = defaultdict(int)
    for h in red:
        a, b = hg.edges[h]
        if a == b:
            return None
        rdeg[a] += 1
        rdeg[b] += 1
    for v, d in rdeg.items():
        if d == 2 or (d == 3 and v in hg.labels):
            return None
    black = set(hg.edges) - red
    keep = set()
    for v in hg.vertices:
        if rdeg.get(v, 0) == 3:
            continue
        bd = hg.degree(v) - rdeg.get(v, 0)
        if bd != 2 or v in hg.labels:
            keep.add(v)
    comps = _walk_components(hg, black, keep)
    if comps is None:
        return None
    return RedBlackDecomposition(hg, red, comps)




def iter_red_sets(hg: MultiGraph, k: int) -> Iterator[RedBlackDecomposition]:
    """Feasible red sets giving exactly k red paths, by increasing size."""
    edges = sorted(hg.edges)
    if k == 0:
        rb = red_black(hg, ())
        if rb is not None:
            yield rb
        return
    for size in range(k, min(3 * k - 2, len(edges)) + 1):
        for combo in combinations(edges, size):
            rdeg: Dict[int, int] = defaultdict(int)
            for h in combo:
                a, b = hg.edges[h]
                rdeg[a] += 1
                rdeg[b] += 1
            if any(d == 2 for d in rdeg.values()):
                continue
            d1 = sum(1 for d in rdeg.values() if d == 1)
            d3 = sum(1 for d in rdeg.values() if d == 3)
            if d1 + d3 != 2 * k:
                continue
            rb = red_black(hg, combo)
            if rb is not None:
                yield rb


class _KeyTable:
    """Red sets of one host grouped by black-component key, per k."""

    def __init__(self, host: PhyloNetwork):
        self.host = host
        self.by_k: Dict[int, Dict[Tuple[CanonicalCode, ...], List[RedBlackDecomposition]]] = {}

    def keys(self, k: int) -> Dict[Tuple[CanonicalCode, ...], List[RedBlackDecomposition]]:
        got = self.by_k.get(k)
        if got is None:
            got = defaultdict(list)
            for rb in iter_red_sets(self.host.graph, k):
                got[rb.key].append(rb)
            got = dict(got)
            self.by_k[k] = got
        return got


_tables: Dict[CanonicalCode, _KeyTable] = {}


def _table(net: PhyloNetwork) -> _KeyTable:
    t = _tables.get(net.code)
    if t is None:
        t = _tables[net.code] = _KeyTable(net)
    return t


def clear_caches() -> None:
    _tables.clear()


# -- assembling agreement graphs ---------------------------------------------


def _assemble(lower: RedBlackDecomposition, upper: RedBlackDecomposition, mode: str = MAG,
              upper_dis: Optional[List[Tuple[int, Tuple[int, ...]]]] = None,
              lower_sprouts: Optional[Dict[int, int]] = None,
              upper_sprouts: Optional[Dict[int, int]] = None):
    """Common agreement graph for two decompositions with equal keys.

    Returns (G, lower embedding, upper embedding).  ``*_sprouts`` map sprout
    vertices of component graphs to the host vertices they sit on (endpoint
    mode only, where component vertices are not host vertices).
    """
    lower_sprouts = lower_sprouts or {}
    upper_sprouts = upper_sprouts or {}
    lc = sorted(range(len(lower.components)), key=lambda i: (lower.components[i].code, i))
    comps = [lower.components[i] for i in lc]
    k_up = len(upper.trails) if upper_dis is None else len(upper_dis)
    k_low = len(lower.trails or [])
    G = AgreementGraph.build([c.graph for c in comps], k_up, mode)
    g = G.graph
    # recover vertex / edge correspondence of the disjoint union (sorted ids)
    vm_all: List[Dict[int, int]] = []
    em_all: List[Dict[int, int]] = []
    nv = ne = 0
    for c in comps:
        vm = {v: nv + i for i, v in enumerate(sorted(c.graph.vertices))}
        em = {e: ne + i for i, e in enumerate(sorted(c.graph.edges))}
        nv += len(vm)
        ne += len(em)
        vm_all.append(vm)
        em_all.append(em)

    def host_of(v: int, sprouts: Dict[int, int]) -> int:
        return sprouts.get(v, v)

    low_paths: Dict[int, Tuple[int, ...]] = {}
    low_vmap: Dict[int, int] = {}
    for c, vm, em in zip(comps, vm_all, em_all):
        for v, gv in vm.items():
            low_vmap[gv] = host_of(v, lower_sprouts)
        for e, ge in em.items():
            low_paths[ge] = c.paths[e]
    up_paths: Dict[int, Tuple[int, ...]] = {}
    up_vmap: Dict[int, int] = {}
    pool: Dict[CanonicalCode, List[int]] = defaultdict(list)
    for i, c in enumerate(comps):
        pool[c.code].append(i)
    for uc in sorted(upper.components, key=lambda c: c.code):
        i = pool[uc.code].pop(0)
        target = comps[i]
        iso = isomorphism(uc.graph, target.graph)
        if iso is None:  # pragma: no cover - equal codes
            raise AgreementError("matching components are not isomorphic")
        vmap, emap = iso
        for v, tv in vmap.items():
            up_vmap[vm_all[i][tv]] = host_of(v, upper_sprouts)
        for e, te in emap.items():
            ge = em_all[i][te]
            path = uc.paths[e]
            ua, _ = uc.graph.edges[e]
            ta, _ = target.graph.edges[te]
            if vmap[ua] != ta:
                path = tuple(reversed(path))
            up_paths[ge] = path
    low_trails = lower.trails or []
    up_trails = upper.trails if upper_dis is None else upper_dis
    for j, (start, tr) in enumerate(low_trails):
        e = G.disagreement[j]
        p, q = g.edges[e]
        low_paths[e] = tr
        low_vmap[p] = start
        low_vmap[q] = walk_vertices(lower.host, start, tr)[-1]
    for j, (start, tr) in enumerate(up_trails):
        e = G.disagreement[j]
        p, q = g.edges[e]
        up_paths[e] = tr
        up_vmap[p] = start
        up_vmap[q] = walk_vertices(upper.host, start, tr)[-1]
    ea = AgreementEmbedding(G, lower.host, low_paths, low_vmap, G.disagreement[:k_low])
    eb = AgreementEmbedding(G, upper.host, up_paths, up_vmap, G.disagreement[:k_up])
    return G, ea, eb


class AgreementResult(NamedTuple):
    distance: int
    graph: AgreementGraph
    embeddings: Tuple[AgreementEmbedding, AgreementEmbedding]


def agreement_distance(a: PhyloNetwork, b: PhyloNetwork, max_k: Optional[int] = None) -> AgreementResult:
    """Agreement distance with a certified maximum agreement graph.

    Iterative deepening on k: red sets of the lower-tier network with k - l
    paths are matched against red sets of the other network with k paths by
    sorted black-component codes.  The least matching key wins; its
    embeddings are made ordered and re-certified by the backtracking oracle.
    The returned embeddings are in argument order (into a, into b).
    """
    if sorted(a.graph.labels.values()) != sorted(b.graph.labels.values()):
        raise AgreementError("networks have different leaf sets")
    swapped = a.tier > b.tier
    lo, hi = (b, a) if swapped else (a, b)
    l = hi.tier - lo.tier
    t_lo, t_hi = _table(lo), _table(hi)
    limit = max_k if max_k is not None else len(hi.graph.edges)
    for k in range(l, limit + 1):
        keys_hi = t_hi.keys(k)
        keys_lo = t_lo.keys(k - l)
        for key in sorted(set(keys_hi) & set(keys_lo)):
            got = _certify_pair(lo, hi, keys_lo[key], keys_hi[key])
            if got is not None:
                G, e_lo, e_hi = got
                embs = (e_hi, e_lo) if swapped else (e_lo, e_hi)
                return AgreementResult(k, G, embs)
    raise AgreementError("no agreement graph found within the k limit")


def _rebase(rb: RedBlackDecomposition, net: PhyloNetwork) -> RedBlackDecomposition:
    """Translate a decomposition of a cached isomorphic host onto ``net``."""
    if rb.host is net.graph:
        return rb
    iso = isomorphism(rb.host, net.graph)
    if iso is None:  # pragma: no cover
        raise AgreementError("cached host is not isomorphic")
    _, emap = iso
    out = red_black(net.graph, [emap[h] for h in rb.red])
    assert out is not None
    return out


def _certify_pair(lo: PhyloNetwork, hi: PhyloNetwork, cands_lo, cands_hi):
    for rl in cands_lo:
        dl = _rebase(rl, lo).with_trails()
        if dl is None:
            continue
        for rh in cands_hi:
            dh = _rebase(rh, hi).with_trails()
            if dh is None:
                continue
            G, e_lo, e_hi = _assemble(dl, dh)
            if verify_embedding(e_lo) or verify_embedding(e_hi):
                continue
            if check_agreement_embedding(G, lo, len(e_lo.used)) is None:
                continue
            if check_agreement_embedding(G, hi, len(e_hi.used)) is None:
                continue
            return G, e_lo, e_hi
    return None


# -- endpoint agreement -----------------------------------------------------


def endpoint_agreement_distance(a: PhyloNetwork, b: PhyloNetwork, cfg: Optional[SearchConfig] = None,
                                cache: Optional[NeighborhoodCache] = None) -> int:
    """EAD, computed as the replug distance."""
    cfg = cfg or SearchConfig("replug")
    if cfg.operation != "replug":
        cfg = SearchConfig("replug", cfg.tier_window, cfg.tier_slack, cfg.node_budget, cfg.bidirectional)
    codes, _, _ = code_path(a, b, cfg, cache)
    return len(codes) - 1


def _cut_components(hg: MultiGraph, cuts: Mapping[int, int]):
    """Detach edge ``cuts[x]`` at vertex ``x`` for every cut; suppress and split.

    Returns (components, sprout -> host vertex) or None for a bare cycle.
    Component vertices are host ids for surviving host vertices and fresh
    ids for sprouts.
    """
    edges = dict(hg.edges)
    nxt = hg.next_vertex
    sprout_host: Dict[int, int] = {}
    for x in sorted(cuts):
        e = cuts[x]
        a, b = edges[e]
        s = nxt
        nxt += 1
        sprout_host[s] = x
        if a == x:
            edges[e] = (s, b)
        else:
            edges[e] = (a, s)
    verts = frozenset(set(hg.vertices) | set(sprout_host))
    cut_g = MultiGraph._raw(verts, edges, dict(hg.labels), nxt, hg.next_edge)
    keep = {v for v in verts if cut_g.degree(v) != 2 or v in cut_g.labels}
    comps = _walk_components(cut_g, set(edges), keep)
    if comps is None:
        return None
    return comps, sprout_host


def _iter_cuts(hg: MultiGraph, c: int) -> Iterator[Dict[int, int]]:
    inc = hg.incidence
    verts = sorted(hg.vertices)
    for chosen in combinations(verts, c):
        options = [sorted(set(inc[v])) for v in chosen]
        for pick in product(*options):
            yield dict(zip(chosen, pick))


def meag_search(a: PhyloNetwork, b: PhyloNetwork, budget: int = 5_000_000):
    """Minimum s + l over endpoint agreement graphs, with the graph found.

    The lower-tier network is split at s vertices (each detaches one incident
    edge, leaving a sprout); the other at s + 2l vertices, of which l
    detached single edges act as disagreement edges.  Component multisets
    must match.  Returns (value, AgreementGraph in MEAG mode).
    """
    swapped = a.tier > b.tier
    lo, hi = (b, a) if swapped else (a, b)
    l = hi.tier - lo.tier
    spent = 0
    k2 = _sprout_pair_code()
    for d in range(l, len(lo.graph.vertices) + len(hi.graph.vertices) + 1):
        s = d - l
        lo_keys: Dict[Tuple, List] = {}
        for cuts in _iter_cuts(lo.graph, s):
            spent += 1
            if spent > budget:
                raise BudgetError(spent)
            got = _cut_components(lo.graph, cuts)
            if got is None:
                continue
            comps, sh = got
            key = tuple(sorted(c.code for c in comps))
            lo_keys.setdefault(key, []).append((comps, sh))
        if not lo_keys:
            continue
        c_hi = s + 2 * l
        if c_hi > len(hi.graph.vertices):
            continue
        found = None
        for cuts in _iter_cuts(hi.graph, c_hi):
            spent += 1
            if spent > budget:
                raise BudgetError(spent)
            got = _cut_components(hi.graph, cuts)
            if got is None:
                continue
            comps, sh = got
            pairs = [i for i, c in enumerate(comps) if c.code == k2]
            if len(pairs) < l:
                continue
            dis_idx = set(sorted(pairs, key=lambda i: min(comps[i].paths[0]))[:l]) if l else set()
            rest = [c for i, c in enumerate(comps) if i not in dis_idx]
            key = tuple(sorted(c.code for c in rest))
            if key in lo_keys:
                cand = (key, comps, rest, dis_idx, sh)
                if found is None or key < found[0]:
                    found = cand
        if found is not None:
            key, comps, rest, dis_idx, sh_hi = found
            lo_comps, sh_lo = lo_keys[key][0]
            dis = []
            for i in sorted(dis_idx):
                c = comps[i]
                (p,) = c.paths.values()
                u, _ = c.graph.edges[0]
                dis.append((sh_hi.get(u, u), p))
            dlo = RedBlackDecomposition(lo.graph, frozenset(), lo_comps, [])
            dhi = RedBlackDecomposition(hi.graph, frozenset(), rest, [])
            G, e_lo, e_hi = _assemble(dlo, dhi, MEAG, upper_dis=dis,
                                      lower_sprouts=sh_lo, upper_sprouts=sh_hi)
            return d, G
    raise AgreementError("no endpoint agreement graph found")  # pragma: no cover


def meag_embeddings(a: PhyloNetwork, b: PhyloNetwork, G: AgreementGraph):
    """Certify a MEAG against both networks with the backtracking oracle."""
    lo_first = a.tier <= b.tier
    l = abs(a.tier - b.tier)
    ea = check_agreement_embedding(G, a, 0 if lo_first else l)
    eb = check_agreement_embedding(G, b, l if lo_first else 0)
    return ea, eb


class BudgetError(RuntimeError):
    def __init__(self, spent: int):
        super().__init__(f"candidate budget exhausted after {spent} configurations")
        self.spent = spent


_K2 = None


def _sprout_pair_code() -> CanonicalCode:
    global _K2
    if _K2 is None:
        _K2 = MultiGraph([0, 1], [(0, 1)]).code()
    return _K2


# -- maximum agreement forests (independent oracle) ---------------------------


def _clean_forest(g: MultiGraph) -> MultiGraph:
    """Drop unlabelled dead ends and suppress degree-2 vertices."""
    verts = set(g.vertices)
    edges = dict(g.edges)
    changed = True
    while changed:
        changed = False
        deg: Dict[int, int] = defaultdict(int)
        for a, b in edges.values():
            deg[a] += 1
            deg[b] += 1
        for v in sorted(verts):
            if v not in g.labels and deg[v] <= 1:
                verts.discard(v)
                for e in [e for e, (a, b) in edges.items() if v in (a, b)]:
                    del edges[e]
                changed = True
                break
    h = MultiGraph._raw(frozenset(verts), edges, {v: l for v, l in g.labels.items() if v in verts},
                        g.next_vertex, g.next_edge)
    changed = True
    while changed:
        changed = False
        for v in sorted(h.vertices):
            if v not in h.labels and h.degree(v) == 2:
                e1, e2 = h.incidence[v]
                a, b = h.other_end(e1, v), h.other_end(e2, v)
                es = dict(h.edges)
                del es[e1], es[e2]
                es[h.next_edge] = (a, b)
                h = MultiGraph._raw(h.vertices - {v}, es, h.labels, h.next_vertex, h.next_edge + 1)
                changed = True
                break
    return h


def _forest_key(g: MultiGraph) -> Tuple[CanonicalCode, ...]:
    comps = g.components()
    out = []
    for vs in comps:
        es = [e for e, (a, _) in g.edges.items() if a in set(vs)]
        out.append(g.subgraph(vs, es).code())
    return tuple(sorted(out))


def maf_distance(t1: PhyloNetwork, t2: PhyloNetwork) -> Tuple[int, List[MultiGraph]]:
    """Size of a maximum agreement forest minus one, by exhaustive edge deletion."""
    for t in (t1, t2):
        if not t.is_tree():
            raise AgreementError("maf_distance needs two trees")
    if sorted(t1.graph.labels.values()) != sorted(t2.graph.labels.values()):
        raise AgreementError("trees have different leaf sets")

    def forests(t: PhyloNetwork, size: int) -> Dict[Tuple, MultiGraph]:
        out = {}
        for cut in combinations(sorted(t.graph.edges), size):
            es = {e: t.graph.edges[e] for e in t.graph.edges if e not in cut}
            f = _clean_forest(MultiGraph._raw(t.graph.vertices, es, t.graph.labels,
                                              t.graph.next_vertex, t.graph.next_edge))
            out.setdefault(_forest_key(f), f)
        return out

    for size in range(len(t1.graph.edges) + 1):
        f1 = forests(t1, size)
        f2 = forests(t2, size)
        common = sorted(set(f1) & set(f2))
        if common:
            f = f1[common[0]]
            comps = []
            for vs in f.components():
                es = [e for e, (x, _) in f.edges.items() if x in set(vs)]
                comps.append(f.subgraph(vs, es))
            return size, comps
    raise AgreementError("no agreement forest")  # pragma: no cover


# -- MAG to TBR sequence -------------------------------------------------------


def mag_to_tbr_sequence(a: PhyloNetwork, b: PhyloNetwork, G: AgreementGraph,
                        emb_a: AgreementEmbedding, emb_b: AgreementEmbedding) -> RearrangementSequence:
    """TBR sequence of length d + k <= 2d built from a MAG and ordered embeddings.

    The network M_d carrying the agreement subgraphs, the lower network's
    red paths and the upper network's blue paths is built directly.  Peeling
    the blue paths in reverse order yields the lower network, peeling the
    red paths yields the upper one.  The TBR+ steps retrace the blue peel
    backwards, the TBR- steps follow the red peel.
    """
    for emb, host in ((emb_a, a), (emb_b, b)):
        if emb.graph is not G:
            raise AgreementError("embedding belongs to a different agreement graph")
        if emb.host is not host.graph:
            raise AgreementError("embedding belongs to a different host")
        problems = verify_embedding(emb)
        if problems:
            raise AgreementError("embedding not certified: " + problems[0])
        bad = ordered_violations(emb)
        if bad:
            raise AgreementError("embedding is not ordered: " + bad[0])
    if a.code == b.code and not emb_a.used and not emb_b.used:
        return RearrangementSequence(a, [], [])
    lower_first = len(emb_a.used) <= len(emb_b.used)
    lo_emb, hi_emb = (emb_a, emb_b) if lower_first else (emb_b, emb_a)
    md, red_edges, blue_edges = _build_md(G, lo_emb, hi_emb)
    blue_peel = _peel(md, blue_edges)   # md -> ... ~ lower
    red_peel = _peel(md, red_edges)     # md -> ... ~ upper
    lo_net = a if lower_first else b
    hi_net = b if lower_first else a
    if blue_peel[-1].code() != lo_net.code or red_peel[-1].code() != hi_net.code:
        raise AgreementError("constructed network does not reduce to both inputs")
    chain = [g.code() for g in reversed(blue_peel)] + [g.code() for g in red_peel[1:]]
    if not lower_first:
        chain = chain[::-1]
    chain[0] = a.code
    cur = a
    moves: List[Move] = []
    nets: List[PhyloNetwork] = []
    for target in chain[1:]:
        kinds = [TBR_PLUS, TBR_MINUS]
        nb = find_move(cur, target, "tbr", kinds)
        if nb is None:
            raise AgreementError("intermediate network is not one TBR step away")
        moves.append(nb.move)
        nets.append(nb.network)
        cur = nb.network
    return RearrangementSequence(a, moves, nets)


def _build_md(G: AgreementGraph, lo: AgreementEmbedding, hi: AgreementEmbedding):
    g = G.graph
    verts: Set[int] = set()
    labels: Dict[int, int] = {}
    edges: List[Tuple[int, int]] = []
    nxt = [max(g.vertices, default=-1) + 1]

    def fresh() -> int:
        v = nxt[0]
        nxt[0] += 1
        verts.add(v)
        return v

    sub_vertices = [v for vs in G.subgraphs for v in vs]
    for v in sub_vertices:
        verts.add(v)
        if v in g.labels:
            labels[v] = g.labels[v]
    singleton_w: Dict[int, int] = {}
    for v in g.singletons():
        w = fresh()
        singleton_w[v] = w
        edges.append((v, w))

    def points(emb: AgreementEmbedding, tag: str):
        """Attachment points: host vertex -> new vertex, grouped per owner chain."""
        hg = emb.host
        chain: Dict[Tuple[str, int], List[int]] = {}
        where: Dict[int, int] = {}
        singles = {emb.vmap[v]: v for v in g.singletons()}
        for e in G.subgraph_edges + list(emb.used):
            if e not in emb.paths:
                continue
            vs = walk_vertices(hg, emb.vmap[g.edges[e][0]], emb.paths[e])
            news = []
            for x in vs[1:-1]:
                nv = fresh()
                where[x] = nv
                news.append(nv)
            chain[(tag, e)] = news
        for x, v in singles.items():
            where.setdefault(x, singleton_w[v])
        return chain, where

    lo_chain, lo_where = points(lo, "R")
    hi_chain, hi_where = points(hi, "B")
    for e in G.subgraph_edges:
        u, v = g.edges[e]
        seq = [u] + lo_chain[("R", e)] + hi_chain[("B", e)] + [v]
        for x, y in zip(seq, seq[1:]):
            edges.append((x, y))
    red_ends: List[Tuple[int, int]] = []
    blue_ends: List[Tuple[int, int]] = []
    for emb, chain, where, tag, ends in ((lo, lo_chain, lo_where, "R", red_ends),
                                         (hi, hi_chain, hi_where, "B", blue_ends)):
        for e in emb.used:
            p, q = g.edges[e]
            s, t = where[emb.vmap[p]], where[emb.vmap[q]]
            seq = [s] + chain[(tag, e)] + [t]
            for x, y in zip(seq, seq[1:]):
                edges.append((x, y))
            ends.append((s, t))
    md = MultiGraph(verts, edges, labels)
    return md, red_ends, blue_ends


def _peel(md: MultiGraph, ends: List[Tuple[int, int]]) -> List[MultiGraph]:
    """Remove the given trails in reverse order; each is a single edge by then."""
    out = [md]
    cur = md
    for s, t in reversed(ends):
        cand = [e for e, (x, y) in sorted(cur.edges.items()) if {x, y} == {s, t}]
        if not cand:
            raise AgreementError("trail is not a single edge when peeled")
        cur = remove_edge(cur, cand[0])
        out.append(cur)
    return out


# -- random embeddings (for property checks) ---------------------------------


def random_embedding(net: PhyloNetwork, rng: random.Random, max_tries: int = 200
                     ) -> Optional[AgreementEmbedding]:
    """A random agreement embedding into ``net`` with randomly routed red paths.

    A random feasible red set is drawn; at each red-degree-3 vertex a random
    pair of red edges is joined into a through-route, then the resulting
    paths are shuffled.  The result is usually not ordered.
    """
    hg = net.graph
    edges = sorted(hg.edges)
    for _ in range(max_tries):
        size = rng.randint(1, max(1, len(edges) // 2))
        red = rng.sample(edges, size)
        rb = red_black(hg, red)
        if rb is None:
            continue
        trails = _random_trails(hg, set(red), rb, rng)
        if trails is None:
            continue
        rng.shuffle(trails)
        G, _, emb = _assemble(RedBlackDecomposition(hg, frozenset(), rb.components, []),
                              RedBlackDecomposition(hg, rb.red, rb.components, trails))
        if not verify_embedding(emb):
            return emb
    return None


def _random_trails(hg: MultiGraph, red: Set[int], rb: RedBlackDecomposition, rng: random.Random):
    inc = hg.incidence
    black = set(rb.black_comp_map())
    through: Dict[Tuple[int, int], int] = {}   # (vertex, edge) -> continuing edge
    for v in hg.vertices:
        rs = [h for h in inc[v] if h in red]
        if len(rs) == 3:
            a, b, _ = rng.sample(rs, 3)
            through[(v, a)] = b
            through[(v, b)] = a
        elif len(rs) == 2:
            return None
    ends = [(v, h) for v in sorted(hg.vertices) for h in inc[v]
            if h in red and (v, h) not in through]
    seen: Set[int] = set()
    trails = []
    for v, h in ends:
        if h in seen:
            continue
        path = [h]
        seen.add(h)
        cur = hg.other_end(h, v)
        while (cur, path[-1]) in through:
            nh = through[(cur, path[-1])]
            if nh in seen:
                return None
            seen.add(nh)
            path.append(nh)
            cur = hg.other_end(nh, cur)
        if cur == v:
            return None
        trails.append((v, tuple(path)))
    if seen != red:
        return None
    del black
    return trails

