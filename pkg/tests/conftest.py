"""Shared builders and independent brute-force oracles for the test suite."""

from __future__ import annotations

from itertools import combinations
from typing import Dict, List

import pytest

from unets.multigraph import MultiGraph, canonical_form
from unets.phylo import PhyloNetwork


def quartet(a: int, b: int, c: int, d: int) -> PhyloNetwork:
    """The quartet tree ab|cd with internal vertices 10 and 11."""
    g = MultiGraph([1, 2, 3, 4, 10, 11],
                   [(1, 10), (2, 10), (10, 11), (3, 11), (4, 11)],
                   {1: a, 2: b, 3: c, 4: d})
    return PhyloNetwork(g)


def edge_list_graph(edges, labels) -> MultiGraph:
    verts = sorted({x for e in edges for x in e} | set(labels))
    return MultiGraph(verts, list(edges), labels)


def all_trees_by_insertion(n: int) -> Dict[bytes, MultiGraph]:
    """Every unrooted binary tree on leaves 1..n, by every leaf-insertion order.

    Written without the library's move generators: leaf k is hung in turn
    from every edge of every tree on k-1 leaves.
    """
    level: List[MultiGraph] = [MultiGraph([0, 1], [(0, 1)], {0: 1, 1: 2})]
    for leaf in range(3, n + 1):
        nxt = []
        for g in level:
            for e, (u, v) in g.edges.items():
                mid, new = max(g.vertices) + 1, max(g.vertices) + 2
                edges = [x for k, x in sorted(g.edges.items()) if k != e]
                edges += [(u, mid), (mid, v), (mid, new)]
                labels = dict(g.labels)
                labels[new] = leaf
                nxt.append(MultiGraph(g.vertices | {mid, new}, edges, labels))
        level = nxt
    return {canonical_form(g): g for g in level}


def brute_cyclomatic(g: MultiGraph) -> int:
    """Fewest edge deletions leaving an acyclic graph, by trying subsets in size order."""
    edges = sorted(g.edges)
    for k in range(len(edges) + 1):
        for drop in combinations(edges, k):
            keep = [g.edges[e] for e in edges if e not in drop]
            if _acyclic(g.vertices, keep):
                return k
    raise AssertionError("unreachable")


def _acyclic(vertices, edges) -> bool:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        a, b = find(u), find(v)
        if a == b:
            return False
        parent[a] = b
    return True


# -- acceptance line collection --------------------------------------------------

ACCEPTANCE: Dict[int, str] = {}


@pytest.fixture
def acceptance_line():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


def brute_displays(host: MultiGraph, tree: MultiGraph) -> bool:
    """Delete every subset of host edges, tidy up, and compare with ``tree``.

    Tidying repeatedly drops unlabelled vertices of degree at most one and
    smooths unlabelled degree-2 vertices, using only plain dictionaries.
    """
    target = canonical_form(tree)
    edges = sorted(host.edges)
    for k in range(len(edges) + 1):
        for drop in combinations(edges, k):
            kept = {e: host.edges[e] for e in edges if e not in drop}
            g = _tidy(set(host.vertices), kept, host.labels)
            if g is not None and canonical_form(g) == target:
                return True
    return False


def _tidy(vertices, edges, labels):
    edges = dict(edges)
    nxt = max(edges, default=0) + 1
    changed = True
    while changed:
        changed = False
        inc = {v: [] for v in vertices}
        for e, (a, b) in edges.items():
            inc[a].append(e)
            inc[b].append(e)
        for v in sorted(vertices):
            if v in labels:
                continue
            if len(inc[v]) <= 1:
                for e in inc[v]:
                    del edges[e]
                vertices.discard(v)
                changed = True
                break
            if len(inc[v]) == 2 and inc[v][0] != inc[v][1]:
                e1, e2 = inc[v]
                a = [x for x in edges[e1] if x != v] or [v]
                b = [x for x in edges[e2] if x != v] or [v]
                del edges[e1], edges[e2]
                edges[nxt] = (a[0], b[0])
                nxt += 1
                vertices.discard(v)
                changed = True
                break
    if not vertices:
        return None
    g = MultiGraph(vertices, edges, labels)
    return g if g.is_connected() and g.cyclomatic_number() == 0 else None
