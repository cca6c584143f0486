"""The ``unets 1`` edge-list text format and Graphviz DOT export.

Grammar (line oriented, ``#`` starts a comment, blank lines ignored)::

    unets 1
    v <id>            declare an unlabelled vertex
    v <id> <label>    declare a vertex with a positive integer label
    e <id1> <id2>     declare an edge (repeat for parallel edges, ``e u u`` is a loop)

Vertex ids are ASCII alphanumeric tokens.  Purely numeric ids are kept as
integer vertex ids; other ids are numbered after the largest numeric id in
order of declaration.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple, Union

from .multigraph import GraphError, MultiGraph

MAGIC = "unets 1"


class ParseError(ValueError):
    """A positioned diagnostic for malformed ``unets`` input."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


def _tokens(text: str) -> Iterable[Tuple[int, List[Tuple[int, str]]]]:
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        cut = line.find("#")
        if cut >= 0:
            line = line[:cut]
        toks = []
        col = 0
        while col < len(line):
            if line[col] in " \t":
                col += 1
                continue
            start = col
            while col < len(line) and line[col] not in " \t":
                col += 1
            toks.append((start + 1, line[start:col]))
        yield lineno, toks


def parse(data: Union[str, bytes]) -> MultiGraph:
    """Parse a ``unets 1`` document into a :class:`MultiGraph`."""
    if isinstance(data, bytes):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            prefix = data[:exc.start]
            line = prefix.count(b"\n") + 1
            col = exc.start - (prefix.rfind(b"\n") + 1) + 1
            raise ParseError(line, col, "non-ASCII byte") from None
    else:
        text = data

    seen_magic = False
    names: Dict[str, Tuple[int, int]] = {}
    decl_order: List[str] = []
    labels: Dict[str, int] = {}
    label_owner: Dict[int, str] = {}
    edge_lines: List[Tuple[int, List[Tuple[int, str]]]] = []

    for lineno, toks in _tokens(text):
        if not toks:
            continue
        if not seen_magic:
            if [t for _, t in toks] != ["unets", "1"]:
                raise ParseError(lineno, toks[0][0], f"expected header {MAGIC!r}")
            seen_magic = True
            continue
        col, head = toks[0]
        if head == "v":
            if len(toks) not in (2, 3):
                raise ParseError(lineno, col, "vertex declaration takes an id and an optional label")
            vcol, name = toks[1]
            _check_id(lineno, vcol, name)
            if name in names:
                raise ParseError(lineno, vcol, f"duplicate vertex {name!r}")
            names[name] = (lineno, vcol)
            decl_order.append(name)
            if len(toks) == 3:
                lcol, lab = toks[2]
                if not lab.isdigit() or not lab.isascii() or int(lab) <= 0:
                    raise ParseError(lineno, lcol, f"malformed label {lab!r}")
                value = int(lab)
                if value in label_owner:
                    raise ParseError(lineno, lcol, f"duplicate label {value}")
                if value > 65535:
                    raise ParseError(lineno, lcol, f"label {value} out of range")
                label_owner[value] = name
                labels[name] = value
        elif head == "e":
            if len(toks) != 3:
                raise ParseError(lineno, col, "edge declaration takes exactly two vertex ids")
            for c, name in toks[1:]:
                _check_id(lineno, c, name)
            edge_lines.append((lineno, toks))
        else:
            raise ParseError(lineno, col, f"unknown directive {head!r}")

    if not seen_magic:
        raise ParseError(1, 1, f"missing header {MAGIC!r}")

    ids = _assign_ids(decl_order)
    edges: Dict[int, Tuple[int, int]] = {}
    degree: Dict[str, int] = {}
    for lineno, toks in edge_lines:
        ends = []
        for c, name in toks[1:]:
            if name not in names:
                raise ParseError(lineno, c, f"undeclared endpoint {name!r}")
            ends.append(name)
        for name in ends:
            degree[name] = degree.get(name, 0) + 1
            if name in labels and degree[name] > 1:
                raise ParseError(lineno, toks[1][0], f"labelled vertex {name!r} would exceed degree 1")
        edges[len(edges)] = (ids[ends[0]], ids[ends[1]])
    try:
        return MultiGraph(ids.values(), edges, {ids[n]: l for n, l in labels.items()})
    except GraphError as exc:  # pragma: no cover - guarded above
        raise ParseError(1, 1, str(exc)) from None


def _check_id(lineno: int, col: int, name: str) -> None:
    if not (name.isascii() and name.isalnum()):
        raise ParseError(lineno, col, f"malformed vertex id {name!r}")
    if name.isdigit() and int(name) > 10**9:
        raise ParseError(lineno, col, f"vertex id {name!r} out of range")


def _assign_ids(names: List[str]) -> Dict[str, int]:
    ids: Dict[str, int] = {}
    numeric = [int(n) for n in names if n.isdigit()]
    taken = set()
    for n in names:
        if n.isdigit():
            v = int(n)
            if v in taken:
                # "7" and "007" collide; fall back to fresh numbering for the latter
                continue
            ids[n] = v
            taken.add(v)
    nxt = max(numeric, default=-1) + 1
    for n in names:
        if n not in ids:
            while nxt in taken:
                nxt += 1
            ids[n] = nxt
            taken.add(nxt)
            nxt += 1
    return ids


def serialize(g: MultiGraph, comments: Iterable[str] = ()) -> str:
    """Deterministic ``unets 1`` text for ``g`` (LF line endings)."""
    out = [MAGIC]
    for c in comments:
        if "\n" in c or "\r" in c or not c.isascii():
            raise ValueError(f"comment must be one ASCII line: {c!r}")
        out.append(f"# {c}")
    for v in sorted(g.vertices):
        lab = g.labels.get(v)
        out.append(f"v {v}" if lab is None else f"v {v} {lab}")
    for e in sorted(g.edges, key=lambda e: (min(g.edges[e]), max(g.edges[e]), e)):
        a, b = g.edges[e]
        out.append(f"e {min(a, b)} {max(a, b)}")
    return "\n".join(out) + "\n"


def to_dot(g: MultiGraph, highlight: Optional[Iterable[int]] = None, name: str = "G") -> str:
    """Graphviz ``graph`` text; highlighted edges are drawn bold red."""
    hl = set(highlight or ())
    unknown = hl - set(g.edges)
    if unknown:
        raise GraphError(f"unknown highlight edge ids {sorted(unknown)}")
    lines = [f"graph {name} {{", "  node [shape=point];"]
    for v in sorted(g.vertices):
        lab = g.labels.get(v)
        if lab is None:
            lines.append(f"  v{v};")
        else:
            lines.append(f'  v{v} [shape=plaintext, label="{lab}"];')
    for e in sorted(g.edges, key=lambda e: (min(g.edges[e]), max(g.edges[e]), e)):
        a, b = g.edges[e]
        a, b = min(a, b), max(a, b)
        attr = ' [color=red, penwidth=2.5]' if e in hl else ""
        lines.append(f"  v{a} -- v{b}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def read_file(path) -> MultiGraph:
    with open(path, "rb") as fh:
        return parse(fh.read())


def write_file(path, g: MultiGraph, comments: Iterable[str] = ()) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(serialize(g, comments))
