"""Command-line interface: ``unets <subcommand> ...``.

Output is one result per line as ``key=value`` pairs.  Exit status is 0 on
success, 1 when a claim or validation fails, and 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .agreement import (agreement_distance, check_agreement_embedding, endpoint_agreement_distance,
                        maf_distance, mag_to_tbr_sequence)
from .corpus import CLAIMS, CorpusSpec, random_network, verify_claims
from .multigraph import GraphError
from .netformat import ParseError, read_file, serialize, to_dot
from .phylo import NetworkError, PhyloNetwork, ReplugNetwork
from .rearrange import PR0, REPLUG_H, REPLUG_MINUS, REPLUG_PLUS, TBR0, TBR_MINUS, TBR_PLUS, neighbors
from .search import SearchConfig, bfs_distance, enumerate_tier

OPS = {
    "tbr0": ("tbr", (TBR0,)),
    "tbr+": ("tbr", (TBR_PLUS,)),
    "tbr-": ("tbr", (TBR_MINUS,)),
    "pr0": ("pr", (PR0,)),
    "replug": ("replug", (REPLUG_H, REPLUG_PLUS, REPLUG_MINUS)),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load(path: str) -> PhyloNetwork:
    g = read_file(path)
    try:
        return PhyloNetwork(g)
    except NetworkError as exc:
        raise UsageError(f"{path}: not a proper network ({exc})") from None


def _tiers(text: str):
    lo, sep, hi = text.partition("..")
    try:
        return (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="unets", description="Rearrangement and agreement distances on unrooted networks.")
    p.add_argument("--version", action="version", version=f"unets {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="validate a network file")
    s.add_argument("file")

    s = sub.add_parser("dist", help="distance between two networks")
    s.add_argument("--metric", required=True, choices=["tbr", "pr", "replug", "ad", "ead"])
    s.add_argument("--tier-slack", type=int, default=1)
    s.add_argument("a")
    s.add_argument("b")

    s = sub.add_parser("neighbors", help="one-step neighbourhood of a network")
    s.add_argument("--op", required=True, choices=sorted(OPS))
    s.add_argument("file")

    s = sub.add_parser("enumerate", help="count all proper networks of a tier")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tier", type=int, required=True)
    s.add_argument("--codes", action="store_true", help="also print every canonical code")

    s = sub.add_parser("maf", help="maximum agreement forest distance of two trees")
    s.add_argument("a")
    s.add_argument("b")

    s = sub.add_parser("mag", help="maximum agreement graph of two networks")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--emit-dot", metavar="DIR")
    s.add_argument("--emit-sequence", action="store_true")

    s = sub.add_parser("verify", help="check distance relations on a corpus")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tiers", type=_tiers, required=True)
    s.add_argument("--count", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--claims", default=",".join(CLAIMS))
    s.add_argument("--timings", action="store_true")

    s = sub.add_parser("gen", help="print a seeded random network")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tier", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--index", type=int, default=0)
    return p


def _out(*pairs, **kw) -> None:
    items = list(pairs) + [f"{k}={v}" for k, v in kw.items()]
    print(" ".join(items))


def cmd_validate(args) -> int:
    g = read_file(args.file)
    try:
        net = PhyloNetwork(g)
    except NetworkError as exc:
        _out(valid="false", clause=exc.clause, reason=repr(str(exc)))
        return 1
    _out(valid="true", n=net.n, tier=net.tier, digest=hashlib.sha256(net.code).hexdigest()[:16])
    return 0


def cmd_dist(args) -> int:
    a, b = _load(args.a), _load(args.b)
    m = args.metric
    if m == "ad":
        res = agreement_distance(a, b)
        ok = all(check_agreement_embedding(res.graph, h, len(e.used)) is not None
                 for h, e in zip((a, b), res.embeddings))
        _out(ad=res.distance)
        _out(subgraphs=res.graph.m, disagreement=res.graph.k, certified=str(ok).lower())
        return 0 if ok else 1
    if m == "ead":
        d = endpoint_agreement_distance(a, b, SearchConfig("replug", tier_slack=args.tier_slack))
        _out(ead=d)
        return 0
    res = bfs_distance(a, b, SearchConfig(m, tier_slack=args.tier_slack))
    replayed = res.witness.replay() if res.witness.moves else []
    end = replayed[-1] if replayed else res.witness.start
    ok = end.code == (ReplugNetwork.from_network(b) if m == "replug" else b).code
    _out(**{m: res.distance})
    _out(window=f"{res.window[0]}..{res.window[1]}", explored=res.explored, certified=str(ok).lower())
    for i, mv in enumerate(res.witness.moves, 1):
        _out(step=i, move=repr(str(mv)))
    return 0 if ok else 1


def cmd_neighbors(args) -> int:
    net = _load(args.file)
    op, kinds = OPS[args.op]
    if op == "replug":
        net = ReplugNetwork.from_network(net)
    nbs = neighbors(net, op, kinds)
    _out(count=len(nbs))
    for nb in nbs:
        _out(move=repr(str(nb.move)), tier=nb.network.tier, digest=hashlib.sha256(nb.network.code).hexdigest()[:16])
    return 0


def cmd_enumerate(args) -> int:
    if args.n < 1 or args.tier < 0:
        raise UsageError("--n must be positive and --tier non-negative")
    codes = enumerate_tier(args.n, args.tier)
    _out(n=args.n, tier=args.tier, count=len(codes))
    if args.codes:
        for c in sorted(codes):
            _out(code=c.hex())
    return 0


def cmd_maf(args) -> int:
    a, b = _load(args.a), _load(args.b)
    if not (a.is_tree() and b.is_tree()):
        raise UsageError("maf needs two trees")
    d, forest = maf_distance(a, b)
    _out(maf=d, components=len(forest))
    return 0


def cmd_mag(args) -> int:
    a, b = _load(args.a), _load(args.b)
    res = agreement_distance(a, b)
    ea, eb = res.embeddings
    _out(ad=res.distance, subgraphs=res.graph.m, disagreement=res.graph.k,
         sprouts=res.graph.total_sprouts())
    for i in range(res.graph.m):
        sg = res.graph.subgraph(i)
        _out(subgraph=i + 1, vertices=len(sg.vertices), edges=len(sg.edges),
             labels=",".join(str(l) for l in sorted(sg.labels.values())) or "-")
    ok = True
    if args.emit_dot:
        os.makedirs(args.emit_dot, exist_ok=True)
        for tag, emb in (("a", ea), ("b", eb)):
            path = os.path.join(args.emit_dot, f"mag_{tag}.dot")
            with open(path, "w", newline="\n") as fh:
                fh.write(to_dot(emb.host, emb.red_edges(), name=f"host_{tag}"))
            _out(dot=path)
    if args.emit_sequence:
        seq = mag_to_tbr_sequence(a, b, res.graph, ea, eb)
        end = seq.replay()[-1] if seq.moves else a
        ok = end.code == b.code and len(seq) <= 2 * res.distance
        _out(length=len(seq), certified=str(ok).lower())
        for i, mv in enumerate(seq.moves, 1):
            _out(step=i, move=repr(str(mv)))
    return 0 if ok else 1


def cmd_verify(args) -> int:
    claims = [c for c in args.claims.split(",") if c]
    unknown = set(claims) - set(CLAIMS)
    if unknown:
        raise UsageError(f"unknown claims: {','.join(sorted(unknown))}")
    spec = CorpusSpec(args.n, args.tiers, args.count, args.seed)
    report = verify_claims(spec, claims)
    sys.stdout.write(report.text(timings=args.timings))
    return 0 if report.ok else 1


def cmd_gen(args) -> int:
    spec = CorpusSpec(args.n, (args.tier, args.tier), 1, args.seed)
    net = random_network(spec, args.index)
    sys.stdout.write(serialize(net.graph, [f"seed={args.seed} index={args.index} n={args.n} tier={args.tier}"]))
    return 0


COMMANDS = {
    "validate": cmd_validate, "dist": cmd_dist, "neighbors": cmd_neighbors,
    "enumerate": cmd_enumerate, "maf": cmd_maf, "mag": cmd_mag, "verify": cmd_verify, "gen": cmd_gen,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error={exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"error=parse line={exc.line} column={exc.column} message={exc.message!r}", file=sys.stderr)
        return 2
    except (OSError, GraphError, ValueError) as exc:
        print(f"error={exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
