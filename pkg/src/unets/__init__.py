"""Unrooted phylogenetic networks: TBR/PR/replug distances and agreement graphs."""

from .multigraph import GraphError, MultiGraph, canonical_form, isomorphism
from .phylo import NetworkError, PhyloNetwork, ReplugNetwork, displays, is_proper, validate_network
from .netformat import ParseError, parse, serialize, to_dot

__version__ = "0.1.0"

__all__ = [
    "GraphError", "MultiGraph", "canonical_form", "isomorphism",
    "NetworkError", "PhyloNetwork", "ReplugNetwork", "displays", "is_proper", "validate_network",
    "ParseError", "parse", "serialize", "to_dot",
]
