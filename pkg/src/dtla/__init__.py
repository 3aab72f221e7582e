"""Look-ahead removal for deterministic top-down tree transducers."""

from .fileformat import dump, load, parse, unparse
from .transducer import Dtla, LookaheadAutomaton, eval_state, eval_tree, delta_star
from .trees import BOTTOM, Call, Pair, RankedAlphabet, Tree, parse_tree

__all__ = [
    "BOTTOM", "Call", "Dtla", "LookaheadAutomaton", "Pair", "RankedAlphabet", "Tree",
    "delta_star", "dump", "eval_state", "eval_tree", "load", "parse", "parse_tree", "unparse",
]
