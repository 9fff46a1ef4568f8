"""Binary-tree determinization of stream automata and annotated cyclic proofs
for the modal mu-calculus."""

from .automata import (Buchi, Lasso, Parity, Rabin, RabinPair, StreamAutomaton,
                       accepts_lasso, compare_on_lassos, parse_automaton)
from .btproof import check_bt, prove, saturate, translate_nw_to_bt
from .determinize import det_buchi, det_parity, parity_to_buchi
from .mucalc import closure, parse_formula
from .nwproof import check_nw, tracking_automaton

__all__ = ["Buchi", "Lasso", "Parity", "Rabin", "RabinPair", "StreamAutomaton", "accepts_lasso",
           "compare_on_lassos", "parse_automaton", "check_bt", "prove", "saturate",
           "translate_nw_to_bt", "det_buchi", "det_parity", "parity_to_buchi", "closure",
           "parse_formula", "check_nw", "tracking_automaton"]
__version__ = "0.1.0"
