"""Omega-regular decision processes toolkit."""

from .automata import (
    TOP,
    Alphabet,
    Automaton,
    LassoWord,
    instantiate,
    intersect_nba,
    is_empty,
    is_strongly_limit_deterministic,
    lasso_member_nba,
    lasso_member_uca,
)
from .collect import build_collection
from .complement import ComplementOptions, complement_uca
from .hoa import emit_hoa, parse_hoa

__version__ = "0.1.0"
