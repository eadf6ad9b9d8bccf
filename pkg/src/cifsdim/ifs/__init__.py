"""Countable conformal systems: maps, digit sets, pressure and symbolic covers."""
from .digits import DigitSet, nonexistence_sequence
from .maps import ComposedGaussBranch, GaussBranch, Mobius, Similarity
from .pressure import Bracket, hausdorff_dim, pressure
from .symbolic import (SymbolicCover, TauEstimate, contraction_norm, fixed_point_set, stopping_words,
                       symbolic_covering_estimate)
from .system import CIFS, Truncation, Word, gauss_cifs, similarity_system, system_from_json

__all__ = ["CIFS", "Bracket", "ComposedGaussBranch", "DigitSet", "GaussBranch", "Mobius", "Similarity",
           "SymbolicCover", "TauEstimate", "Truncation", "Word", "contraction_norm", "fixed_point_set",
           "gauss_cifs", "hausdorff_dim", "nonexistence_sequence", "pressure", "similarity_system",
           "stopping_words", "symbolic_covering_estimate", "system_from_json"]
