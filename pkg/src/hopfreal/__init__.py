"""Generating series, Lie rank and formal realizations of polynomial control systems."""

from hopfreal.chen import (
    ControlSignals,
    compare_series_vs_simulation,
    exact_remainder,
    iterated_integrals,
    series_output,
    simulate,
    verify_shuffle_identity,
)
from hopfreal.diffops import Derivation, MultiPoly, System, apply_word, parse_multipoly, psi
from hopfreal.errors import (
    AlphabetMismatch,
    DegreeExceeded,
    HopfRealError,
    IncompleteBasis,
    NonFinite,
    NotLyndon,
    ParseError,
    SingularBasis,
)
from hopfreal.freealg import (
    Alphabet,
    NoncommPoly,
    Series,
    coproduct,
    lact,
    pair,
    ract,
    series_mul,
    shuffle_words,
)
from hopfreal.liepbw import OrderedLieBasis, express_in_pbw, lyndon_bracket, lyndon_words, pbw_monomials
from hopfreal.realize import (
    Realization,
    build_realization,
    generating_series,
    induced_vector_fields,
    lie_rank,
    regenerate_series,
    verify_realization,
)
from hopfreal.treehopf import LabeledTree, TreePoly, gl_coproduct, gl_product, is_primitive_tree, tree_parse

__version__ = "0.1.0"
