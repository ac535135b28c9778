import itertools
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_poly, random_system
from hopfreal.diffops import (
    Derivation,
    MultiPoly,
    System,
    apply_derivation,
    apply_word,
    compile_float,
    eval_point,
    format_multipoly,
    parse_multipoly,
    partial,
    psi,
)
from hopfreal.errors import ParseError
from hopfreal.treehopf import ROOT, TreePoly, all_trees, gl_coproduct, gl_product, one_child_tree, tree_parse

X = ["x1", "x2"]


def P(s, names=X):
    return parse_multipoly(s, names)


def to_sympy(f: MultiPoly, syms):
    return sum((sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*(s**k for s, k in zip(syms, e))) for e, c in f.terms.items()), sympy.Integer(0))


def psi_oracle(sys: System, t, f: MultiPoly):
    """Tree operator from the index-sum formula, evaluated with sympy."""
    syms = sympy.symbols(f"y1:{sys.N + 1}")
    b = [[to_sympy(c, syms) for c in E.coeffs] for E in sys.derivations]
    nodes = []

    def visit(n):
        k = len(nodes)
        nodes.append((n.label, []))
        for c in n.children:
            nodes[k][1].append(visit(c))
        return k

    visit(t)
    total = sympy.Integer(0)
    for mu in itertools.product(range(sys.N), repeat=len(nodes) - 1):
        term = sympy.diff(to_sympy(f, syms), *[syms[mu[j - 1]] for j in nodes[0][1]]) if nodes[0][1] else to_sympy(f, syms)
        for k in range(1, len(nodes)):
            label, kids = nodes[k]
            bk = b[label - 1][mu[k - 1]]
            term *= sympy.diff(bk, *[syms[mu[j - 1]] for j in kids]) if kids else bk
        total += term
    return sympy.expand(total), syms


class TestPolynomials:
    def test_partial_examples(self):
        assert partial(P("x1^2"), 1) == P("2*x1")
        assert partial(P("x1"), 2) == 0
        assert partial(P("x1*x2 + x1^3"), 1) == P("x2 + 3*x1^2")

    def test_eval_examples(self):
        assert eval_point(MultiPoly.constant(Fraction(7, 3), 2), (5, -1)) == Fraction(7, 3)
        assert eval_point(P("x1*x2"), (1, 2)) == 2
        assert eval_point(P("x1^2", ["x1"]), (3,)) == 9

    @given(st.integers(0, 10**6))
    def test_ring_laws(self, seed):
        rng = random.Random(seed)
        f, g, h = (random_poly(rng, 2, 2) for _ in range(3))
        assert (f * g) * h == f * (g * h)
        assert f * (g + h) == f * g + f * h
        assert (f - f) == 0
        pt = (Fraction(rng.randint(-3, 3), 2), Fraction(rng.randint(-3, 3), 3))
        assert eval_point(f * g, pt) == eval_point(f, pt) * eval_point(g, pt)

    def test_power(self):
        assert P("x1 + x2") ** 2 == P("x1^2 + 2*x1*x2 + x2^2")
        assert P("x1") ** 0 == 1

    def test_compile_float(self):
        fn = compile_float(P("3/4*x1^2 - x2 + 1"))
        assert fn([2.0, 1.0]) == pytest.approx(3.0)
        assert compile_float(MultiPoly({}, 2))([1.0, 1.0]) == 0.0

    def test_weighted_truncation(self):
        f = P("x1^2 + x2 + x1*x2 + 1")
        assert f.truncate(2, weights=(1, 2)) == P("x1^2 + x2 + 1")


class TestParsing:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("x1 + x2^2", {(1, 0): 1, (0, 2): 1}),
            ("(x1 - 1)^2", {(2, 0): 1, (1, 0): -2, (0, 0): 1}),
            ("3/4 * x1 * x2", {(1, 1): Fraction(3, 4)}),
            ("-x2 + 0.5", {(0, 1): -1, (0, 0): Fraction(1, 2)}),
            ("x1/2", {(1, 0): Fraction(1, 2)}),
            ("2^3", {(0, 0): 8}),
            ("  x1*  x1 ", {(2, 0): 1}),
        ],
    )
    def test_parse(self, text, expected):
        assert P(text) == MultiPoly(expected, 2)

    @pytest.mark.parametrize("text", ["x3", "x1 +", "(x1", "x1/x2", "x1^x2", "x1/0", "x1 $ 2", ""])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            P(text)

    def test_format(self):
        assert format_multipoly(P("x1*x2 + x1^3 - 3/4*x2^2 + 3/2*x2 - 3/4")) == "x1^3 + x1*x2 - 3/4*x2^2 + 3/2*x2 - 3/4"
        assert format_multipoly(MultiPoly({}, 2)) == "0"
        assert format_multipoly(P("-x1")) == "-x1"

    @given(st.integers(0, 10**6))
    def test_format_round_trip(self, seed):
        f = random_poly(random.Random(seed), 2, 3)
        assert P(format_multipoly(f)) == f


class TestDerivations:
    def test_examples(self):
        E = Derivation((P("x1", ["x1"]),))
        assert apply_derivation(E, P("x1", ["x1"])) == P("x1", ["x1"])
        assert apply_derivation(E, MultiPoly.constant(5, 1)) == 0
        assert apply_derivation(Derivation((P("x2"), P("x1"))), P("x1")) == P("x2")

    @given(st.integers(0, 10**6))
    def test_leibniz(self, seed):
        rng = random.Random(seed)
        E = Derivation((random_poly(rng, 2, 2), random_poly(rng, 2, 2)))
        f, g = random_poly(rng, 2, 2), random_poly(rng, 2, 2)
        assert E(f * g) == E(f) * g + f * E(g)

    def test_word_order(self):
        sys = System.from_strings([["1", "0"], ["0", "x1"]], "x2", [0, 0])
        assert apply_word(sys, (1, 2), sys.observation) == 0
        assert apply_word(sys, (2, 1), sys.observation) == 1
        assert apply_word(sys, (), sys.observation) == sys.observation

    def test_linear_word(self):
        sys = System.from_strings([["x1"]], "x1", [1])
        assert apply_word(sys, (1, 1), sys.observation) == sys.observation

    def test_system_validation(self):
        with pytest.raises(ValueError):
            System.from_strings([["x1", "0"]], "x1", [1])
        with pytest.raises(ValueError):
            System((), MultiPoly.constant(1, 1), (0,))


class TestPsi:
    def test_root_is_identity(self):
        sys = random_system(random.Random(0))
        f = sys.observation
        assert psi(sys, ROOT, f) == f

    def test_single_child_is_vector_field(self):
        rng = random.Random(1)
        sys = random_system(rng)
        f = random_poly(rng, 2, 3)
        for g in (1, 2):
            assert psi(sys, one_child_tree(g), f) == apply_derivation(sys.derivations[g - 1], f)

    def test_bush_is_second_order(self):
        rng = random.Random(2)
        sys = random_system(rng)
        f = random_poly(rng, 2, 3)
        b1, b2 = sys.derivations[0].coeffs, sys.derivations[1].coeffs
        expected = MultiPoly({}, 2)
        for m1, m2 in itertools.product((1, 2), repeat=2):
            expected = expected + b2[m2 - 1] * b1[m1 - 1] * partial(partial(f, m1), m2)
        assert psi(sys, tree_parse("o[1,2]"), f) == expected

    def test_bush_plus_chain_is_composition(self):
        rng = random.Random(3)
        sys = random_system(rng)
        f = random_poly(rng, 2, 3)
        E1, E2 = sys.derivations
        assert psi(sys, tree_parse("o[1,2]"), f) + psi(sys, tree_parse("o[2[1]]"), f) == E1(E2(f))

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_sympy_oracle(self, seed):
        rng = random.Random(seed)
        sys = random_system(rng)
        f = random_poly(rng, 2, 3)
        t = rng.choice(all_trees(2, 3))
        expected, syms = psi_oracle(sys, t, f)
        assert sympy.expand(to_sympy(psi(sys, t, f), syms) - expected) == 0

    def test_linear_in_tree(self):
        rng = random.Random(4)
        sys = random_system(rng)
        f = random_poly(rng, 2, 2)
        a, b = tree_parse("o[1[2]]"), tree_parse("o[2,2]")
        combo = TreePoly({a: 3, b: Fraction(-1, 2)})
        assert psi(sys, combo, f) == psi(sys, a, f).scale(3) - psi(sys, b, f).scale(Fraction(1, 2))

    @pytest.mark.parametrize("seed", range(10))
    def test_homomorphism(self, seed):
        rng = random.Random(100 + seed)
        sys = random_system(rng)
        f = random_poly(rng, 2, 2)
        pool = all_trees(2, 3)
        t1 = rng.choice([t for t in pool if t.grade <= 2])
        t2 = rng.choice([t for t in pool if t.grade + t1.grade <= 3])
        assert psi(sys, gl_product(t1, t2), f) == psi(sys, t1, psi(sys, t2, f))

    @pytest.mark.parametrize("seed", range(10))
    def test_measuring(self, seed):
        rng = random.Random(200 + seed)
        sys = random_system(rng)
        f, g = random_poly(rng, 2, 2), random_poly(rng, 2, 2)
        t = rng.choice(all_trees(2, 3))
        rhs = MultiPoly({}, 2)
        for (a, b), c in gl_coproduct(t).terms.items():
            rhs = rhs + (psi(sys, a, f) * psi(sys, b, g)).scale(c)
        assert psi(sys, t, f * g) == rhs

    def test_label_out_of_range(self):
        sys = System.from_strings([["x1"]], "x1", [1])
        with pytest.raises(ValueError):
            psi(sys, one_child_tree(2), sys.observation)
