import itertools
import math
import random
import warnings
from fractions import Fraction

import pytest
import sympy

from conftest import SYSTEMS, bilinear_system, linear_system, quadratic_system
from helpers import random_system
from hopfreal.diffops import System, apply_word, eval_point
from hopfreal.errors import DegreeExceeded, ParseError
from hopfreal.freealg import EMPTY, Alphabet, NoncommPoly, Series
from hopfreal.liepbw import lyndon_bracket, lyndon_words
from hopfreal.realize import (
    TruncationWarning,
    build_realization,
    kernel_bracket_failures,
    exponents_up_to,
    format_realization,
    generating_series,
    induced_vector_fields,
    lie_rank,
    parse_realization,
    project_mod_J,
    regenerate_series,
    tree_generating_series,
    vector_field_series,
    verify_realization,
)
from hopfreal.treehopf import ROOT, one_child_tree, tree_parse, trees_of_grade

A1, A2 = Alphabet(1), Alphabet(2)


def oracle_rank(p: Series, d: int) -> int:
    """Brute-force rank of the matrix p(w l) with sympy."""
    cols = list(p.alphabet.words(p.degree - d))
    rows = []
    for u in lyndon_words(p.alphabet.size, d):
        l = lyndon_bracket(u, p.alphabet).expansion
        rows.append([sum(c * p[w + v] for v, c in l.terms.items()) for w in cols])
    return sympy.Matrix(rows).rank()


def pipeline(sys, D=6, d=3):
    p = generating_series(sys, D)
    cert = lie_rank(p, d)
    return p, cert, build_realization(p, cert)


class TestGeneratingSeries:
    def test_linear(self):
        p = generating_series(linear_system(), 6)
        assert all(p[(1,) * k] == 1 for k in range(7))

    def test_constant_observation(self):
        sys = System.from_strings([["x1"]], "5", [2])
        assert generating_series(sys, 4) == Series({EMPTY: 5}, 4, A1)

    def test_bilinear(self):
        # E1 = x2 d1, E2 = x1 d2, f = x1 at (1, 0): the first letter acts first,
        # so c_(1,2) = E2(E1 x1) = E2(x2) = x1 -> 1 and c_(2,1) = E1(E2 x1) = 0.
        p = generating_series(bilinear_system(), 4)
        assert p[EMPTY] == 1
        assert p[(1,)] == p[(2,)] == p[(1, 1)] == p[(2, 1)] == p[(2, 2)] == 0
        assert p[(1, 2)] == 1
        assert p == Series({EMPTY: 1, (1, 2): 1, (1, 2, 1, 2): 1}, 4, A2)

    @pytest.mark.parametrize("name", sorted(SYSTEMS))
    def test_matches_apply_word(self, name):
        sys = SYSTEMS[name]()
        p = generating_series(sys, 4)
        for w in p.alphabet.words(4):
            assert p[w] == eval_point(apply_word(sys, w, sys.observation), sys.x0)

    def test_tree_series(self):
        sys = linear_system()
        coeffs = tree_generating_series(sys, 4)
        assert coeffs[ROOT] == 1 and coeffs[one_child_tree(1)] == 1
        for k in range(1, 5):
            chain = tree_parse("o" + "[1" * k + "]" * k)
            assert coeffs[chain] == 1

    def test_tree_series_generators(self):
        sys = quadratic_system()
        coeffs = tree_generating_series(sys, 2)
        assert coeffs[ROOT] == eval_point(sys.observation, sys.x0)
        for g in (1, 2):
            assert coeffs[one_child_tree(g)] == eval_point(apply_word(sys, (g,), sys.observation), sys.x0)
        assert set(coeffs) == set(trees_of_grade(2, 0) + trees_of_grade(2, 1) + trees_of_grade(2, 2))


class TestLieRank:
    def test_unit_series(self):
        cert = lie_rank(Series.unit(4, A2), 2)
        assert cert.rank == 0 and cert.complement == [] and len(cert.L_basis) == 3

    def test_linear(self):
        p, cert, _ = pipeline(linear_system())
        assert cert.rank == 1 and cert.pivot_words == [(1,)]

    def test_sum_of_letters(self):
        p = Series({(1,): 1, (2,): 1}, 3, A2)
        cert = lie_rank(p, 2)
        assert cert.rank == 1
        assert cert.pivot_words == [(1,)]
        # E2 - E1 and [E1, E2] annihilate p
        kernel = {l.tag: l.expansion for l in cert.L_basis}
        assert kernel[(2,)] == NoncommPoly({(2,): 1, (1,): -1}, A2)
        assert kernel[(1, 2)] == lyndon_bracket((1, 2), A2).expansion

    @pytest.mark.parametrize(
        "name,ranks,pivots",
        [
            ("linear", [1, 1, 1], [(1,)]),
            ("bilinear", [1, 2, 2], [(2,), (1, 2)]),
            ("quadratic", [1, 2, 2], [(1,), (1, 2)]),
        ],
    )
    def test_frozen_ranks(self, name, ranks, pivots):
        p = generating_series(SYSTEMS[name](), 6)
        assert [lie_rank(p, d).rank for d in (1, 2, 3)] == ranks
        assert lie_rank(p, 3).pivot_words == pivots

    @pytest.mark.parametrize("name", sorted(SYSTEMS))
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_matches_sympy(self, name, d):
        p = generating_series(SYSTEMS[name](), 6)
        assert lie_rank(p, d).rank == oracle_rank(p, d)

    @pytest.mark.parametrize("seed", range(4))
    def test_rank_bound_random(self, seed):
        sys = random_system(random.Random(seed))
        p = generating_series(sys, 5)
        for d in (1, 2, 3):
            assert lie_rank(p, d).rank <= sys.N

    def test_monotone_in_lie_degree(self):
        p = generating_series(quadratic_system(), 6)
        ranks = [lie_rank(p, d, column_degree=3).rank for d in (1, 2, 3)]
        assert ranks == sorted(ranks)

    def test_kernel_annihilates(self):
        p, cert, _ = pipeline(bilinear_system())
        for l in cert.L_basis:
            for w in cert.column_words:
                assert sum(c * p[w + v] for v, c in l.expansion.terms.items()) == 0

    def test_certificate_matrix(self):
        p, cert, _ = pipeline(quadratic_system())
        assert sympy.Matrix(cert.evaluation_matrix).rank() == cert.rank
        assert len(cert.evaluation_matrix) == len(lyndon_words(2, 3))
        assert len(cert.complement) + len(cert.L_basis) == len(cert.row_words)

    def test_degree_errors(self):
        with pytest.raises(DegreeExceeded):
            lie_rank(Series.unit(2, A2), 3)
        with pytest.raises(DegreeExceeded):
            lie_rank(Series.unit(4, A2), 2, column_degree=3)

    def test_closure_diagnostic(self):
        _, cert, _ = pipeline(bilinear_system())
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            assert kernel_bracket_failures(cert) == []


class TestRealization:
    def test_unit_series(self):
        p = Series.unit(4, A2)
        real = build_realization(p, lie_rank(p, 2))
        assert real.N == 0 and real.f_hat.terms == {(): 1}
        assert regenerate_series(real) == Series.unit(real.order, A2)

    def test_truncated_exponential(self):
        _, _, real = pipeline(linear_system())
        assert real.N == 1 and real.order == 6
        assert real.f_hat.terms == {(k,): Fraction(1, math.factorial(k)) for k in range(7)}

    def test_constant_term(self):
        for name in SYSTEMS:
            p, _, real = pipeline(SYSTEMS[name]())
            assert real.coefficient((0,) * real.N) == p[EMPTY]

    @pytest.mark.parametrize("name", sorted(SYSTEMS))
    def test_round_trip(self, name):
        p, cert, real = pipeline(SYSTEMS[name]())
        regen = regenerate_series(real, 3)
        assert regen == p.truncate(3)
        assert verify_realization(p, real, rank=cert.rank).ok

    def test_linear_round_trip_depth(self):
        p, _, real = pipeline(linear_system())
        assert regenerate_series(real, 6) == p
        assert verify_realization(p, real, Dcheck=5).mismatches == []

    @pytest.mark.parametrize("seed", range(3))
    def test_round_trip_random(self, seed):
        sys = random_system(random.Random(40 + seed), degree=1)
        p, cert, real = pipeline(sys)
        assert verify_realization(p, real).ok

    def test_adapted_basis_layout(self):
        _, cert, real = pipeline(bilinear_system())
        elems = real.adapted_basis.elements
        assert [e.expansion for e in elems[: real.N]] == [e.expansion for e in cert.complement]
        assert [e.expansion for e in elems[real.N :]] == [e.expansion for e in cert.L_basis]
        assert real.weights == (1, 2)

    def test_exponents(self):
        assert exponents_up_to((1, 2), 3) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (3, 0)]
        assert exponents_up_to((), 4) == [()]

    def test_project_mod_J_examples(self):
        _, _, real = pipeline(linear_system())
        assert project_mod_J(EMPTY, real) == {(0,): 1}
        assert project_mod_J((1, 1), real) == {(2,): 1}
        p = Series({(1,): 1, (2,): 1}, 3, A2)
        real2 = build_realization(p, lie_rank(p, 2))
        # E2 = e1 + (E2 - E1): only the e1 part survives
        assert project_mod_J((2,), real2) == {(1,): 1}

    @pytest.mark.parametrize("name", sorted(SYSTEMS))
    def test_dual_basis_identity(self, name):
        _, _, real = pipeline(SYSTEMS[name]())
        basis = real.adapted_basis
        for alpha in exponents_up_to(real.weights, 3):
            mono = basis.monomial(tuple((i, a) for i, a in enumerate(alpha) if a))
            total = {}
            for w, c in mono.expansion.terms.items():
                for beta, x in project_mod_J(w, real).items():
                    total[beta] = total.get(beta, 0) + c * x
            assert {b: v for b, v in total.items() if v} == {alpha: 1}

    def test_incomplete_degree(self):
        p, _, real = pipeline(bilinear_system())
        with pytest.raises(DegreeExceeded):
            regenerate_series(real, 4)
        with pytest.raises(DegreeExceeded):
            build_realization(p, lie_rank(p, 3), T=7)


class TestVectorFields:
    def test_linear_is_d_dx(self):
        _, _, real = pipeline(linear_system())
        (E,) = induced_vector_fields(real)
        assert E.coeffs[0].terms == {(0,): 1}

    def test_bilinear_fields(self):
        _, _, real = pipeline(bilinear_system())
        E1, E2 = induced_vector_fields(real)
        assert [c.terms for c in E1.coeffs] == [{(2, 0): -1}, {(1, 0): 1}]
        assert [c.terms for c in E2.coeffs] == [{(0, 0): 1}, {}]

    @pytest.mark.parametrize("name,depth", [("linear", 5), ("bilinear", 1), ("quadratic", 1)])
    def test_fields_reproduce_series(self, name, depth):
        p, _, real = pipeline(SYSTEMS[name]())
        induced_vector_fields(real)
        assert vector_field_series(real, depth) == p.truncate(depth)

    def test_empty_table(self):
        p = Series.unit(3, A2)
        real = build_realization(p, lie_rank(p, 1))
        fields = induced_vector_fields(real)
        assert len(fields) == 2 and all(E.coeffs == () for E in fields)


class TestVerification:
    def test_fault_injection_predicted_set(self):
        p, _, real = pipeline(quadratic_system())
        base = verify_realization(p, real)
        assert base.ok
        for alpha in exponents_up_to(real.weights, real.order):
            bumped = parse_realization(format_realization(real))
            bumped.f_hat.terms[alpha] = bumped.coefficient(alpha) + 1
            report = verify_realization(p, bumped, Dcheck=base.checked_degree)
            predicted = sorted(w for w in A2.words(base.checked_degree) if project_mod_J(w, real).get(alpha, 0))
            assert sorted(w for w, _, _ in report.mismatches) == predicted
            assert report.mismatches

    def test_corrupt_series(self):
        p, cert, real = pipeline(linear_system())
        bad = Series(dict(p.coeffs) | {(1, 1): 2}, p.degree, A1)
        report = verify_realization(bad, real)
        assert [w for w, _, _ in report.mismatches] == [(1, 1)]
        assert any("expected 2 got 1" in line for line in report.lines())

    def test_rank_echo(self):
        _, cert, real = pipeline(linear_system())
        p = generating_series(linear_system(), 6)
        report = verify_realization(p, real, rank=cert.rank)
        assert report.rank_ok and "rank 1 <= N: yes" in report.lines()


class TestDumpFormat:
    @pytest.mark.parametrize("name", sorted(SYSTEMS))
    def test_round_trip(self, name):
        _, _, real = pipeline(SYSTEMS[name]())
        induced_vector_fields(real)
        text = format_realization(real)
        back = parse_realization(text)
        assert format_realization(back) == text
        assert back.f_hat == real.f_hat and back.N == real.N
        assert [E.coeffs for E in back.vector_fields] == [E.coeffs for E in real.vector_fields]

    def test_linear_dump(self):
        _, _, real = pipeline(linear_system(), D=4)
        text = format_realization(real)
        assert "N 1\n" in text
        assert "f_hat\n0 : 1\n1 : 1\n2 : 1/2\n3 : 1/6\n4 : 1/24\n" in text

    def test_unit_series_dump(self):
        p = Series.unit(3, A1)
        text = format_realization(build_realization(p, lie_rank(p, 1)))
        assert "N 0\n" in text and text.endswith("f_hat\ne : 1\n")

    @pytest.mark.parametrize(
        "text",
        [
            "alphabet 1\n",
            "alphabet 1\nseries_degree 2\nlie_degree 1\norder 2\nN 1\nadapted basis\nkernel [1]:1\nf_hat\n0 : 1\n",
            "alphabet 1\nseries_degree 2\nlie_degree 1\norder 2\nN 1\nadapted basis\ncomplement [1]:1\nf_hat\n0 1 : 1\n",
            "alphabet 1\nseries_degree 2\nlie_degree 1\norder 2\nN 1\nadapted basis\ncomplement [1]:1\nf_hat\n0 1\n",
            "alphabet one\n",
        ],
    )
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            parse_realization(text)
