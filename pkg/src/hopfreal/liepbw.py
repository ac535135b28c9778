"""Lyndon basis of the free Lie algebra, PBW monomials and straightening.

Straightening is done by exact linear algebra: a word is written in the PBW
basis by solving against the word-basis expansions of the PBW monomials,
degree by degree. For bases whose elements are not homogeneous (the
adapted bases built in :mod:`hopfreal.realize`) the solve runs over the
whole filtered piece ``H_{<=n}`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from hopfreal.errors import DegreeExceeded, IncompleteBasis, NotLyndon, SingularBasis
from hopfreal.freealg import Alphabet, NoncommPoly, Word, commutator, mul
from hopfreal.linalg import RowReducer


def is_lyndon(w: Word) -> bool:
    """True iff ``w`` is nonempty and strictly smaller than each proper suffix."""
    w = tuple(w)
    return bool(w) and all(w < w[i:] for i in range(1, len(w)))


def lyndon_words(M: int, d: int) -> List[Word]:
    """All Lyndon words of length <= d over ``1..M``, sorted by (length, lex)."""
    if M < 1 or d < 1:
        raise ValueError("need M >= 1 and d >= 1")
    out = []
    # Duval's generator: visits Lyndon words of length <= d in lex order.
    w = [1]
    while w:
        out.append(tuple(w))
        m = len(w)
        while len(w) < d:
            w.append(w[len(w) - m])
        while w and w[-1] == M:
            w.pop()
        if w:
            w[-1] += 1
    out.sort(key=lambda u: (len(u), u))
    return out


def _mobius(n: int) -> int:
    result, k = 1, 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            result = -result
        k += 1
    return -result if n > 1 else result


def witt_number(M: int, n: int) -> int:
    """Dimension of the degree-n part of the free Lie algebra on M generators."""
    return sum(_mobius(m) * M ** (n // m) for m in range(1, n + 1) if n % m == 0) // n


def standard_factorization(w: Word) -> Tuple[Word, Word]:
    """Split a Lyndon word of length >= 2 as ``u v`` with ``v`` its longest proper Lyndon suffix."""
    for i in range(1, len(w)):
        if is_lyndon(w[i:]):
            return w[:i], w[i:]
    raise NotLyndon(f"{w} has no proper Lyndon suffix")


@dataclass(frozen=True, eq=False)
class LieElement:
    """A primitive element of ``H`` together with its word expansion.

    ``degree`` is the length of the longest word in the expansion; elements
    obtained from kernels may mix degrees, in which case they are filtered
    rather than homogeneous.
    """

    expansion: NoncommPoly
    degree: int
    tag: Optional[Word] = None

    @property
    def alphabet(self) -> Alphabet:
        return self.expansion.alphabet

    def is_homogeneous(self) -> bool:
        return self.expansion.is_homogeneous()

    def bracket(self, other: "LieElement") -> "LieElement":
        e = commutator(self.expansion, other.expansion)
        return LieElement(e, e.degree)


@lru_cache(maxsize=None)
def _bracket_expansion(w: Word, M: int) -> NoncommPoly:
    alph = Alphabet(M)
    if len(w) == 1:
        return NoncommPoly.generator(w[0], alph)
    u, v = standard_factorization(w)
    return commutator(_bracket_expansion(u, M), _bracket_expansion(v, M))


def lyndon_bracket(w: Word, alphabet: Optional[Alphabet] = None) -> LieElement:
    w = tuple(w)
    if not is_lyndon(w):
        raise NotLyndon(f"{w} is not a Lyndon word")
    if alphabet is None:
        alphabet = Alphabet(max(w))
    alphabet.check_word(w)
    return LieElement(_bracket_expansion(w, alphabet.size), len(w), tag=w)


@dataclass(frozen=True)
class PBWMonomial:
    """Ordered power product of basis elements; ``factors`` is ``((index, exponent), ...)``.

    Indices are 0-based positions in the owning :class:`OrderedLieBasis`.
    """

    factors: Tuple[Tuple[int, int], ...]
    degree: int
    expansion: NoncommPoly = field(compare=False, repr=False)

    @property
    def alpha_factorial(self) -> int:
        return math.prod(math.factorial(a) for _, a in self.factors)

    def indices(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.factors)


class OrderedLieBasis:
    """An ordered list of independent primitives spanning ``P(H)`` through ``degree_bound``.

    The order used for PBW monomials is list position.
    """

    def __init__(self, elements: Sequence[LieElement], degree_bound: int, alphabet: Alphabet):
        self.elements = tuple(elements)
        self.degree_bound = degree_bound
        self.alphabet = alphabet
        for e in self.elements:
            if e.alphabet != alphabet:
                raise ValueError("basis element over a different alphabet")
        self.graded = all(e.is_homogeneous() for e in self.elements)
        self._powers: Dict[Tuple[int, int], NoncommPoly] = {}
        self._monomials: Dict[int, List[PBWMonomial]] = {}
        self._solvers: Dict[int, Tuple[RowReducer, List[PBWMonomial]]] = {}
        self._coords: Dict[Word, Dict[PBWMonomial, Fraction]] = {}

    @classmethod
    def lyndon(cls, alphabet: Alphabet, d: int) -> "OrderedLieBasis":
        return cls([lyndon_bracket(w, alphabet) for w in lyndon_words(alphabet.size, d)], d, alphabet)

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i) -> LieElement:
        return self.elements[i]

    def is_complete_to(self, n: int) -> bool:
        """Whether the basis spans the primitives of every degree <= n."""
        if n <= self.degree_bound:
            return True
        return all(witt_number(self.alphabet.size, k) == 0 for k in range(self.degree_bound + 1, n + 1))

    def _power(self, i: int, a: int) -> NoncommPoly:
        key = (i, a)
        if key not in self._powers:
            if a == 0:
                self._powers[key] = NoncommPoly.one(self.alphabet)
            else:
                self._powers[key] = mul(self._power(i, a - 1), self.elements[i].expansion)
        return self._powers[key]

    def monomial(self, factors: Sequence[Tuple[int, int]]) -> PBWMonomial:
        factors = tuple((i, a) for i, a in factors if a)
        if any(b[0] <= a[0] for a, b in zip(factors, factors[1:])):
            raise ValueError("PBW factor indices must be strictly increasing")
        exp = NoncommPoly.one(self.alphabet)
        for i, a in factors:
            exp = mul(exp, self._power(i, a))
        deg = sum(a * self.elements[i].degree for i, a in factors)
        return PBWMonomial(factors, deg, exp)

    def pbw_monomials(self, D: int) -> List[PBWMonomial]:
        """All PBW monomials of weighted degree <= D, by (degree, factors)."""
        if not self.is_complete_to(D):
            raise IncompleteBasis(f"basis complete only to degree {self.degree_bound}, asked for {D}")
        if D not in self._monomials:
            out: List[PBWMonomial] = []
            degs = [e.degree for e in self.elements]

            def rec(i: int, remaining: int, factors: List[Tuple[int, int]], exp: NoncommPoly, deg: int):
                if i == len(degs):
                    out.append(PBWMonomial(tuple(factors), deg, exp))
                    return
                for a in range(remaining // degs[i] + 1):
                    nxt = exp if a == 0 else mul(exp, self._power(i, a))
                    rec(i + 1, remaining - a * degs[i], factors + ([(i, a)] if a else []), nxt, deg + a * degs[i])

            rec(0, D, [], NoncommPoly.one(self.alphabet), 0)
            out.sort(key=lambda m: (m.degree, m.factors))
            self._monomials[D] = out
        return self._monomials[D]

    def _solver(self, n: int) -> Tuple[RowReducer, List[PBWMonomial]]:
        # graded basis: one solve per homogeneous degree; otherwise the filtered piece H_{<=n}.
        if n not in self._solvers:
            if self.graded:
                monos = [m for m in self.pbw_monomials(n) if m.degree == n]
            else:
                monos = self.pbw_monomials(n)
            red = RowReducer()
            for k, m in enumerate(monos):
                if not red.add(m.expansion.terms, k):
                    raise SingularBasis(f"PBW monomial {m.factors} depends on earlier monomials")
            self._solvers[n] = (red, monos)
        return self._solvers[n]

    def word_coordinates(self, w: Word) -> Dict[PBWMonomial, Fraction]:
        w = tuple(w)
        if w not in self._coords:
            n = len(w)
            if not self.is_complete_to(n):
                raise IncompleteBasis(f"basis complete only to degree {self.degree_bound}, word has length {n}")
            red, monos = self._solver(n)
            combo = red.express({w: Fraction(1)})
            if combo is None:
                raise SingularBasis(f"PBW monomials of degree {n} do not span word {w}")
            self._coords[w] = {monos[k]: c for k, c in combo.items()}
        return self._coords[w]


def pbw_monomials(basis: OrderedLieBasis, D: int) -> List[PBWMonomial]:
    return basis.pbw_monomials(D)


def express_in_pbw(h: NoncommPoly, basis: OrderedLieBasis, D: Optional[int] = None) -> Dict[PBWMonomial, Fraction]:
    """Coefficients ``c`` with ``sum c[m] * m.expansion == h``, keyed by PBW monomial."""
    if h.alphabet != basis.alphabet:
        raise ValueError("element and basis use different alphabets")
    if D is not None and h.degree > D:
        raise DegreeExceeded(f"element of degree {h.degree} exceeds bound {D}")
    out: Dict[PBWMonomial, Fraction] = {}
    for w, c in h.terms.items():
        for m, x in basis.word_coordinates(w).items():
            s = out.get(m, 0) + c * x
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def reconstruct(coords: Dict[PBWMonomial, Fraction], alphabet: Alphabet) -> NoncommPoly:
    total = NoncommPoly.zero(alphabet)
    for m, c in coords.items():
        total = total + m.expansion.scale(c)
    return total
