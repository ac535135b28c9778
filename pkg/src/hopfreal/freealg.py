"""Free associative bialgebra on ``E_1..E_M`` and its truncated dual.

Words are plain tuples of positive ints. A :class:`NoncommPoly` is a finite
rational combination of words (an element of ``H``); a :class:`Series` is a
degree-truncated functional on ``H`` (an element of ``H*``), multiplied by
the shuffle product and acted on from both sides by ``H``.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from hopfreal.errors import AlphabetMismatch, DegreeExceeded, ParseError

Word = Tuple[int, ...]
EMPTY: Word = ()


@dataclass(frozen=True)
class Alphabet:
    """The letter set ``{1..size}`` shared by every value built over it."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet size must be positive, got {self.size}")

    def check_word(self, word: Iterable[int]) -> Word:
        w = tuple(int(a) for a in word)
        for a in w:
            if not 1 <= a <= self.size:
                raise ValueError(f"letter {a} outside alphabet 1..{self.size}")
        return w

    def words(self, max_len: int, min_len: int = 0) -> Iterator[Word]:
        """All words with ``min_len <= len <= max_len``, by (length, lex)."""
        letters = range(1, self.size + 1)
        for n in range(min_len, max_len + 1):
            yield from itertools.product(letters, repeat=n)


def word_key(w: Word):
    return (len(w), w)


def same_alphabet(*values) -> Alphabet:
    alph = values[0].alphabet
    for v in values[1:]:
        if v.alphabet != alph:
            raise AlphabetMismatch(f"{alph} vs {v.alphabet}")
    return alph


def _clean(terms: Mapping, alphabet: Alphabet) -> Dict[Word, Fraction]:
    out = {}
    for w, c in terms.items():
        c = Fraction(c)
        if c:
            out[alphabet.check_word(w)] = c
    return out


class NoncommPoly:
    """Rational linear combination of words; multiplication is concatenation."""

    __slots__ = ("terms", "alphabet", "_hash")

    def __init__(self, terms: Mapping[Word, object], alphabet: Alphabet):
        self.terms = _clean(terms, alphabet)
        self.alphabet = alphabet
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Word, Fraction], alphabet: Alphabet) -> "NoncommPoly":
        obj = cls.__new__(cls)
        obj.terms = {w: c for w, c in terms.items() if c}
        obj.alphabet = alphabet
        obj._hash = None
        return obj

    @classmethod
    def word(cls, w: Iterable[int], alphabet: Alphabet, coeff=1) -> "NoncommPoly":
        return cls({tuple(w): coeff}, alphabet)

    @classmethod
    def one(cls, alphabet: Alphabet) -> "NoncommPoly":
        return cls({EMPTY: 1}, alphabet)

    @classmethod
    def zero(cls, alphabet: Alphabet) -> "NoncommPoly":
        return cls({}, alphabet)

    @classmethod
    def generator(cls, i: int, alphabet: Alphabet) -> "NoncommPoly":
        return cls({(i,): 1}, alphabet)

    @property
    def degree(self) -> int:
        """Length of the longest supported word (0 for the zero polynomial)."""
        return max((len(w) for w in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        return len({len(w) for w in self.terms}) <= 1

    def coefficient(self, w: Word) -> Fraction:
        return self.terms.get(tuple(w), Fraction(0))

    def lex_min_word(self) -> Word:
        return min(self.terms)

    def lex_max_word(self) -> Word:
        return max(self.terms)

    def homogeneous_part(self, n: int) -> "NoncommPoly":
        return NoncommPoly._raw({w: c for w, c in self.terms.items() if len(w) == n}, self.alphabet)

    def items(self):
        return sorted(self.terms.items(), key=lambda t: word_key(t[0]))

    def __add__(self, other):
        alph = same_alphabet(self, other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return NoncommPoly._raw(out, alph)

    def __neg__(self):
        return NoncommPoly._raw({w: -c for w, c in self.terms.items()}, self.alphabet)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "NoncommPoly":
        c = Fraction(c)
        return NoncommPoly._raw({w: c * v for w, v in self.terms.items()}, self.alphabet)

    def __mul__(self, other):
        if isinstance(other, NoncommPoly):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, NoncommPoly):
            return NotImplemented
        return self.alphabet == other.alphabet and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.alphabet, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"NoncommPoly({format_poly(self)!r}, M={self.alphabet.size})"


def mul(a: NoncommPoly, b: NoncommPoly) -> NoncommPoly:
    alph = same_alphabet(a, b)
    out: Dict[Word, Fraction] = defaultdict(Fraction)
    for u, x in a.terms.items():
        for v, y in b.terms.items():
            out[u + v] += x * y
    return NoncommPoly._raw(out, alph)


def commutator(a: NoncommPoly, b: NoncommPoly) -> NoncommPoly:
    return mul(a, b) - mul(b, a)


def counit(h: NoncommPoly) -> Fraction:
    return h.coefficient(EMPTY)


class TensorExpansion:
    """An element of ``H (x) H``, stored on the basis of word pairs."""

    __slots__ = ("terms", "alphabet")

    def __init__(self, terms: Mapping[Tuple[Word, Word], Fraction], alphabet: Alphabet):
        self.terms = {k: Fraction(c) for k, c in terms.items() if c}
        self.alphabet = alphabet

    @property
    def pairs(self) -> List[Tuple[NoncommPoly, NoncommPoly]]:
        """Sweedler summands ``(h1, h2)`` grouped so each ``h1`` is a single basis word."""
        grouped: Dict[Word, Dict[Word, Fraction]] = defaultdict(dict)
        for (u, v), c in self.terms.items():
            grouped[u][v] = c
        return [
            (NoncommPoly._raw({u: Fraction(1)}, self.alphabet), NoncommPoly._raw(grouped[u], self.alphabet))
            for u in sorted(grouped, key=word_key)
        ]

    def swap(self) -> "TensorExpansion":
        return TensorExpansion({(v, u): c for (u, v), c in self.terms.items()}, self.alphabet)

    def contract(self, left, right) -> Fraction:
        """``sum c * left(u) * right(v)`` for scalar-valued callables on words."""
        return sum((c * left(u) * right(v) for (u, v), c in self.terms.items()), Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, TensorExpansion):
            return NotImplemented
        return self.alphabet == other.alphabet and self.terms == other.terms

    def __repr__(self):
        parts = [f"{c}*{_fmt_word(u)}(x){_fmt_word(v)}" for (u, v), c in sorted(self.terms.items())]
        return "TensorExpansion(" + " + ".join(parts) + ")"


def _word_coproduct(w: Word) -> Counter:
    # Delta(E_{w1}...E_{wk}) = prod (1 (x) E + E (x) 1): one summand per subset of positions.
    out: Counter = Counter()
    n = len(w)
    for mask in range(1 << n):
        left = tuple(w[i] for i in range(n) if mask >> i & 1)
        right = tuple(w[i] for i in range(n) if not mask >> i & 1)
        out[left, right] += 1
    return out


def coproduct(h: NoncommPoly) -> TensorExpansion:
    out: Dict[Tuple[Word, Word], Fraction] = defaultdict(Fraction)
    for w, c in h.terms.items():
        for pair, k in _word_coproduct(w).items():
            out[pair] += c * k
    return TensorExpansion(out, h.alphabet)


def is_primitive(h: NoncommPoly) -> bool:
    expected: Dict[Tuple[Word, Word], Fraction] = defaultdict(Fraction)
    for w, c in h.terms.items():
        expected[EMPTY, w] += c
        expected[w, EMPTY] += c
    return coproduct(h) == TensorExpansion(expected, h.alphabet)


@lru_cache(maxsize=None)
def shuffle_counts(a: Word, b: Word) -> Counter:
    """Multiset of interleavings of ``a`` and ``b`` as a Counter of words."""
    if not a:
        return Counter({b: 1})
    if not b:
        return Counter({a: 1})
    out: Counter = Counter()
    for w, k in shuffle_counts(a[1:], b).items():
        out[(a[0],) + w] += k
    for w, k in shuffle_counts(a, b[1:]).items():
        out[(b[0],) + w] += k
    return out


def shuffle_words(a: Word, b: Word, alphabet: Alphabet) -> NoncommPoly:
    return NoncommPoly(dict(shuffle_counts(tuple(a), tuple(b))), alphabet)


class Series:
    """Degree-truncated element of ``H*``: word -> rational for words of length <= degree.

    Equality is exact (same alphabet, same degree, same coefficients); use
    :meth:`agrees_with` to compare on a common range of words.
    """

    __slots__ = ("coeffs", "degree", "alphabet")

    def __init__(self, coeffs: Mapping[Word, object], degree: int, alphabet: Alphabet):
        if degree < 0:
            raise ValueError("truncation degree must be non-negative")
        self.coeffs = _clean(coeffs, alphabet)
        for w in self.coeffs:
            if len(w) > degree:
                raise DegreeExceeded(f"word {w} longer than truncation degree {degree}")
        self.degree = degree
        self.alphabet = alphabet

    @classmethod
    def _raw(cls, coeffs, degree, alphabet) -> "Series":
        obj = cls.__new__(cls)
        obj.coeffs = {w: c for w, c in coeffs.items() if c}
        obj.degree = degree
        obj.alphabet = alphabet
        return obj

    @classmethod
    def dual_word(cls, w: Iterable[int], degree: int, alphabet: Alphabet, coeff=1) -> "Series":
        """The dual basis functional of word ``w``."""
        return cls({tuple(w): coeff}, degree, alphabet)

    @classmethod
    def unit(cls, degree: int, alphabet: Alphabet) -> "Series":
        """The counit (1 on the empty word), the identity of the shuffle product."""
        return cls({EMPTY: 1}, degree, alphabet)

    def __getitem__(self, w) -> Fraction:
        w = tuple(w)
        if len(w) > self.degree:
            raise DegreeExceeded(f"word of length {len(w)} beyond truncation degree {self.degree}")
        return self.coeffs.get(w, Fraction(0))

    def truncate(self, degree: int) -> "Series":
        if degree > self.degree:
            raise DegreeExceeded(f"cannot raise truncation degree {self.degree} to {degree}")
        return Series._raw({w: c for w, c in self.coeffs.items() if len(w) <= degree}, degree, self.alphabet)

    def agrees_with(self, other: "Series", up_to: Optional[int] = None) -> bool:
        """Compare coefficients of all words up to ``up_to`` (default: common degree)."""
        same_alphabet(self, other)
        bound = min(self.degree, other.degree)
        if up_to is not None:
            if up_to > bound:
                raise DegreeExceeded(f"comparison degree {up_to} exceeds common degree {bound}")
            bound = up_to
        return self.truncate(bound).coeffs == other.truncate(bound).coeffs

    def items(self):
        return sorted(self.coeffs.items(), key=lambda t: word_key(t[0]))

    def __add__(self, other):
        alph = same_alphabet(self, other)
        d = min(self.degree, other.degree)
        out: Dict[Word, Fraction] = defaultdict(Fraction)
        for s in (self, other):
            for w, c in s.coeffs.items():
                if len(w) <= d:
                    out[w] += c
        return Series._raw(out, d, alph)

    def __neg__(self):
        return Series._raw({w: -c for w, c in self.coeffs.items()}, self.degree, self.alphabet)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Series":
        c = Fraction(c)
        return Series._raw({w: c * v for w, v in self.coeffs.items()}, self.degree, self.alphabet)

    def __mul__(self, other):
        if isinstance(other, Series):
            return series_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return (self.alphabet, self.degree, self.coeffs) == (other.alphabet, other.degree, other.coeffs)

    def __repr__(self):
        return f"Series(M={self.alphabet.size}, D={self.degree}, terms={len(self.coeffs)})"


def series_mul(p: Series, q: Series, degree: Optional[int] = None) -> Series:
    """Shuffle product, truncated at ``degree`` (default: the smaller input degree)."""
    alph = same_alphabet(p, q)
    bound = min(p.degree, q.degree)
    if degree is None:
        degree = bound
    elif degree > bound:
        raise DegreeExceeded(f"product degree {degree} exceeds input degrees ({p.degree}, {q.degree})")
    out: Dict[Word, Fraction] = defaultdict(Fraction)
    for u, a in p.coeffs.items():
        for v, b in q.coeffs.items():
            if len(u) + len(v) > degree:
                continue
            ab = a * b
            for w, k in shuffle_counts(u, v).items():
                out[w] += ab * k
    return Series._raw(out, degree, alph)


def pair(p: Series, h: NoncommPoly) -> Fraction:
    """The evaluation ``p(h)``."""
    same_alphabet(p, h)
    if h.degree > p.degree:
        raise DegreeExceeded(f"element of degree {h.degree} paired with series truncated at {p.degree}")
    return sum((c * p.coeffs.get(w, 0) for w, c in h.terms.items()), Fraction(0))


def _act(p: Series, h: NoncommPoly, *, on_left: bool) -> Series:
    same_alphabet(p, h)
    if h.degree > p.degree:
        raise DegreeExceeded(f"acting by degree {h.degree} on series truncated at {p.degree}")
    new_degree = p.degree - h.degree
    out: Dict[Word, Fraction] = defaultdict(Fraction)
    for w, c in p.coeffs.items():
        for u, a in h.terms.items():
            n = len(u)
            if len(w) - n > new_degree or len(w) < n:
                continue
            if on_left:
                # (p < h)(k) = p(hk): w = u + k
                if w[:n] == u:
                    out[w[n:]] += a * c
            elif w[len(w) - n:] == u:
                # (h > p)(k) = p(kh): w = k + u
                out[w[: len(w) - n]] += a * c
    return Series._raw(out, new_degree, p.alphabet)


def ract(p: Series, h: NoncommPoly) -> Series:
    """Right action ``(p < h)(k) = p(hk)``; the truncation degree drops by ``deg h``."""
    return _act(p, h, on_left=True)


def lact(h: NoncommPoly, p: Series) -> Series:
    """Left action ``(h > p)(k) = p(kh)``; the truncation degree drops by ``deg h``."""
    return _act(p, h, on_left=False)


# -- text formats -----------------------------------------------------------


def _fmt_word(w: Word) -> str:
    return " ".join(map(str, w)) if w else "e"


def format_poly(h: NoncommPoly) -> str:
    """One-line form ``[1 2]:1 [2 1]:-1``; ``[]`` is the empty word and ``0`` the zero element."""
    if h.is_zero():
        return "0"
    return " ".join(f"[{' '.join(map(str, w))}]:{c}" for w, c in h.items())


def parse_poly(text: str, alphabet: Alphabet) -> NoncommPoly:
    text = text.strip()
    if text == "0":
        return NoncommPoly.zero(alphabet)
    terms: Dict[Word, Fraction] = defaultdict(Fraction)
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        if text[pos] != "[":
            raise ParseError("expected '['", pos)
        close = text.find("]", pos)
        if close < 0 or close + 1 >= len(text) or text[close + 1] != ":":
            raise ParseError("expected ']:' after word", pos)
        end = close + 2
        while end < len(text) and not text[end].isspace():
            end += 1
        try:
            w = alphabet.check_word(text[pos + 1 : close].split())
            terms[w] += Fraction(text[close + 2 : end])
        except ValueError as exc:
            raise ParseError(str(exc), pos) from None
        pos = end
    return NoncommPoly(terms, alphabet)


def format_series(p: Series) -> str:
    lines = [f"alphabet {p.alphabet.size} degree {p.degree}"]
    lines += [f"{_fmt_word(w)} : {c}" for w, c in p.items()]
    return "\n".join(lines) + "\n"


def parse_series(text: str) -> Series:
    header = None
    coeffs: Dict[Word, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 4 or parts[0] != "alphabet" or parts[2] != "degree":
                raise ParseError(f"line {lineno}: expected 'alphabet M degree D' header")
            try:
                header = (Alphabet(int(parts[1])), int(parts[3]))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            continue
        alph, degree = header
        if ":" not in line:
            raise ParseError(f"line {lineno}: expected '<word> : <rational>'")
        lhs, rhs = line.split(":", 1)
        letters = lhs.split()
        try:
            w = EMPTY if letters == ["e"] else alph.check_word(letters)
            c = Fraction(rhs.strip())
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if len(w) > degree:
            raise ParseError(f"line {lineno}: word longer than degree {degree}")
        if w in coeffs:
            raise ParseError(f"line {lineno}: duplicate word {_fmt_word(w)}")
        coeffs[w] = c
    if header is None:
        raise ParseError("missing 'alphabet M degree D' header")
    return Series(coeffs, header[1], header[0])
