"""Generating series, truncated Lie rank, and formal state-space realizations.

Pipeline::

    p = generating_series(system, D)
    cert = lie_rank(p, d)                  # rank N, complement, kernel L
    real = build_realization(p, cert)      # f_hat in k[[x_1..x_N]]
    verify_realization(p, real).ok         # regenerated series == p

Everything is exact. The infinite objects of the construction are replaced
by explicit bounds: ``D`` on series words, ``d`` on Lie elements and ``T``
on the weighted order of ``f_hat``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from hopfreal.diffops import Derivation, MultiPoly, System, apply_derivation, eval_point, format_multipoly, parse_multipoly, psi
from hopfreal.errors import DegreeExceeded, ParseError
from hopfreal.freealg import (
    EMPTY,
    Alphabet,
    NoncommPoly,
    Series,
    Word,
    format_poly,
    lact,
    pair,
    parse_poly,
)
from hopfreal.liepbw import LieElement, OrderedLieBasis, express_in_pbw, lyndon_bracket, lyndon_words
from hopfreal.linalg import RowReducer
from hopfreal.treehopf import LabeledTree, all_trees

Exponent = Tuple[int, ...]


class TruncationWarning(UserWarning):
    """A property that holds for the infinite objects failed at the chosen truncation."""


def generating_series(sys: System, D: int) -> Series:
    """Coefficients ``(E_{w_k} ... E_{w_1} f)(x0)`` for every word of length <= D."""
    if D < 0:
        raise ValueError("degree must be non-negative")
    alph = Alphabet(sys.M)
    coeffs: Dict[Word, Fraction] = {}
    layer = {EMPTY: sys.observation}
    for n in range(D + 1):
        nxt = {}
        for w, g in layer.items():
            coeffs[w] = eval_point(g, sys.x0)
            if n < D:
                for a in range(1, sys.M + 1):
                    h = apply_derivation(sys.derivations[a - 1], g)
                    if h.terms:
                        nxt[w + (a,)] = h
        layer = nxt
    return Series(coeffs, D, alph)


def tree_generating_series(sys: System, g: int) -> Dict[LabeledTree, Fraction]:
    """``psi(t) f`` at ``x0`` for every canonical tree of grade <= g (zeros included)."""
    return {t: eval_point(psi(sys, t, sys.observation), sys.x0) for t in all_trees(sys.M, g)}


@dataclass
class RankCertificate:
    """Exact rank of the truncated evaluation matrix ``(l > p)(w) = p(w l)``.

    Rows are the Lyndon brackets of degree <= ``d``; columns are all words of
    length <= ``column_degree``.
    """

    d: int
    D: int
    column_degree: int
    rank: int
    complement: List[LieElement]
    L_basis: List[LieElement]
    row_words: List[Word]
    column_words: List[Word]
    evaluation_matrix: List[List[Fraction]]
    alphabet: Alphabet

    @property
    def pivot_words(self) -> List[Word]:
        return [e.tag for e in self.complement]


def lie_rank(p: Series, d: int, column_degree: Optional[int] = None) -> RankCertificate:
    """Rank of ``P(H) > p`` restricted to Lie degree <= d.

    The complement is chosen by first-independent-row pivoting in Lyndon
    order; each kernel element is ``e_j`` minus its dependency on the earlier
    complement rows.
    """
    if d > p.degree:
        raise DegreeExceeded(f"Lie degree {d} exceeds series degree {p.degree}")
    if d < 1:
        raise ValueError("Lie degree must be at least 1")
    if column_degree is None:
        column_degree = p.degree - d
    elif column_degree + d > p.degree:
        raise DegreeExceeded(f"columns of length {column_degree} need series degree >= {column_degree + d}")
    alph = p.alphabet
    rows = [lyndon_bracket(w, alph) for w in lyndon_words(alph.size, d)]
    columns = list(alph.words(column_degree))
    matrix: List[List[Fraction]] = []
    red = RowReducer()
    complement: List[LieElement] = []
    kernel: List[LieElement] = []
    for j, e in enumerate(rows):
        acted = lact(e.expansion, p)
        row = [acted.coeffs.get(w, Fraction(0)) for w in columns]
        matrix.append(row)
        vec = {k: v for k, v in enumerate(row) if v}
        if red.add(vec, j):
            complement.append(e)
        else:
            expansion = e.expansion
            for i, a in red.last_dependency.items():
                expansion = expansion - rows[i].expansion.scale(a)
            kernel.append(LieElement(expansion, expansion.degree, tag=e.tag))
    return RankCertificate(
        d=d,
        D=p.degree,
        column_degree=column_degree,
        rank=red.rank,
        complement=complement,
        L_basis=kernel,
        row_words=[e.tag for e in rows],
        column_words=columns,
        evaluation_matrix=matrix,
        alphabet=alph,
    )


def kernel_bracket_failures(cert: RankCertificate) -> List[Tuple[int, int]]:
    """Pairs ``(i, j)`` of kernel elements whose bracket leaves ``span(L_basis)``.

    Only pairs with both degrees <= d/2 are examined. A failure is reported
    with a :class:`TruncationWarning`, never raised.
    """
    span = RowReducer()
    for k, l in enumerate(cert.L_basis):
        span.add(l.expansion.terms, k)
    small = [(k, l) for k, l in enumerate(cert.L_basis) if 2 * l.degree <= cert.d]
    bad = []
    for a, (i, li) in enumerate(small):
        for j, lj in small[a + 1 :]:
            br = li.bracket(lj).expansion
            if br.terms and span.express(br.terms) is None:
                bad.append((i, j))
    if bad:
        warnings.warn(f"{len(bad)} kernel brackets leave the truncated L (d={cert.d}, D={cert.D})", TruncationWarning)
    return bad


@dataclass
class Realization:
    """The formal realization: ``f_hat`` in ``k[[x_1..x_N]]`` over an adapted PBW basis.

    ``adapted_basis[:N]`` are the complement elements (coordinates
    ``x_1..x_N``, with weights = their degrees); the rest span the truncated
    ``L``. ``f_hat`` holds ``c_alpha = p(e^alpha) / alpha!`` for every
    ``alpha`` of weighted order <= ``order``.
    """

    N: int
    f_hat: MultiPoly
    order: int
    adapted_basis: OrderedLieBasis
    series_degree: int
    lie_degree: int
    vector_fields: Optional[Tuple[Derivation, ...]] = None

    @property
    def alphabet(self) -> Alphabet:
        return self.adapted_basis.alphabet

    @property
    def weights(self) -> Tuple[int, ...]:
        return tuple(e.degree for e in self.adapted_basis.elements[: self.N])

    @property
    def verifiable_degree(self) -> int:
        """Largest word length on which the regenerated series is defined."""
        n = 0
        while n < self.series_degree and self.adapted_basis.is_complete_to(n + 1):
            n += 1
        return n

    def coefficient(self, alpha: Exponent) -> Fraction:
        return self.f_hat.terms.get(tuple(alpha), Fraction(0))


def exponents_up_to(weights: Sequence[int], T: int) -> List[Exponent]:
    """Exponent vectors with ``sum alpha_r * weights_r <= T``, by (weight, alpha)."""
    out: List[Exponent] = []

    def rec(i: int, remaining: int, acc: List[int]):
        if i == len(weights):
            out.append(tuple(acc))
            return
        for a in range(remaining // weights[i] + 1):
            rec(i + 1, remaining - a * weights[i], acc + [a])

    rec(0, T, [])
    out.sort(key=lambda a: (sum(x * w for x, w in zip(a, weights)), a))
    return out


def _factors(alpha: Exponent) -> Tuple[Tuple[int, int], ...]:
    return tuple((i, a) for i, a in enumerate(alpha) if a)


def build_realization(p: Series, cert: RankCertificate, T: Optional[int] = None) -> Realization:
    """Adapted basis (complement first, then kernel) and ``c_alpha = p(e^alpha)/alpha!``.

    ``T`` defaults to the largest degree the round trip can be checked on.
    """
    if p.alphabet != cert.alphabet:
        raise ValueError("certificate belongs to a different alphabet")
    basis = OrderedLieBasis(list(cert.complement) + list(cert.L_basis), cert.d, p.alphabet)
    N = cert.rank
    real = Realization(N, MultiPoly({}, N), 0, basis, p.degree, cert.d)
    if T is None:
        T = real.verifiable_degree
    if T > p.degree:
        raise DegreeExceeded(f"order {T} needs series coefficients beyond degree {p.degree}")
    coeffs = {}
    for alpha in exponents_up_to(real.weights, T):
        mono = basis.monomial(_factors(alpha))
        coeffs[alpha] = pair(p, mono.expansion) / mono.alpha_factorial
    real.f_hat = MultiPoly(coeffs, N)
    real.order = T
    return real


def project_mod_J(w: Word, real: Realization) -> Dict[Exponent, Fraction]:
    """Values ``x_alpha(w)``: PBW coordinates of ``w`` on complement-only monomials."""
    coords = real.adapted_basis.word_coordinates(tuple(w))
    out: Dict[Exponent, Fraction] = {}
    for mono, c in coords.items():
        if all(i < real.N for i in mono.indices()):
            alpha = [0] * real.N
            for i, a in mono.factors:
                alpha[i] = a
            out[tuple(alpha)] = c
    return out


def _value_on(real: Realization, coords: Dict[Exponent, Fraction]) -> Fraction:
    # f_hat = sum c_alpha x^alpha = sum c_alpha alpha! x_alpha
    total = Fraction(0)
    for alpha, x in coords.items():
        c = real.coefficient(alpha)
        if c:
            total += c * math.prod(math.factorial(a) for a in alpha) * x
    return total


def regenerate_series(real: Realization, degree: Optional[int] = None) -> Series:
    """The series ``w -> f_hat(w)`` of the realization, on words of length <= degree."""
    if degree is None:
        degree = min(real.order, real.verifiable_degree)
    if degree > real.verifiable_degree:
        raise DegreeExceeded(
            f"adapted basis spans primitives only through degree {real.verifiable_degree}, asked for {degree}"
        )
    coeffs = {w: _value_on(real, project_mod_J(w, real)) for w in real.alphabet.words(degree)}
    return Series(coeffs, degree, real.alphabet)


def induced_vector_fields(real: Realization, order: Optional[int] = None) -> Tuple[Derivation, ...]:
    """The derivations ``g -> g < E_i`` of ``k[[x_1..x_N]]``, truncated at weighted ``order``.

    The coefficient of ``d/dx_j`` in field ``i`` is ``x_j < E_i``, whose
    ``x^alpha`` coefficient is ``x_j(E_i e^alpha) / alpha!``.
    """
    top = real.verifiable_degree
    if order is None:
        order = top - 1
    if order + 1 > top:
        raise DegreeExceeded(f"order {order} needs straightening words of length {order + 1} > {top}")
    alph = real.alphabet
    basis = real.adapted_basis
    N = real.N
    alphas = exponents_up_to(real.weights, order) if N else [()]
    fields = []
    for i in range(1, alph.size + 1):
        gen = NoncommPoly.generator(i, alph)
        table: List[Dict[Exponent, Fraction]] = [{} for _ in range(N)]
        for alpha in alphas:
            mono = basis.monomial(_factors(alpha))
            coords = express_in_pbw(gen * mono.expansion, basis)
            for m, c in coords.items():
                if len(m.factors) == 1 and m.factors[0][1] == 1 and m.factors[0][0] < N:
                    table[m.factors[0][0]][alpha] = c / mono.alpha_factorial
        fields.append(Derivation(tuple(MultiPoly(t, N) for t in table)))
    real.vector_fields = tuple(fields)
    return real.vector_fields


def vector_field_series(real: Realization, degree: int) -> Series:
    """Series of the realized system ``(f_hat, induced fields, evaluation at 0)``.

    Exact only while the truncations of ``f_hat`` and the fields are deep
    enough for ``degree``; see :func:`induced_vector_fields`.
    """
    if real.vector_fields is None:
        raise ValueError("call induced_vector_fields first")
    zero = (0,) * real.N
    coeffs = {}
    layer = {EMPTY: real.f_hat}
    for n in range(degree + 1):
        nxt = {}
        for w, g in layer.items():
            coeffs[w] = eval_point(g, zero)
            if n < degree:
                for a, E in enumerate(real.vector_fields, 1):
                    nxt[w + (a,)] = apply_derivation(E, g)
        layer = nxt
    return Series(coeffs, degree, real.alphabet)


@dataclass
class VerificationReport:
    checked_degree: int
    N: int
    rank: Optional[int]
    mismatches: List[Tuple[Word, Fraction, Fraction]] = field(default_factory=list)

    @property
    def rank_ok(self) -> bool:
        return self.rank is None or self.rank <= self.N

    @property
    def ok(self) -> bool:
        return not self.mismatches and self.rank_ok

    def lines(self) -> List[str]:
        out = [f"checked words of length <= {self.checked_degree}", f"N {self.N}"]
        if self.rank is not None:
            out.append(f"rank {self.rank} <= N: {'yes' if self.rank_ok else 'NO'}")
        out.append(f"mismatches {len(self.mismatches)}")
        for w, want, got in self.mismatches:
            out.append(f"  {' '.join(map(str, w)) or 'e'} : expected {want} got {got}")
        return out


def verify_realization(
    p: Series, real: Realization, Dcheck: Optional[int] = None, rank: Optional[int] = None
) -> VerificationReport:
    """Compare ``p`` with the regenerated series on all words of length <= Dcheck."""
    if Dcheck is None:
        Dcheck = min(real.order, real.verifiable_degree, p.degree)
    regen = regenerate_series(real, Dcheck)
    report = VerificationReport(Dcheck, real.N, rank)
    for w in p.alphabet.words(Dcheck):
        want, got = p[w], regen[w]
        if want != got:
            report.mismatches.append((w, want, got))
    return report


# -- dump format ---------------------------------------------------------------


def _fmt_alpha(alpha: Exponent) -> str:
    return " ".join(map(str, alpha)) if alpha else "e"


def format_realization(real: Realization) -> str:
    lines = [
        f"alphabet {real.alphabet.size}",
        f"series_degree {real.series_degree}",
        f"lie_degree {real.lie_degree}",
        f"order {real.order}",
        f"N {real.N}",
        "adapted basis",
    ]
    for k, e in enumerate(real.adapted_basis.elements):
        role = "complement" if k < real.N else "kernel"
        lines.append(f"{role} {format_poly(e.expansion)}")
    lines.append("f_hat")
    for alpha in exponents_up_to(real.weights, real.order):
        lines.append(f"{_fmt_alpha(alpha)} : {real.coefficient(alpha)}")
    if real.vector_fields is not None:
        lines.append("vector_fields")
        names = [f"x{j}" for j in range(1, real.N + 1)]
        for i, E in enumerate(real.vector_fields, 1):
            for j, a in enumerate(E.coeffs, 1):
                lines.append(f"E{i} x{j} : {format_multipoly(a, names)}")
    return "\n".join(lines) + "\n"


def parse_realization(text: str) -> Realization:
    header: Dict[str, int] = {}
    section = None
    elements: List[Tuple[str, str]] = []
    f_lines: List[Tuple[int, str]] = []
    vf_lines: List[Tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("adapted basis", "f_hat", "vector_fields"):
            section = line
            continue
        if section is None:
            key, _, val = line.partition(" ")
            try:
                header[key] = int(val)
            except ValueError:
                raise ParseError(f"line {lineno}: bad header line {line!r}") from None
        elif section == "adapted basis":
            role, _, body = line.partition(" ")
            if role not in ("complement", "kernel"):
                raise ParseError(f"line {lineno}: expected 'complement' or 'kernel'")
            elements.append((role, body))
        elif section == "f_hat":
            f_lines.append((lineno, line))
        else:
            vf_lines.append((lineno, line))
    missing = {"alphabet", "series_degree", "lie_degree", "order", "N"} - set(header)
    if missing:
        raise ParseError(f"realization header lacks {sorted(missing)}")
    alph = Alphabet(header["alphabet"])
    N = header["N"]
    roles = [r for r, _ in elements]
    if roles[:N] != ["complement"] * N or "complement" in roles[N:]:
        raise ParseError("adapted basis must list exactly N complement elements first")
    lie = []
    for _, body in elements:
        e = parse_poly(body, alph)
        lie.append(LieElement(e, e.degree))
    basis = OrderedLieBasis(lie, header["lie_degree"], alph)
    coeffs: Dict[Exponent, Fraction] = {}
    for lineno, line in f_lines:
        lhs, sep, rhs = line.partition(":")
        if not sep:
            raise ParseError(f"line {lineno}: expected '<alpha> : <rational>'")
        parts = lhs.split()
        try:
            alpha = () if parts == ["e"] else tuple(int(a) for a in parts)
            c = Fraction(rhs.strip())
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if len(alpha) != N:
            raise ParseError(f"line {lineno}: exponent vector needs {N} entries")
        coeffs[alpha] = c
    real = Realization(N, MultiPoly(coeffs, N), header["order"], basis, header["series_degree"], header["lie_degree"])
    if vf_lines:
        names = [f"x{j}" for j in range(1, N + 1)]
        table = [[MultiPoly({}, N) for _ in range(N)] for _ in range(alph.size)]
        for lineno, line in vf_lines:
            lhs, _, rhs = line.partition(":")
            try:
                gi, xj = lhs.split()
                table[int(gi[1:]) - 1][int(xj[1:]) - 1] = parse_multipoly(rhs, names)
            except (ValueError, IndexError):
                raise ParseError(f"line {lineno}: expected 'E<i> x<j> : <poly>'") from None
        real.vector_fields = tuple(Derivation(tuple(row)) for row in table)
    return real
