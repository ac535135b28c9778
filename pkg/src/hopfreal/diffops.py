"""Polynomial state space: ``k[x1..xN]``, vector fields, word and tree actions.

A :class:`System` bundles ``M`` polynomial vector fields
``E_i = sum_j b_ij d/dx_j``, an observation ``f`` and an initial point.
Words act by composing vector fields (the first letter acts first) and
labeled trees act through :func:`psi`.
"""

from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from hopfreal.errors import ParseError
from hopfreal.treehopf import LabeledTree, TreePoly, _flatten

Exponent = Tuple[int, ...]


class MultiPoly:
    """Sparse polynomial in ``nvars`` variables with exact rational coefficients."""

    __slots__ = ("terms", "nvars")

    def __init__(self, terms: Mapping[Exponent, object], nvars: int):
        out = {}
        for e, c in terms.items():
            e = tuple(int(k) for k in e)
            if len(e) != nvars or any(k < 0 for k in e):
                raise ValueError(f"bad exponent vector {e} for {nvars} variables")
            c = Fraction(c)
            if c:
                out[e] = c
        self.terms: Dict[Exponent, Fraction] = out
        self.nvars = nvars

    @classmethod
    def _raw(cls, terms, nvars) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.terms = {e: c for e, c in terms.items() if c}
        obj.nvars = nvars
        return obj

    @classmethod
    def constant(cls, c, nvars: int) -> "MultiPoly":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, i: int, nvars: int) -> "MultiPoly":
        """The coordinate ``x_i`` (1-based)."""
        e = [0] * nvars
        e[i - 1] = 1
        return cls({tuple(e): 1}, nvars)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def _check(self, other: "MultiPoly"):
        if other.nvars != self.nvars:
            raise ValueError(f"polynomials in {self.nvars} and {other.nvars} variables")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(other, self.nvars)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly._raw(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "MultiPoly":
        c = Fraction(c)
        return MultiPoly._raw({e: c * v for e, v in self.terms.items()}, self.nvars)

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        self._check(other)
        out: Dict[Exponent, Fraction] = defaultdict(Fraction)
        for e1, a in self.terms.items():
            for e2, b in other.terms.items():
                out[tuple(x + y for x, y in zip(e1, e2))] += a * b
        return MultiPoly._raw(out, self.nvars)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MultiPoly.constant(1, self.nvars)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.constant(other, self.nvars)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"MultiPoly({format_multipoly(self)!r})"

    def truncate(self, degree: int, weights: Optional[Sequence[int]] = None) -> "MultiPoly":
        """Drop monomials whose (weighted) degree exceeds ``degree``."""
        w = weights or (1,) * self.nvars
        return MultiPoly._raw(
            {e: c for e, c in self.terms.items() if sum(a * b for a, b in zip(e, w)) <= degree}, self.nvars
        )


def partial(f: MultiPoly, i: int) -> MultiPoly:
    """``d f / d x_i`` with 1-based ``i``."""
    j = i - 1
    out = {}
    for e, c in f.terms.items():
        if e[j]:
            out[e[:j] + (e[j] - 1,) + e[j + 1 :]] = c * e[j]
    return MultiPoly._raw(out, f.nvars)


def eval_point(f: MultiPoly, x0: Sequence) -> Fraction:
    if len(x0) != f.nvars:
        raise ValueError(f"point has {len(x0)} coordinates, polynomial has {f.nvars} variables")
    pt = [Fraction(v) for v in x0]
    total = Fraction(0)
    for e, c in f.terms.items():
        term = c
        for v, k in zip(pt, e):
            if k:
                term *= v**k
        total += term
    return total


def compile_float(f: MultiPoly):
    """Float evaluator ``x -> f(x)`` for use by the numerical harness."""
    if not f.terms:
        return lambda x: 0.0
    exps = np.array(list(f.terms), dtype=float).reshape(len(f.terms), f.nvars)
    coeffs = np.array([float(c) for c in f.terms.values()])

    def fn(x):
        return float(coeffs @ np.prod(np.asarray(x, dtype=float) ** exps, axis=1))

    return fn


@dataclass(frozen=True)
class Derivation:
    """The vector field ``sum_j coeffs[j-1] * d/dx_j``."""

    coeffs: Tuple[MultiPoly, ...]

    def __post_init__(self):
        n = len(self.coeffs)
        if any(b.nvars != n for b in self.coeffs):
            raise ValueError("a derivation on N variables needs N coefficient polynomials in N variables")

    @property
    def nvars(self) -> int:
        return len(self.coeffs)

    def __call__(self, f: MultiPoly) -> MultiPoly:
        return apply_derivation(self, f)


def apply_derivation(E: Derivation, f: MultiPoly) -> MultiPoly:
    out = MultiPoly._raw({}, f.nvars)
    for mu, b in enumerate(E.coeffs, 1):
        if b.terms:
            d = partial(f, mu)
            if d.terms:
                out = out + b * d
    return out


@dataclass(frozen=True)
class System:
    """Polynomial control-affine system with observation and initial point."""

    derivations: Tuple[Derivation, ...]
    observation: MultiPoly
    x0: Tuple[Fraction, ...]
    var_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        n = self.N
        if any(E.nvars != n for E in self.derivations):
            raise ValueError("all derivations must act on the same state dimension")
        if self.observation.nvars != n:
            raise ValueError("observation lives in a different number of variables")
        if len(self.x0) != n:
            raise ValueError(f"initial point needs {n} coordinates")
        if not self.derivations:
            raise ValueError("a system needs at least one vector field")
        object.__setattr__(self, "x0", tuple(Fraction(v) for v in self.x0))
        if self.var_names is None:
            object.__setattr__(self, "var_names", tuple(f"x{i}" for i in range(1, n + 1)))

    @property
    def N(self) -> int:
        return self.observation.nvars

    @property
    def M(self) -> int:
        return len(self.derivations)

    @classmethod
    def from_strings(cls, fields: Sequence[Sequence[str]], observation: str, x0: Sequence, var_names=None) -> "System":
        """Build from polynomial strings, e.g. ``fields=[["x2", "0"], ["0", "x1"]]``."""
        n = len(x0)
        names = tuple(var_names) if var_names else tuple(f"x{i}" for i in range(1, n + 1))
        ders = tuple(Derivation(tuple(parse_multipoly(s, names) for s in row)) for row in fields)
        return cls(ders, parse_multipoly(observation, names), tuple(Fraction(v) for v in x0), names)


def apply_word(sys: System, w: Sequence[int], f: MultiPoly) -> MultiPoly:
    """``E_{w_k} ... E_{w_1} f``: the first letter of ``w`` acts first."""
    for a in w:
        f = apply_derivation(sys.derivations[a - 1], f)
    return f


def psi(sys: System, t, f: MultiPoly) -> MultiPoly:
    """Differential operator attached to a labeled tree (or TreePoly), applied to ``f``.

    Every non-root node is assigned a coordinate index, summed over all
    assignments. A node labeled ``g`` with index ``j`` contributes the
    coefficient of ``d/dx_j`` in field ``g``, differentiated along the indices
    of its children; the root contributes ``f`` differentiated along the
    indices of its children.
    """
    if isinstance(t, TreePoly):
        out = MultiPoly._raw({}, f.nvars)
        for tree, c in t.terms.items():
            out = out + psi(sys, tree, f).scale(c)
        return out
    nodes = _flatten(t)
    m = len(nodes) - 1
    N = sys.N
    for label, _ in nodes[1:]:
        if not 1 <= label <= sys.M:
            raise ValueError(f"tree label {label} outside the system's {sys.M} vector fields")
    cache: Dict[tuple, MultiPoly] = {}

    def deriv(base, poly: MultiPoly, idx: Tuple[int, ...]) -> MultiPoly:
        key = (base, idx)
        if key not in cache:
            if not idx:
                cache[key] = poly
            else:
                cache[key] = partial(deriv(base, poly, idx[:-1]), idx[-1])
        return cache[key]

    total = MultiPoly._raw({}, N)
    for mu in itertools.product(range(1, N + 1), repeat=m):
        idx0 = tuple(sorted(mu[j - 1] for j in nodes[0][1]))
        term = deriv(("f",), f, idx0)
        for k in range(1, m + 1):
            if not term.terms:
                break
            label, kids = nodes[k]
            b = sys.derivations[label - 1].coeffs[mu[k - 1] - 1]
            idx = tuple(sorted(mu[j - 1] for j in kids))
            term = term * deriv(("b", label, mu[k - 1]), b, idx)
        total = total + term
    return total


# -- polynomial strings --------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def _tokenize(s: str):
    toks = []
    for m in _TOKEN.finditer(s):
        if m.group(0).strip() == "":
            continue
        pos = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        if m.group(1):
            toks.append(("num", m.group(1), pos))
        elif m.group(2):
            toks.append(("name", m.group(2), pos))
        else:
            toks.append(("op", m.group(3), pos))
    toks.append(("end", "", len(s)))
    return toks


def parse_multipoly(s: str, var_names: Sequence[str]) -> MultiPoly:
    """Parse rationals, variables, ``+ - * / ^`` and parentheses.

    Division is only allowed by a nonzero constant.
    """
    names = {v: i for i, v in enumerate(var_names, 1)}
    n = len(var_names)
    toks = _tokenize(s)
    pos = 0

    def peek():
        return toks[pos]

    def take():
        nonlocal pos
        tok = toks[pos]
        pos += 1
        return tok

    def expr():
        out = term()
        while peek()[:2] in (("op", "+"), ("op", "-")):
            op = take()[1]
            rhs = term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term():
        out = unary()
        while peek()[:2] in (("op", "*"), ("op", "/")):
            op = take()[1]
            where = peek()[2]
            rhs = unary()
            if op == "*":
                out = out * rhs
            else:
                if any(any(e) for e in rhs.terms) or rhs.is_zero():
                    raise ParseError("division only by a nonzero constant", where)
                out = out.scale(1 / next(iter(rhs.terms.values())))
        return out

    def unary():
        if peek()[:2] == ("op", "-"):
            take()
            return -unary()
        if peek()[:2] == ("op", "+"):
            take()
            return unary()
        return power()

    def power():
        base = atom()
        if peek()[:2] == ("op", "^"):
            take()
            kind, val, where = take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a non-negative integer", where)
            base = base ** int(val)
        return base

    def atom():
        kind, val, where = take()
        if kind == "num":
            return MultiPoly.constant(Fraction(val), n)
        if kind == "name":
            if val not in names:
                raise ParseError(f"unknown variable {val!r}", where)
            return MultiPoly.var(names[val], n)
        if (kind, val) == ("op", "("):
            inner = expr()
            kind2, val2, where2 = take()
            if (kind2, val2) != ("op", ")"):
                raise ParseError("expected ')'", where2)
            return inner
        raise ParseError(f"unexpected {val or 'end of input'!r}", where)

    result = expr()
    kind, val, where = peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r}", where)
    return result


def format_multipoly(f: MultiPoly, var_names: Optional[Sequence[str]] = None) -> str:
    """Deterministic string, highest total degree first, e.g. ``x1^2*x2 - 3/2*x1 + 1``."""
    names = var_names or [f"x{i}" for i in range(1, f.nvars + 1)]
    if not f.terms:
        return "0"
    parts = []
    for e, c in sorted(f.terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0]))):
        mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(names, e) if k)
        a = abs(c)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(parts)
