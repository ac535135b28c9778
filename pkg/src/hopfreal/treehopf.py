"""Hopf algebra of rooted trees with labeled non-root nodes.

Children are unordered; a tree is kept in canonical form by sorting its
children on their canonical strings, which coincide with the literal
syntax ``o[1[2],3]`` (``o`` is the root, integers are labels).
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from hopfreal.errors import ParseError


class LabeledTree:
    """A node with an optional label and a sorted tuple of child subtrees.

    A root has ``label is None``; every other node carries a label ``>= 1``.
    Instances are immutable and hash/compare by canonical string.
    """

    __slots__ = ("label", "children", "key", "node_count")

    def __init__(self, label: Optional[int] = None, children: Iterable["LabeledTree"] = ()):
        children = tuple(children)
        for c in children:
            if c.label is None:
                raise ValueError("a root cannot appear as a child")
        if label is not None and label < 1:
            raise ValueError(f"labels must be positive, got {label}")
        self.label = label
        self.children = tuple(sorted(children, key=lambda c: c.key))
        head = "o" if label is None else str(label)
        self.key = head + ("[" + ",".join(c.key for c in self.children) + "]" if self.children else "")
        self.node_count = 1 + sum(c.node_count for c in self.children)

    def __eq__(self, other):
        if not isinstance(other, LabeledTree):
            return NotImplemented
        return self.key == other.key

    def __lt__(self, other):
        return self.key < other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"LabeledTree({self.key!r})"

    def __str__(self):
        return self.key

    @property
    def grade(self) -> int:
        return self.node_count - 1

    def labels(self) -> List[int]:
        out = [] if self.label is None else [self.label]
        for c in self.children:
            out.extend(c.labels())
        return out


ROOT = LabeledTree()


def one_child_tree(label: int) -> LabeledTree:
    """The primitive tree: a root with one child carrying ``label``."""
    return LabeledTree(None, [LabeledTree(label)])


def grade(t: LabeledTree) -> int:
    return t.node_count - 1


def is_primitive_tree(t: LabeledTree) -> bool:
    return len(t.children) == 1


class TreePoly:
    """Rational linear combination of canonical trees."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[LabeledTree, object] = ()):
        terms = dict(terms)
        self.terms: Dict[LabeledTree, Fraction] = {t: Fraction(c) for t, c in terms.items() if c}

    @classmethod
    def of(cls, t: LabeledTree, coeff=1) -> "TreePoly":
        return cls({t: coeff})

    def items(self):
        return sorted(self.terms.items())

    def __add__(self, other):
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0) + c
        return TreePoly(out)

    def __neg__(self):
        return TreePoly({t: -c for t, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "TreePoly":
        c = Fraction(c)
        return TreePoly({t: c * v for t, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TreePoly):
            out: Dict[LabeledTree, Fraction] = defaultdict(Fraction)
            for t1, a in self.terms.items():
                for t2, b in other.terms.items():
                    for t, k in gl_product(t1, t2).terms.items():
                        out[t] += a * b * k
            return TreePoly(out)
        return self.scale(other)

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, TreePoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"TreePoly({format_treepoly(self)!r})"


class TreeTensor:
    """An element of ``H (x) H`` on the basis of tree pairs."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Tuple[LabeledTree, LabeledTree], object] = ()):
        terms = dict(terms)
        self.terms = {k: Fraction(c) for k, c in terms.items() if c}

    @property
    def pairs(self) -> List[Tuple[TreePoly, TreePoly]]:
        grouped: Dict[LabeledTree, Dict[LabeledTree, Fraction]] = defaultdict(dict)
        for (a, b), c in self.terms.items():
            grouped[a][b] = c
        return [(TreePoly.of(a), TreePoly(grouped[a])) for a in sorted(grouped)]

    def items(self):
        return sorted(self.terms.items())

    def swap(self) -> "TreeTensor":
        return TreeTensor({(b, a): c for (a, b), c in self.terms.items()})

    def __add__(self, other: "TreeTensor") -> "TreeTensor":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TreeTensor(out)

    def scale(self, c) -> "TreeTensor":
        c = Fraction(c)
        return TreeTensor({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other: "TreeTensor") -> "TreeTensor":
        """Componentwise product ``(a (x) b)(c (x) d) = ac (x) bd``."""
        out: Dict[Tuple[LabeledTree, LabeledTree], Fraction] = defaultdict(Fraction)
        for (a, b), x in self.terms.items():
            for (c, d), y in other.terms.items():
                left = gl_product(a, c).terms
                right = gl_product(b, d).terms
                for s, k in left.items():
                    for t, l in right.items():
                        out[s, t] += x * y * k * l
        return TreeTensor(out)

    def __eq__(self, other):
        if not isinstance(other, TreeTensor):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        return f"TreeTensor({format_treetensor(self)!r})"


def _flatten(t: LabeledTree) -> List[Tuple[Optional[int], List[int]]]:
    """Preorder node list ``(label, child indices)``; node 0 is the root."""
    nodes: List[Tuple[Optional[int], List[int]]] = []

    def visit(n: LabeledTree) -> int:
        idx = len(nodes)
        nodes.append((n.label, []))
        for c in n.children:
            nodes[idx][1].append(visit(c))
        return idx

    visit(t)
    return nodes


@lru_cache(maxsize=None)
def gl_product(t1: LabeledTree, t2: LabeledTree) -> TreePoly:
    """Sum over all ways of grafting the root subtrees of ``t1`` onto nodes of ``t2``."""
    nodes = _flatten(t2)
    subtrees = t1.children
    out: Dict[LabeledTree, int] = defaultdict(int)
    for targets in itertools.product(range(len(nodes)), repeat=len(subtrees)):
        extra: Dict[int, List[LabeledTree]] = defaultdict(list)
        for s, k in zip(subtrees, targets):
            extra[k].append(s)

        def build(i: int) -> LabeledTree:
            label, kids = nodes[i]
            return LabeledTree(label, [build(j) for j in kids] + extra.get(i, []))

        out[build(0)] += 1
    return TreePoly(out)


def tree_product(a: TreePoly, b: TreePoly) -> TreePoly:
    return a * b


@lru_cache(maxsize=None)
def gl_coproduct(t: LabeledTree) -> TreeTensor:
    """``sum over subsets P of the root children of t_P (x) t_{C \\ P}``."""
    kids = t.children
    out: Dict[Tuple[LabeledTree, LabeledTree], int] = defaultdict(int)
    for mask in range(1 << len(kids)):
        left = [c for i, c in enumerate(kids) if mask >> i & 1]
        right = [c for i, c in enumerate(kids) if not mask >> i & 1]
        out[LabeledTree(None, left), LabeledTree(None, right)] += 1
    return TreeTensor(out)


def tree_coproduct(h: TreePoly) -> TreeTensor:
    out: Dict[Tuple[LabeledTree, LabeledTree], Fraction] = defaultdict(Fraction)
    for t, c in h.terms.items():
        for k, v in gl_coproduct(t).terms.items():
            out[k] += c * v
    return TreeTensor(out)


def tree_counit(h) -> Fraction:
    """1 on the bare root, 0 on every other tree; linear on :class:`TreePoly`."""
    if isinstance(h, LabeledTree):
        return Fraction(1 if h.node_count == 1 else 0)
    return h.terms.get(ROOT, Fraction(0))


# -- enumeration -------------------------------------------------------------


@lru_cache(maxsize=None)
def _subtrees(M: int, n: int) -> Tuple[LabeledTree, ...]:
    """Labeled non-root subtrees with exactly n nodes."""
    return tuple(sorted({LabeledTree(a, f) for a in range(1, M + 1) for f in _forests(M, n - 1)}))


@lru_cache(maxsize=None)
def _forests(M: int, n: int) -> Tuple[Tuple[LabeledTree, ...], ...]:
    """Multisets (sorted tuples) of subtrees with n nodes in total."""
    if n == 0:
        return ((),)
    found = set()
    for k in range(1, n + 1):
        for s in _subtrees(M, k):
            for rest in _forests(M, n - k):
                found.add(tuple(sorted((s,) + rest, key=lambda c: c.key)))
    return tuple(sorted(found, key=lambda f: [c.key for c in f]))


def trees_of_grade(M: int, g: int) -> List[LabeledTree]:
    return sorted(LabeledTree(None, f) for f in _forests(M, g))


def all_trees(M: int, g: int) -> List[LabeledTree]:
    """Every canonical tree of grade <= g, by (grade, key)."""
    return [t for k in range(g + 1) for t in trees_of_grade(M, k)]


def primitive_tree_basis(M: int, g: int) -> List[LabeledTree]:
    return [t for t in all_trees(M, g) if is_primitive_tree(t)]


# -- literal syntax ----------------------------------------------------------


def tree_format(t: LabeledTree) -> str:
    return t.key


def tree_parse(s: str, M: Optional[int] = None) -> LabeledTree:
    """Parse ``o[1[2],3]``-style literals; children may appear in any order."""
    pos = 0
    n = len(s)

    def skip():
        nonlocal pos
        while pos < n and s[pos].isspace():
            pos += 1

    def children() -> List[LabeledTree]:
        nonlocal pos
        skip()
        if pos >= n or s[pos] != "[":
            return []
        pos += 1
        kids = [node()]
        skip()
        while pos < n and s[pos] == ",":
            pos += 1
            kids.append(node())
            skip()
        if pos >= n or s[pos] != "]":
            raise ParseError("expected ',' or ']'", pos)
        pos += 1
        return kids

    def node() -> LabeledTree:
        nonlocal pos
        skip()
        start = pos
        while pos < n and s[pos].isdigit():
            pos += 1
        if start == pos:
            raise ParseError("expected a label", pos)
        label = int(s[start:pos])
        if label < 1 or (M is not None and label > M):
            raise ParseError(f"label {label} outside alphabet", start)
        return LabeledTree(label, children())

    skip()
    if pos >= n or s[pos] != "o":
        raise ParseError("tree must start with root 'o'", pos)
    pos += 1
    t = LabeledTree(None, children())
    skip()
    if pos != n:
        raise ParseError("trailing characters", pos)
    return t


def _fmt_coeff(c: Fraction, body: str, first: bool) -> str:
    sign = "-" if c < 0 else "+"
    a = abs(c)
    term = body if a == 1 else f"{a}*{body}"
    if first:
        return term if sign == "+" else f"-{term}"
    return f" {sign} {term}"


def format_treepoly(h: TreePoly) -> str:
    if not h.terms:
        return "0"
    return "".join(_fmt_coeff(c, t.key, i == 0) for i, (t, c) in enumerate(h.items()))


def format_treetensor(h: TreeTensor) -> str:
    if not h.terms:
        return "0"
    return "".join(_fmt_coeff(c, f"{a.key}⊗{b.key}", i == 0) for i, ((a, b), c) in enumerate(h.items()))
