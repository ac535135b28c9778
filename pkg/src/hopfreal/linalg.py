"""Exact sparse linear algebra over the rationals.

Vectors are ``dict`` objects mapping an orderable key to a nonzero
:class:`~fractions.Fraction`. The only algorithm needed by the package is
incremental Gaussian elimination in which rows are inserted one at a time
("first independent rows win"), tracking how every stored row decomposes
into the inserted originals. Rank, kernels and coordinate solves all fall
out of that.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Tuple

Vector = Dict[Hashable, Fraction]


def axpy(a: Fraction, x: Vector, y: Vector) -> None:
    """In place ``y += a * x``, dropping entries that cancel."""
    if not a:
        return
    for k, v in x.items():
        s = y.get(k, 0) + a * v
        if s:
            y[k] = s
        else:
            y.pop(k, None)


class RowReducer:
    """Row-echelon basis grown one vector at a time.

    Each stored row is normalized so its pivot entry is 1 and carries a
    combination ``{label: coeff}`` of the original vectors it equals.

    >>> r = RowReducer()
    >>> r.add({0: Fraction(1)}, "a")
    True
    >>> r.add({0: Fraction(2)}, "b")
    False
    >>> r.last_dependency
    {'a': Fraction(2, 1)}
    """

    def __init__(self):
        self._rows: List[Tuple[Hashable, Vector, Vector]] = []
        self.pivot_labels: List[Hashable] = []
        self.last_dependency: Optional[Vector] = None

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _reduce(self, vec: Vector) -> Tuple[Vector, Vector]:
        v = dict(vec)
        used: Vector = {}
        for piv, row, combo in self._rows:
            c = v.get(piv)
            if c:
                axpy(-c, row, v)
                axpy(c, combo, used)
        return v, used

    def add(self, vec: Vector, label: Hashable) -> bool:
        """Insert ``vec``; return True if it was independent of earlier rows.

        When it was dependent, ``last_dependency`` holds coefficients over
        earlier independent labels reproducing ``vec``.
        """
        residual, used = self._reduce(vec)
        if not residual:
            self.last_dependency = used
            return False
        piv = min(residual)
        inv = 1 / Fraction(residual[piv])
        row = {k: v * inv for k, v in residual.items()}
        combo = {label: inv}
        axpy(-inv, used, combo)
        self._rows.append((piv, row, combo))
        self.pivot_labels.append(label)
        self.last_dependency = None
        return True

    def express(self, vec: Vector) -> Optional[Vector]:
        """Coefficients over inserted labels summing to ``vec``, or None if outside the span."""
        residual, used = self._reduce(vec)
        if residual:
            return None
        return used


def rank(rows: List[Vector]) -> int:
    r = RowReducer()
    for i, row in enumerate(rows):
        r.add(row, i)
    return r.rank
