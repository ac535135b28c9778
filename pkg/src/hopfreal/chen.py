"""Numerical cross-check of generating series against simulation.

The state equation and all iterated integrals are integrated with the same
classical RK4 stepper on a uniform grid. The iterated integrals of words up
to length ``D`` form one lower-triangular linear system
``d I_w / dt = u_{w_1}(t) I_{w_2..w_k}(t)``, ``I_w(0) = 0``, ``I_empty = 1``.

Arithmetic is float64 by default. Passing ``dps`` switches every step to
mpmath with that many decimal digits, for remainders below double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from hopfreal.diffops import MultiPoly, System, compile_float, parse_multipoly
from hopfreal.errors import NonFinite, ParseError
from hopfreal.freealg import EMPTY, Alphabet, Series, Word, shuffle_counts
from hopfreal.realize import generating_series

Signal = Callable[[float], float]


class _Arith:
    """Scalar backend: float64, or mpmath when ``dps`` is set."""

    def __init__(self, dps: Optional[int] = None):
        if dps is not None and dps < 1:
            raise ValueError("dps must be positive")
        self.dps = dps

    @property
    def exact(self) -> bool:
        return self.dps is not None

    def num(self, c):
        if self.dps is None:
            return float(c)
        if isinstance(c, mpmath.mpf):
            return c
        if isinstance(c, float):
            return mpmath.mpf(repr(c))
        c = Fraction(c)
        return mpmath.mpf(c.numerator) / c.denominator

    def array(self, values) -> np.ndarray:
        return np.array(list(values), dtype=object if self.exact else float)

    def eps(self) -> float:
        return float(mpmath.mp.eps) if self.exact else float(np.finfo(float).eps)

    def finite(self, y: np.ndarray) -> bool:
        if self.exact:
            return all(mpmath.isfinite(v) for v in y)
        return bool(np.all(np.isfinite(y)))

    def evaluator(self, f: MultiPoly):
        if not self.exact:
            return compile_float(f)
        terms = [(self.num(c), e) for e, c in f.terms.items()]

        def fn(x):
            total = mpmath.mpf(0)
            for c, e in terms:
                for v, k in zip(x, e):
                    if k:
                        c = c * v**k
                total += c
            return total

        return fn


def _like(c: Fraction, t):
    """The rational ``c`` in the scalar type of ``t``."""
    if isinstance(t, mpmath.mpf):
        return mpmath.mpf(c.numerator) / c.denominator
    return float(c)


@dataclass(frozen=True)
class ControlSignals:
    """``M`` scalar input functions of time; ``specs`` records how they were built.

    Each function accepts a float or an mpmath number and answers in kind.
    """

    funcs: Tuple[Signal, ...]
    specs: Tuple[str, ...] = ()

    @property
    def M(self) -> int:
        return len(self.funcs)

    def __call__(self, t: float) -> np.ndarray:
        return np.array([float(u(t)) for u in self.funcs], dtype=float)

    def at(self, t, arith: _Arith) -> np.ndarray:
        return arith.array(u(t) for u in self.funcs)

    @classmethod
    def from_specs(cls, specs: Sequence[str]) -> "ControlSignals":
        """Presets ``one``, ``zero``, ``ramp``, ``sin:<rational freq>``, or a polynomial in ``t``."""
        return cls(tuple(parse_control(s) for s in specs), tuple(specs))

    def check_bounded(self, t_end: float, steps: int, bound: float = 1e12) -> None:
        for t in np.linspace(0.0, t_end, steps + 1):
            v = self(t)
            if not np.all(np.isfinite(v)) or np.any(np.abs(v) > bound):
                raise NonFinite(f"control not bounded at t={t}: {v}")


def parse_control(spec: str) -> Signal:
    s = spec.strip()
    if s == "one":
        return lambda t: t * 0 + 1
    if s == "zero":
        return lambda t: t * 0
    if s == "ramp":
        return lambda t: t
    if s.startswith("sin:"):
        try:
            w = Fraction(s[4:])
        except ValueError:
            raise ParseError(f"bad sine frequency in {spec!r}") from None
        return lambda t: mpmath.sin(_like(w, t) * t) if isinstance(t, mpmath.mpf) else math.sin(float(w) * t)
    poly = parse_multipoly(s, ["t"])
    coeffs = sorted(((e[0], c) for e, c in poly.terms.items()), reverse=True)
    if not coeffs:
        return lambda t: t * 0

    def fn(t):
        # Horner over the dense coefficient list
        dense = dict(coeffs)
        acc = t * 0
        for k in range(coeffs[0][0], -1, -1):
            acc = acc * t + _like(dense.get(k, Fraction(0)), t)
        return acc

    return fn


def _rk4(rhs, y0: np.ndarray, t_end, steps: int, arith: Optional[_Arith] = None) -> Tuple[np.ndarray, np.ndarray]:
    if steps < 1:
        raise ValueError("need at least one step")
    arith = arith or _Arith()
    h = arith.num(t_end) / steps
    ts = arith.array(h * n for n in range(steps + 1))
    ys = np.empty((steps + 1, len(y0)), dtype=ts.dtype)
    y = arith.array(y0)
    ys[0] = y
    for n in range(steps):
        t = ts[n]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not arith.finite(y):
            raise NonFinite(f"solution left the finite range at t={float(ts[n + 1])}")
        ys[n + 1] = y
    return ts, ys


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    f: np.ndarray


def _simulate(sys: System, u: ControlSignals, t_end, steps: int, arith: _Arith) -> Trajectory:
    if u.M != sys.M:
        raise ValueError(f"system has {sys.M} inputs, got {u.M} controls")
    fields = [[arith.evaluator(b) for b in E.coeffs] for E in sys.derivations]

    def rhs(t, x):
        ut = u.at(t, arith)
        out = arith.array(arith.num(0) for _ in range(sys.N))
        for i, row in enumerate(fields):
            if ut[i]:
                out = out + ut[i] * arith.array(b(x) for b in row)
        return out

    x0 = arith.array(arith.num(v) for v in sys.x0)
    ts, xs = _rk4(rhs, x0, t_end, steps, arith)
    obs = arith.evaluator(sys.observation)
    return Trajectory(ts, xs, arith.array(obs(x) for x in xs))


def simulate(sys: System, u: ControlSignals, t_end: float, steps: int, dps: Optional[int] = None) -> Trajectory:
    """RK4 solution of ``x' = sum_i u_i(t) E_i(x)`` from ``x0``, with ``f`` sampled along it."""
    arith = _Arith(dps)
    with mpmath.workdps(dps or mpmath.mp.dps):
        return _simulate(sys, u, t_end, steps, arith)


@dataclass
class IteratedIntegralTable:
    values: Dict[Word, np.ndarray]
    grid: np.ndarray
    depth: int

    def __getitem__(self, w) -> np.ndarray:
        return self.values[tuple(w)]


def suffix_closure(words) -> List[Word]:
    """The words together with all their suffixes, by (length, lex)."""
    out = {EMPTY}
    for w in words:
        w = tuple(w)
        for k in range(len(w)):
            out.add(w[k:])
    return sorted(out, key=lambda w: (len(w), w))


def _iterated_integrals(u: ControlSignals, D: int, t_end, steps: int, arith: _Arith, words=None) -> IteratedIntegralTable:
    if D < 1:
        raise ValueError("depth must be at least 1")
    # the system is triangular: each integral only needs its suffixes
    words = list(Alphabet(u.M).words(D)) if words is None else suffix_closure(words)
    index = {w: k for k, w in enumerate(words)}
    first = np.array([w[0] - 1 for w in words[1:]], dtype=int)
    tail = np.array([index[w[1:]] for w in words[1:]], dtype=int)

    def rhs(t, y):
        d = y * 0
        if len(first):
            d[1:] = u.at(t, arith)[first] * y[tail]
        return d

    y0 = arith.array(arith.num(1 if k == 0 else 0) for k in range(len(words)))
    ts, ys = _rk4(rhs, y0, t_end, steps, arith)
    return IteratedIntegralTable({w: ys[:, k] for w, k in index.items()}, ts, D)


def iterated_integrals(
    u: ControlSignals, D: int, t_end: float, steps: int, dps: Optional[int] = None, words=None
) -> IteratedIntegralTable:
    """Iterated integrals of all words of length <= D over ``1..u.M``.

    With ``words`` given, only those words and their suffixes are integrated.
    """
    if words is not None and any(len(w) > D for w in words):
        raise ValueError("requested word longer than the table depth")
    with mpmath.workdps(dps or mpmath.mp.dps):
        return _iterated_integrals(u, D, t_end, steps, _Arith(dps), words)


def series_output(p: Series, table: IteratedIntegralTable, t_index=None):
    """``sum c_w I_w(t)`` (``I_w`` the iterated integral of ``w``) over words of length <= min(p.degree, table.depth).

    With ``t_index=None`` the whole time course is returned.
    """
    depth = min(p.degree, table.depth)
    arith = _Arith(None if table.grid.dtype == float else mpmath.mp.dps)
    total = table.grid * 0
    for w, c in p.items():
        if len(w) <= depth:
            if w not in table.values:
                raise ValueError(f"table lacks the iterated integral of {w}")
            total = total + arith.num(c) * table.values[w]
    return total if t_index is None else total[t_index]


def verify_shuffle_identity(table: IteratedIntegralTable, left: Word, right: Word) -> float:
    """Max over the grid of |I(left) I(right) - sum of I(w) over the shuffles w of left and right|."""
    left, right = tuple(left), tuple(right)
    if len(left) + len(right) > table.depth:
        raise ValueError("shuffle words exceed the table depth")
    rhs = table.grid * 0
    for w, k in shuffle_counts(left, right).items():
        rhs = rhs + k * table.values[w]
    return float(max(abs(v) for v in table.values[left] * table.values[right] - rhs))


@dataclass
class ComparisonReport:
    """Series-vs-simulation discrepancy at ``t_end`` and at ``t_end/2, t_end/4``.

    ``order`` is the least-squares slope of ``log error`` against ``log t``
    over the points whose error is above ``noise_floor``; it is None when
    fewer than two points qualify (the truncation remainder is not
    observable at the working precision there). ``dps`` is None for float64.
    """

    D: int
    t_end: float
    steps: int
    times: List[float]
    errors: List[float]
    max_error: float
    noise_floor: float
    order: Optional[float]
    trajectory: Trajectory = field(repr=False)
    series: np.ndarray = field(repr=False)
    dps: Optional[int] = None

    @property
    def error(self) -> float:
        return self.errors[0]


def _errors_at(sys, p, u, D, t_end, steps, arith):
    traj = _simulate(sys, u, t_end, steps, arith)
    table = _iterated_integrals(u, max(D, 1), t_end, steps, arith, words=[w for w, _ in p.items()])
    s = series_output(p, table)
    return traj, s, abs(traj.f - s)


def compare_series_vs_simulation(
    sys: System,
    u: ControlSignals,
    D: int,
    t_end: float,
    steps: int,
    noise_floor: Optional[float] = None,
    dps: Optional[int] = None,
) -> ComparisonReport:
    p = generating_series(sys, D)
    u.check_bounded(t_end, steps)
    arith = _Arith(dps)
    with mpmath.workdps(dps or mpmath.mp.dps):
        times = [arith.num(t_end)]
        times += [times[0] / 2, times[0] / 4]
        traj, s, err = _errors_at(sys, p, u, D, times[0], steps, arith)
        errors = [float(err[-1])]
        for t in times[1:]:
            errors.append(float(_errors_at(sys, p, u, D, t, steps, arith)[2][-1]))
        if noise_floor is None:
            scale = max(1.0, max(abs(float(v)) for v in traj.f))
            # random-walk rounding estimate for `steps` RK4 updates
            noise_floor = math.sqrt(steps) * arith.eps() * scale
    times = [float(t) for t in times]
    pts = [(math.log(t), math.log(e)) for t, e in zip(times, errors) if e > noise_floor]
    order = None
    if len(pts) >= 2:
        xs, ys = zip(*pts)
        order = float(np.polyfit(xs, ys, 1)[0])
    as_float = lambda a: np.asarray(a, dtype=float)
    traj = Trajectory(as_float(traj.t), as_float(traj.x), as_float(traj.f))
    return ComparisonReport(
        D, float(t_end), steps, times, errors, float(max(err)), noise_floor, order, traj, as_float(s), dps
    )


# -- exact iterated integrals for polynomial controls ---------------------------


def _poly_mul(a: List[Fraction], b: List[Fraction]) -> List[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_integrate(a: List[Fraction]) -> List[Fraction]:
    return [Fraction(0)] + [c / (k + 1) for k, c in enumerate(a)]


class ExactIteratedIntegrals:
    """Iterated integrals as exact polynomials in ``t`` (coefficient lists, lowest power first).

    Only polynomial controls are supported; entries are built lazily.
    """

    def __init__(self, controls: Sequence[str]):
        self.controls = []
        for spec in controls:
            s = {"one": "1", "zero": "0", "ramp": "t"}.get(spec.strip(), spec)
            poly = parse_multipoly(s, ["t"])
            deg = poly.total_degree
            self.controls.append([poly.terms.get((k,), Fraction(0)) for k in range(deg + 1)])
        self._cache: Dict[Word, List[Fraction]] = {EMPTY: [Fraction(1)]}

    def __getitem__(self, w) -> List[Fraction]:
        w = tuple(w)
        if w not in self._cache:
            self._cache[w] = _poly_integrate(_poly_mul(self.controls[w[0] - 1], self[w[1:]]))
        return self._cache[w]


def exact_remainder(sys: System, controls: Sequence[str], D: int, K: Optional[int] = None):
    """Exact tail ``sum_{D < |w| <= K} c_w I_w(t)`` as a coefficient list in ``t``.

    Powers above ``K`` are dropped: words longer than ``K`` only contribute
    there, so the returned polynomial is the exact remainder through ``t^K``.
    Returns ``(coefficients, lowest nonzero power or None)``.
    """
    if K is None:
        K = 2 * D
    p = generating_series(sys, K)
    integrals = ExactIteratedIntegrals(controls)
    total = [Fraction(0)] * (K + 1)
    for w, c in p.items():
        if len(w) > D:
            for k, a in enumerate(integrals[w][: K + 1]):
                total[k] += c * a
    lowest = next((k for k, a in enumerate(total) if a), None)
    return total, lowest
