"""Random instance generators shared by several test modules."""

import itertools
import random
from fractions import Fraction

from hopfreal.diffops import Derivation, MultiPoly, System


def random_poly(rng: random.Random, nvars: int, degree: int, density: float = 0.6) -> MultiPoly:
    terms = {}
    for e in itertools.product(range(degree + 1), repeat=nvars):
        if sum(e) <= degree and rng.random() < density:
            terms[e] = Fraction(rng.randint(-3, 3), rng.choice([1, 1, 2, 3]))
    return MultiPoly(terms, nvars)


def random_system(rng: random.Random, N: int = 2, M: int = 2, degree: int = 2) -> System:
    ders = tuple(Derivation(tuple(random_poly(rng, N, degree) for _ in range(N))) for _ in range(M))
    x0 = tuple(Fraction(rng.randint(-2, 2), rng.choice([1, 2])) for _ in range(N))
    return System(ders, random_poly(rng, N, degree), x0)
