"""Seeded random systems and problems shared by the test modules."""
import random
from fractions import Fraction

from bmsgame.geometry import HPolytope, box
from bmsgame.model import POLYTOPE, VERTICES_ONLY, Mode, Problem, System


def rand_rat(rng, lo=-5, hi=5, dens=(1, 2, 3)):
    d = rng.choice(dens)
    return Fraction(rng.randint(lo * d, hi * d), d)


def random_system_2d(rng, max_modes=4, max_verts=4):
    """Random planar system; half of them have modes fanned around the circle."""
    k = rng.randint(1, max_modes)
    spread = rng.random() < 0.5
    modes = []
    for i in range(k):
        nv = rng.randint(1, max_verts)
        if spread:
            base = _FAN[(8 * i // k + rng.randint(0, 1)) % 8]
            verts = tuple(tuple(min(5, max(-5, b + rand_rat(rng, -1, 1))) for b in base)
                          for _ in range(nv))
        else:
            verts = tuple((rand_rat(rng), rand_rat(rng)) for _ in range(nv))
        modes.append(Mode(f"m{i + 1}", verts))
    return System(2, tuple(modes))


_FAN = [(4, 0), (3, 3), (0, 4), (-3, 3), (-4, 0), (-3, -3), (0, -4), (3, -3)]


def random_system(rng, n, max_modes=3, max_verts=3, lo=-2, hi=2, semantics=POLYTOPE):
    k = rng.randint(1, max_modes)
    modes = []
    for i in range(k):
        verts = []
        for _ in range(rng.randint(1, max_verts)):
            verts.append(tuple(Fraction(rng.randint(lo, hi)) for _ in range(n)))
        modes.append(Mode(f"m{i + 1}", tuple(verts)))
    if k < max_modes and rng.random() < 0.4:
        # a negated copy of one mode makes safe systems common
        src = rng.choice(modes)
        modes.append(Mode(f"m{k + 1}", tuple(tuple(-x for x in r) for r in src.rate_vertices)))
    return System(n, tuple(modes), semantics)


def random_safety(rng, n):
    lower = [Fraction(rng.randint(-3, -1)) for _ in range(n)]
    upper = [Fraction(rng.randint(1, 3)) for _ in range(n)]
    S = box(lower, upper)
    if n >= 2 and rng.random() < 0.3:
        # cut one corner with a diagonal row
        row = tuple(Fraction(1) for _ in range(n))
        S = HPolytope(S.A + (row,), S.b + (sum(upper) - 1,))
    return S, lower, upper


def random_start(rng, S, lower, upper):
    n = len(lower)
    while True:
        x = []
        for i in range(n):
            u = rng.random()
            if u < 0.2:
                x.append(lower[i])
            elif u < 0.4:
                x.append(upper[i])
            else:
                x.append(Fraction(rng.randint(int(lower[i]) * 2 + 1, int(upper[i]) * 2 - 1), 2))
        x = tuple(x)
        if all(sum(a * v for a, v in zip(row, x)) <= b for row, b in zip(S.A, S.b)):
            return x


def random_problem(rng, n=None, semantics=POLYTOPE):
    n = n or rng.randint(1, 3)
    sys = random_system(rng, n, semantics=semantics)
    S, lower, upper = random_safety(rng, n)
    return Problem(sys, S, random_start(rng, S, lower, upper))


def problems(count, seed=0):
    rng = random.Random(seed)
    return [random_problem(rng) for _ in range(count)]


def systems_2d(count, seed=0):
    rng = random.Random(seed)
    return [random_system_2d(rng) for _ in range(count)]
