"""Exact vectors and convex-polytope primitives.

Points, rates and scalars are :class:`fractions.Fraction`; a vector is a
plain tuple of them.  Polytopes come in two flavours: :class:`HPolytope`
(``A x <= b``, used for safety sets) and :class:`VPolytope` (a vertex list,
used for closed polytopes and rate sets).  Row indices of an H-polytope
are 0-based throughout.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from . import lp as _lp

__all__ = [
    "Fraction", "UNBOUNDED", "Unbounded", "GeometryError", "DimensionError",
    "vector", "dot", "add", "sub", "scale", "is_zero", "parse_rational",
    "HPolytope", "VPolytope", "Face", "RateClass",
    "contains", "hull_decompose", "filter_vertices", "exit_time",
    "exit_time_h", "enumerate_faces", "face_of", "classify_rate",
    "zonotope_corners", "zonotope_vertices", "box",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class GeometryError(ValueError):
    pass


class DimensionError(GeometryError):
    pass


@functools.total_ordering
class Unbounded:
    """Sentinel for +infinity in exact comparisons (greater than any number)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("unbounded")

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "unbounded"


UNBOUNDED = Unbounded()


def parse_rational(value) -> Fraction:
    """Parse an int, a decimal string, a ``"p/q"`` string or a Fraction exactly.

    JSON floats are accepted through their shortest repr (so ``0.1`` becomes
    ``1/10``).  Booleans are rejected.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise ValueError(f"not a rational: {value!r}")


def vector(values: Iterable) -> tuple:
    return tuple(parse_rational(v) for v in values)


def dot(a: Sequence, b: Sequence) -> Fraction:
    if len(a) != len(b):
        raise DimensionError(f"dot of vectors of length {len(a)} and {len(b)}")
    s = _ZERO
    for u, v in zip(a, b):
        if u and v:
            s += u * v
    return s


def add(a, b) -> tuple:
    if len(a) != len(b):
        raise DimensionError("add: dimension mismatch")
    return tuple(u + v for u, v in zip(a, b))


def sub(a, b) -> tuple:
    if len(a) != len(b):
        raise DimensionError("sub: dimension mismatch")
    return tuple(u - v for u, v in zip(a, b))


def scale(k, a) -> tuple:
    return tuple(k * u for u in a)


def is_zero(a) -> bool:
    return not any(a)


def fmt_vector(a) -> str:
    return "(" + ", ".join(str(v) for v in a) + ")"


@dataclass(frozen=True)
class HPolytope:
    """The set ``{x : A x <= b}``."""

    A: tuple
    b: tuple

    def __post_init__(self):
        A = tuple(tuple(Fraction(v) for v in row) for row in self.A)
        b = tuple(Fraction(v) for v in self.b)
        if len(A) != len(b):
            raise DimensionError(f"A has {len(A)} rows but b has {len(b)} entries")
        if A and len({len(r) for r in A}) != 1:
            raise DimensionError("rows of A differ in length")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def rows(self) -> int:
        return len(self.A)

    @property
    def dim(self) -> int:
        return len(self.A[0]) if self.A else 0

    def slack(self, x) -> tuple:
        self._check_dim(x)
        return tuple(bj - dot(row, x) for row, bj in zip(self.A, self.b))

    def _check_dim(self, x):
        if len(x) != self.dim:
            raise DimensionError(f"point of dimension {len(x)} in {self.dim}-D polytope")

    def is_bounded(self) -> bool:
        """True iff every coordinate has a finite maximum and minimum."""
        n = self.dim
        for i in range(n):
            for sgn in (1, -1):
                c = [_ZERO] * n
                c[i] = Fraction(sgn)
                out = _lp.solve(_lp.LinearProgram.build(n, c, ineq=(self.A, self.b)))
                if isinstance(out, _lp.Unbounded):
                    return False
        return True

    def is_empty(self) -> bool:
        out = _lp.solve(_lp.LinearProgram.build(self.dim, None, ineq=(self.A, self.b)))
        return isinstance(out, _lp.Infeasible)


@dataclass(frozen=True)
class VPolytope:
    """Convex hull of a nonempty vertex list."""

    vertices: tuple

    def __post_init__(self):
        vs = tuple(tuple(Fraction(v) for v in p) for p in self.vertices)
        if not vs:
            raise GeometryError("VPolytope needs at least one vertex")
        if len({len(v) for v in vs}) != 1:
            raise DimensionError("vertices differ in dimension")
        object.__setattr__(self, "vertices", vs)

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    def __len__(self):
        return len(self.vertices)


def box(lower, upper) -> HPolytope:
    """Axis-aligned box; rows ordered ``-x_0 <= -l_0, x_0 <= u_0, -x_1 ...``."""
    n = len(lower)
    A, b = [], []
    for i in range(n):
        e = [_ZERO] * n
        e[i] = _ONE
        A.append(tuple(-v for v in e))
        b.append(-Fraction(lower[i]))
        A.append(tuple(e))
        b.append(Fraction(upper[i]))
    return HPolytope(tuple(A), tuple(b))


def contains(P: HPolytope, x) -> bool:
    """Exact test of ``A x <= b``."""
    P._check_dim(x)
    return all(dot(row, x) <= bj for row, bj in zip(P.A, P.b))


def hull_decompose(V: VPolytope, x) -> Optional[tuple]:
    """Convex coefficients of ``x`` over ``V.vertices``, or None if outside.

    The coefficients come from an exact feasibility LP with variables in
    vertex order, so the decomposition is deterministic.
    """
    n = V.dim
    if len(x) != n:
        raise DimensionError(f"point of dimension {len(x)} against {n}-D vertices")
    k = len(V.vertices)
    rows = [tuple(v[i] for v in V.vertices) for i in range(n)]
    rows.append((_ONE,) * k)
    rhs = tuple(x) + (_ONE,)
    out = _lp.solve(_lp.LinearProgram.build(k, None, eq=(rows, rhs), nonneg=True))
    if isinstance(out, _lp.Infeasible):
        return None
    return out.point


def in_hull(points, x) -> bool:
    return hull_decompose(VPolytope(tuple(points)), x) is not None


def filter_vertices(points) -> VPolytope:
    """Drop duplicates and every point that is a convex combination of the rest.

    Input order is preserved among the survivors.
    """
    pts = []
    seen = set()
    for p in points:
        p = tuple(Fraction(v) for v in p)
        if p not in seen:
            seen.add(p)
            pts.append(p)
    if not pts:
        raise GeometryError("filter_vertices needs a nonempty list")
    keep = list(pts)
    for p in pts:
        others = [q for q in keep if q != p]
        if others and in_hull(others, p):
            keep = others
    return VPolytope(tuple(keep))


def exit_time(P: VPolytope, c, r):
    """Largest ``t >= 0`` with ``c + t r`` in ``P``; UNBOUNDED when ``r`` is zero."""
    n = P.dim
    if len(c) != n or len(r) != n:
        raise DimensionError("exit_time: dimension mismatch")
    if is_zero(r):
        if hull_decompose(P, c) is None:
            raise GeometryError(f"start point {fmt_vector(c)} is outside the polytope")
        return UNBOUNDED
    k = len(P.vertices)
    # variables: t, lambda_1..lambda_k ;  sum lambda_i v_i - t r = c, sum lambda = 1
    rows = [(-r[i],) + tuple(v[i] for v in P.vertices) for i in range(n)]
    rows.append((_ZERO,) + (_ONE,) * k)
    rhs = tuple(c) + (_ONE,)
    obj = (_ONE,) + (_ZERO,) * k
    out = _lp.solve(_lp.LinearProgram.build(k + 1, obj, eq=(rows, rhs), nonneg=True))
    if isinstance(out, _lp.Infeasible):
        raise GeometryError(f"start point {fmt_vector(c)} is outside the polytope")
    if isinstance(out, _lp.Unbounded):  # impossible for a bounded hull and r != 0
        return UNBOUNDED
    return out.value


def exit_time_h(S: HPolytope, c, r):
    """Largest ``t >= 0`` with ``c + t r`` in ``S`` by per-row min-ratio."""
    S._check_dim(c)
    best = UNBOUNDED
    for row, bj in zip(S.A, S.b):
        ar = dot(row, r)
        if ar > 0:
            t = (bj - dot(row, c)) / ar
            if t < 0:
                raise GeometryError(f"start point {fmt_vector(c)} is outside the safety set")
            if t < best:
                best = t
    return best


@dataclass(frozen=True)
class Face:
    tight: frozenset
    witness: tuple

    def key(self):
        return face_key(self.tight)


def face_key(tight) -> tuple:
    return (len(tight), tuple(sorted(tight)))


def _face_witness(S: HPolytope, tight) -> Optional[tuple]:
    """Relative-interior witness of ``facet(S, tight)`` via slack maximization.

    Variables ``(x, s)``; ``A_I x == b_I``, ``A_j x + s <= b_j`` off ``I``,
    ``s <= 1``; maximize ``s``.  Live iff the optimum is positive.
    """
    n = S.dim
    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
    for j, (row, bj) in enumerate(zip(S.A, S.b)):
        if j in tight:
            eq_rows.append(row + (_ZERO,))
            eq_rhs.append(bj)
        else:
            ub_rows.append(row + (_ONE,))
            ub_rhs.append(bj)
    ub_rows.append((_ZERO,) * n + (_ONE,))
    ub_rhs.append(_ONE)
    obj = (_ZERO,) * n + (_ONE,)
    out = _lp.solve(_lp.LinearProgram.build(
        n + 1, obj, eq=(eq_rows, eq_rhs), ineq=(ub_rows, ub_rhs)))
    if not isinstance(out, _lp.Optimal) or out.value <= 0:
        return None
    return out.point[:n]


def enumerate_faces(S: HPolytope, within=None) -> list:
    """All live faces of ``S`` ordered by cardinality, then lexicographically.

    ``within`` restricts the enumeration to subsets of the given row set
    (useful when only the faces below one start point matter).
    """
    if S.is_empty():
        raise GeometryError("safety set is empty")
    universe = sorted(range(S.rows) if within is None else within)
    faces = []
    dead = []  # tight sets whose equality system is already infeasible
    for k in range(len(universe) + 1):
        for combo in combinations(universe, k):
            tight = frozenset(combo)
            if any(d <= tight for d in dead):
                continue
            w = _face_witness(S, tight)
            if w is None:
                if _equalities_infeasible(S, tight):
                    dead.append(tight)
                continue
            faces.append(Face(tight, w))
    return faces


def _equalities_infeasible(S: HPolytope, tight) -> bool:
    eq_rows = [S.A[j] for j in sorted(tight)]
    eq_rhs = [S.b[j] for j in sorted(tight)]
    out = _lp.solve(_lp.LinearProgram.build(S.dim, None, eq=(eq_rows, eq_rhs),
                                           ineq=(S.A, S.b)))
    return isinstance(out, _lp.Infeasible)


def face_of(S: HPolytope, x) -> frozenset:
    """The tight-row set ``{j : A_j x == b_j}`` of a point of ``S``."""
    slack = S.slack(x)
    if any(s < 0 for s in slack):
        raise GeometryError(f"point {fmt_vector(x)} is outside the safety set")
    return frozenset(j for j, s in enumerate(slack) if s == 0)


class RateClass(enum.Enum):
    EXTERNAL = "external"
    INTERNAL = "internal"
    TANGENT = "tangent"


def classify_rate(S: HPolytope, tight, r) -> RateClass:
    """External / Internal / Tangent classification of ``r`` on a face."""
    strict = False
    for j in tight:
        ar = dot(S.A[j], r)
        if ar > 0:
            return RateClass.EXTERNAL
        if ar < 0:
            strict = True
    return RateClass.INTERNAL if strict else RateClass.TANGENT


def zonotope_corners(origin, generators, D) -> list:
    """All ``2^N`` points ``origin + D * sum_{i in T} g_i`` in bitmask order of ``T``."""
    N = len(generators)
    out = []
    for mask in range(1 << N):
        p = tuple(origin)
        for i in range(N):
            if mask >> i & 1:
                p = add(p, scale(D, generators[i]))
        out.append(p)
    return out


def _sign_separable(gens, members) -> bool:
    """Is there ``v`` with ``v.g >= 1`` on ``members`` and ``v.g <= -1`` elsewhere?"""
    n = len(gens[0])
    rows, rhs = [], []
    for i, g in enumerate(gens):
        if i in members:
            rows.append(tuple(-x for x in g))
        else:
            rows.append(g)
        rhs.append(-_ONE)
    out = _lp.solve(_lp.LinearProgram.build(n, None, ineq=(rows, rhs)))
    return not isinstance(out, _lp.Infeasible)


def zonotope_vertices(origin, generators, D) -> VPolytope:
    """Vertices of ``{origin + D * sum p_i g_i : p in [0,1]^N}``.

    Same answer as ``filter_vertices(zonotope_corners(...))`` but built
    incrementally: a corner with membership set ``T`` is a vertex iff some
    ``v`` is strictly positive on ``T`` and strictly negative on the other
    (nonzero) generators, and the vertices of a Minkowski sum only come from
    sums of vertices.  Output follows the bitmask order of ``T``.
    """
    gens = []
    for g in generators:
        g = tuple(Fraction(v) for v in g)
        if not is_zero(g) and g not in gens:
            gens.append(g)
    if not gens:
        return VPolytope((tuple(origin),))
    # masks are over positions in `gens`; map back to original index order later
    masks = [0]
    for k in range(len(gens)):
        prefix = gens[: k + 1]
        cand = []
        for m in masks:
            cand.append(m)
            cand.append(m | (1 << k))
        masks = [m for m in cand
                 if _sign_separable(prefix, {i for i in range(k + 1) if m >> i & 1})]
    masks.sort()
    verts = []
    for m in masks:
        p = tuple(origin)
        for i, g in enumerate(gens):
            if m >> i & 1:
                p = add(p, scale(D, g))
        verts.append(p)
    return VPolytope(tuple(verts))
