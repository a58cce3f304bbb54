"""Safety decision kernels and environment certificates.

A system is safe (the scheduler wins from interior starts) iff every
extreme-rate instance admits dwell fractions ``t >= 0, sum t = 1`` with
``sum t_m r_m = 0``.  When that fails for an instance, a separating vector
``v`` with ``v . r_m > 0`` for every chosen rate is returned instead.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import lp as _lp
from .geometry import (RateClass, classify_rate, dot, face_of, in_hull,
                       is_zero, scale, add)
from .model import (POLYTOPE, System, enumerate_instances, instance_rates,
                    vec_to_json)

__all__ = [
    "Safe", "Unsafe", "Falsifier", "FalsifierError",
    "cms_safe", "bms_safe", "bms_safe_2d", "verify_falsifier",
    "verify_verdict", "static_schedulable", "push_vector",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class Safe:
    """Every checked instance, mapped to its dwell-fraction vector."""

    witnesses: dict = field(default_factory=dict)
    safe: bool = field(default=True, init=False)

    @property
    def witness(self):
        """The single witness of a constant-rate check."""
        return next(iter(self.witnesses.values())) if self.witnesses else None

    def to_dict(self, sys: Optional[System] = None) -> dict:
        out = {"safe": True, "witnesses": []}
        for inst, t in self.witnesses.items():
            out["witnesses"].append({"instance": list(inst), "dwell": vec_to_json(t)})
        return out


@dataclass(frozen=True)
class Unsafe:
    instance: tuple
    rates: tuple
    push: tuple
    perpendicular: Optional[tuple] = None  # (r_perp, u) when found by the 2-D test
    safe: bool = field(default=False, init=False)

    def to_dict(self, sys: Optional[System] = None) -> dict:
        out = {"safe": False, "instance": list(self.instance),
               "rates": [vec_to_json(r) for r in self.rates],
               "push": vec_to_json(self.push)}
        if sys is not None:
            out["modes"] = sys.names
        if self.perpendicular is not None:
            out["r_perp"] = vec_to_json(self.perpendicular[0])
            out["u"] = vec_to_json(self.perpendicular[1])
        return out


def _normalize(v) -> tuple:
    m = max(abs(x) for x in v)
    return tuple(x / m for x in v) if m else tuple(v)


def push_vector(rates) -> Optional[tuple]:
    """A ``v`` with ``v . r >= 1`` for all rates, least in L1, scaled to max-norm 1.

    Returns None when no such vector exists.
    """
    n = len(rates[0])
    # v = p - q with p, q >= 0 ; -(p - q).r <= -1 ; maximize -(sum p + sum q)
    rows = [tuple(-x for x in r) + tuple(r) for r in rates]
    obj = (-_ONE,) * (2 * n)
    out = _lp.solve(_lp.LinearProgram.build(2 * n, obj, ineq=(rows, (-_ONE,) * len(rates)),
                                            nonneg=True))
    if not isinstance(out, _lp.Optimal):
        return None
    p = out.point
    return _normalize(tuple(p[i] - p[n + i] for i in range(n)))


def _eq1(rates):
    n, k = len(rates[0]), len(rates)
    rows = [tuple(r[i] for r in rates) for i in range(n)]
    rows.append((_ONE,) * k)
    rhs = (_ZERO,) * n + (_ONE,)
    return _lp.solve(_lp.LinearProgram.build(k, None, eq=(rows, rhs), nonneg=True))


def cms_safe(rates, instance=None):
    """Decide a constant-rate system given as one rate per mode."""
    rates = [tuple(Fraction(x) for x in r) for r in rates]
    if not rates:
        raise ValueError("cms_safe needs at least one rate")
    inst = tuple(instance) if instance is not None else (0,) * len(rates)
    out = _eq1(rates)
    if isinstance(out, _lp.Feasible):
        return Safe({inst: out.point})
    push = push_vector(rates)
    assert push is not None, "separation must exist when the dwell system is infeasible"
    return Unsafe(inst, tuple(rates), push)


def _check_chunk(args):
    sys, insts = args
    witnesses, failed = {}, None
    for inst in insts:
        v = cms_safe(instance_rates(sys, inst), inst)
        if not v.safe:
            failed = v
            break
        witnesses.update(v.witnesses)
    return witnesses, failed


def bms_safe(sys: System, jobs: int = 1):
    """Check every extreme-rate instance; stop at the first unsafe one.

    Instances are visited in reverse lexicographic order of vertex indices,
    so the reported counterexample is the lexicographically largest failing
    instance.  With ``jobs > 1`` instances are checked in parallel and the
    same instance is selected by taking the maximum over failures.
    """
    insts = list(enumerate_instances(sys, reverse=True))
    if jobs <= 1 or len(insts) < 2 * jobs:
        witnesses, failed = _check_chunk((sys, insts))
        return failed if failed is not None else Safe(dict(sorted(witnesses.items())))
    size = -(-len(insts) // jobs)
    chunks = [(sys, insts[i:i + size]) for i in range(0, len(insts), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_check_chunk, chunks))
    failures = [f for _, f in results if f is not None]
    if failures:
        return max(failures, key=lambda f: f.instance)
    witnesses = {}
    for w, _ in results:
        witnesses.update(w)
    return Safe(dict(sorted(witnesses.items())))


def _perp_witness(sys: System, r_perp, u):
    """Per-mode vertex choice for a candidate perpendicular, or None."""
    inst = []
    for m in sys.modes:
        pick = None
        for i, r in enumerate(m.rate_vertices):
            ur = dot(u, r)
            if ur > 0 or (ur == 0 and dot(r, r_perp) > 0):
                pick = i
                break
        if pick is None:
            return None
        inst.append(pick)
    return tuple(inst)


def bms_safe_2d(sys: System):
    """Polynomial safety test for planar systems.

    The system is unsafe iff for some nonzero extreme rate ``r_perp`` and one
    of its two perpendiculars ``u`` every mode has a vertex strictly on the
    ``u`` side, or on the ray through ``r_perp``.  The separating vector is
    ``u`` tilted slightly towards ``r_perp``.
    """
    if sys.n != 2:
        raise ValueError(f"bms_safe_2d needs a 2-D system, got n={sys.n}")
    for r_perp in sys.extreme_rates():
        if is_zero(r_perp):
            continue
        for u in ((-r_perp[1], r_perp[0]), (r_perp[1], -r_perp[0])):
            inst = _perp_witness(sys, r_perp, u)
            if inst is None:
                continue
            rates = tuple(instance_rates(sys, inst))
            pos = [dot(u, r) for r in rates if dot(u, r) > 0]
            if pos:
                tau = min(pos)
                kappa = min(dot(r_perp, r) for r in rates)
                v = add(u, scale(tau / (2 * (abs(kappa) + 1)), r_perp))
            else:
                v = tuple(r_perp)
            return Unsafe(inst, rates, _normalize(v), (tuple(r_perp), u))
    return Safe({})


def verify_verdict(sys: System, verdict) -> bool:
    """Exact re-check of a verdict's witnesses or separating vector."""
    if verdict.safe:
        for inst, t in verdict.witnesses.items():
            rates = instance_rates(sys, inst)
            if any(x < 0 for x in t) or sum(t) != 1:
                return False
            total = [sum(ti * r[i] for ti, r in zip(t, rates)) for i in range(sys.n)]
            if any(total):
                return False
        return True
    rates = instance_rates(sys, verdict.instance)
    return list(rates) == list(verdict.rates) and all(dot(verdict.push, r) > 0 for r in rates)


# --------------------------------------------------------------------------
# falsifiers

class FalsifierError(ValueError):
    pass


@dataclass(frozen=True)
class Falsifier:
    """Environment certificate on a face of the safety set.

    ``external`` maps mode names to a rate leaving the set through ``face``;
    ``pushed`` maps every other mode to a tangent rate with positive progress
    along ``push``.
    """

    face: frozenset
    external: dict
    pushed: dict
    push: tuple

    def to_dict(self) -> dict:
        return {
            "face": sorted(self.face),
            "external": {k: vec_to_json(v) for k, v in self.external.items()},
            "pushed": {k: vec_to_json(v) for k, v in self.pushed.items()},
            "push": vec_to_json(self.push),
        }

    @classmethod
    def from_dict(cls, doc) -> "Falsifier":
        from .geometry import vector
        return cls(frozenset(doc["face"]),
                   {k: vector(v) for k, v in doc["external"].items()},
                   {k: vector(v) for k, v in doc["pushed"].items()},
                   vector(doc["push"]))


def _rate_allowed(sys: System, mode, r) -> bool:
    if r in mode.rate_vertices:
        return True
    return sys.semantics == POLYTOPE and in_hull(mode.rate_vertices, r)


def verify_falsifier(prob, f: Falsifier) -> bool:
    """Re-check every condition of an environment certificate."""
    sys, S = prob.system, prob.safety
    names = set(sys.names)
    unknown = (set(f.external) | set(f.pushed)) - names
    if unknown:
        raise FalsifierError(f"unknown modes: {sorted(unknown)}")
    if set(f.external) & set(f.pushed) or set(f.external) | set(f.pushed) != names:
        return False
    if not all(0 <= j < S.rows for j in f.face):
        return False
    if not f.face <= face_of(S, prob.start):
        return False
    for name, r in f.external.items():
        if not _rate_allowed(sys, sys.mode(name), r):
            return False
        if classify_rate(S, f.face, r) is not RateClass.EXTERNAL:
            return False
    for name, r in f.pushed.items():
        if not _rate_allowed(sys, sys.mode(name), r):
            return False
        if classify_rate(S, f.face, r) is not RateClass.TANGENT:
            return False
        if dot(f.push, r) <= 0:
            return False
    return True


# --------------------------------------------------------------------------
# static strategies

def static_schedulable(sys: System) -> Optional[dict]:
    """Dwell fractions of a fixed cyclic schedule over the single-rate modes.

    Modes with several rate vertices get weight zero.  None when no single-rate
    mode exists or their rates cannot cancel out.
    """
    singles = [m for m in sys.modes if m.is_constant]
    if not singles:
        return None
    v = cms_safe([m.rate_vertices[0] for m in singles])
    if not v.safe:
        return None
    t = dict(zip((m.name for m in singles), v.witness))
    return {m.name: t.get(m.name, _ZERO) for m in sys.modes}

