"""Scheduler certificates: closed polytopes, face analysis and online strategy.

A closed polytope is a zonotope ``x0 + D * sum p_i g_i`` spanned by all
extreme rates ``g_i``.  Each vertex carries a plan (mode, dwell) such that
every rate of the mode keeps the vertex inside for the whole dwell; any
interior point then follows the vertex with the largest weighted dwell.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .geometry import (UNBOUNDED, HPolytope, RateClass, VPolytope, add,
                       classify_rate, contains, dot, enumerate_faces,
                       exit_time, exit_time_h, face_of, hull_decompose,
                       is_zero, parse_rational, scale, sub, vector,
                       zonotope_vertices)
from .model import Mode, Problem, System, system_to_dict, vec_to_json
from .safety import Falsifier, bms_safe

__all__ = [
    "SynthesisError", "StartOnExcludedBoundary", "StrategyError",
    "VertexPlan", "ClosedPolytope", "FaceStatus", "FaceReport",
    "StrategyState", "SchedulerWins", "EnvironmentWins",
    "corner_scale", "build_closed_polytope", "verify_closed",
    "anchor_polytope", "dynamic_step", "analyze_faces", "decide",
    "closed_from_dict",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)
HALF = Fraction(1, 2)


class SynthesisError(ValueError):
    pass


class StartOnExcludedBoundary(SynthesisError):
    code = "StartOnExcludedBoundary"


class StrategyError(RuntimeError):
    pass


class OutsideActive(StrategyError):
    pass


@dataclass(frozen=True)
class VertexPlan:
    mode: str
    dwell: Fraction


@dataclass(frozen=True)
class ClosedPolytope:
    """Vertices with aligned plans; ``exits[i][k]`` is the uncapped dwell of mode k."""

    origin: tuple
    polytope: VPolytope
    plans: tuple
    system: System
    exits: tuple = field(repr=False, compare=False, default=())

    @property
    def vertices(self):
        return self.polytope.vertices

    def plan(self, c) -> VertexPlan:
        return self.plans[self.vertices.index(tuple(c))]

    @property
    def min_dwell(self):
        return min(p.dwell for p in self.plans)

    @property
    def dwell_bound(self):
        """Guaranteed lower bound on every emitted step duration."""
        return self.min_dwell / len(self.plans)

    def to_dict(self) -> dict:
        return {
            "origin": vec_to_json(self.origin),
            "vertices": [vec_to_json(c) for c in self.vertices],
            "plans": [{"mode": p.mode, "dwell": str(p.dwell)} for p in self.plans],
            "system": system_to_dict(self.system),
            "dwell_bound": str(self.dwell_bound),
        }


def closed_from_dict(doc) -> ClosedPolytope:
    sysd = doc["system"]
    sys = System(sysd["n"], tuple(Mode(m["name"], tuple(vector(r) for r in m["rates"]))
                                  for m in sysd["modes"]), sysd["semantics"])
    plans = tuple(VertexPlan(p["mode"], parse_rational(p["dwell"])) for p in doc["plans"])
    return ClosedPolytope(vector(doc["origin"]),
                          VPolytope(tuple(vector(c) for c in doc["vertices"])), plans, sys)


def _min(values):
    best = UNBOUNDED
    for v in values:
        if v < best:
            best = v
    return best


def _choose(exits_row, modes, caps):
    """Argmax over modes of the capped dwell; first mode wins ties."""
    best, best_mode = None, None
    for m, d in zip(modes, exits_row):
        d = min(d, caps.get(m.name, UNBOUNDED))
        if best is None or d > best:
            best, best_mode = d, m.name
    if best is UNBOUNDED:
        best = _ONE
    if best <= 0:
        raise SynthesisError("no mode keeps a vertex inside the polytope")
    return VertexPlan(best_mode, best)


def _internal_caps(S, c, internal):
    """Half the time before each internal rate leaves ``S`` from ``c``, per mode."""
    caps = {}
    for name, rates in (internal or {}).items():
        t = _min(exit_time_h(S, c, r) for r in rates)
        if t is not UNBOUNDED:
            caps[name] = t * HALF
    return caps


def _make_plans(P: VPolytope, sys: System, S=None, internal=None):
    exits, plans = [], []
    for c in P.vertices:
        row = tuple(_min(exit_time(P, c, r) for r in m.rate_vertices) for m in sys.modes)
        exits.append(row)
        caps = _internal_caps(S, c, internal) if S is not None else {}
        plans.append(_choose(row, sys.modes, caps))
    return tuple(plans), tuple(exits)


def corner_scale(S: HPolytope, x0, generators, exclude=frozenset()):
    """Largest ``D`` with every corner ``x0 + D * sum_T g`` inside ``S``.

    Per row the worst corner adds up the positive parts of ``A_j . g``, so the
    subset sweep collapses to one ratio per row.  Rows in ``exclude`` are
    skipped; UNBOUNDED when no row restricts.
    """
    best = UNBOUNDED
    for j, (row, bj) in enumerate(zip(S.A, S.b)):
        if j in exclude:
            continue
        den = sum((max(_ZERO, dot(row, g)) for g in generators), _ZERO)
        if den > 0:
            ratio = (bj - dot(row, x0)) / den
            if ratio < best:
                best = ratio
    return best


def _check_margin(margin):
    margin = parse_rational(margin)
    if not 0 < margin <= 1:
        raise SynthesisError(f"margin must lie in (0, 1], got {margin}")
    return margin


def build_closed_polytope(sys: System, x0, S: HPolytope, tangent_rows=frozenset(),
                          margin=HALF, D=None, verdict=None, internal=None):
    """Closed polytope for ``sys`` around ``x0``, or None when ``sys`` is unsafe.

    ``D`` defaults to ``margin`` times the largest scale keeping every corner
    in ``S``.  ``internal`` maps mode names to extra rates that must stay in
    ``S`` (not in the polytope) for the planned dwell; those dwells are capped
    at half their exit time from ``S``.
    """
    margin = _check_margin(margin)
    x0 = vector(x0)
    tangent_rows = frozenset(tangent_rows)
    if not face_of(S, x0) <= tangent_rows:
        raise StartOnExcludedBoundary(
            "start lies on a row outside the tangent rows; the polytope would be flat")
    for m in sys.modes:
        for r in m.rate_vertices:
            if classify_rate(S, tangent_rows, r) is not RateClass.TANGENT:
                raise SynthesisError(f"rate of mode {m.name!r} is not tangent on the face")
    if verdict is None:
        verdict = bms_safe(sys)
    if not verdict.safe:
        return None
    gens = [g for g in sys.extreme_rates() if not is_zero(g)]
    limit = corner_scale(S, x0, gens, tangent_rows)
    if D is None:
        D = _ONE if limit is UNBOUNDED else margin * limit
    else:
        D = parse_rational(D)
        if D <= 0 or D > limit:
            raise SynthesisError(f"scale {D} puts corners outside the safety set")
    P = zonotope_vertices(x0, gens, D)
    plans, exits = _make_plans(P, sys, S, internal)
    return ClosedPolytope(x0, P, plans, sys, exits)


def verify_closed(sys: System, cp: ClosedPolytope, safety: Optional[HPolytope] = None) -> bool:
    """Re-check every vertex plan by membership of ``c + dwell * r``.

    With ``safety`` given, also require every vertex to lie in it.
    """
    P = cp.polytope
    if len(cp.plans) != len(P.vertices):
        return False
    for c, plan in zip(P.vertices, cp.plans):
        if plan.dwell <= 0:
            return False
        try:
            mode = sys.mode(plan.mode)
        except KeyError:
            return False
        for r in mode.rate_vertices:
            if hull_decompose(P, add(c, scale(plan.dwell, r))) is None:
                return False
    if safety is not None:
        return all(contains(safety, c) for c in P.vertices)
    return True


def anchor_polytope(cp: ClosedPolytope, x, S: HPolytope, margin=HALF, internal=None):
    """Translate ``cp`` to ``x`` and rescale it to fit in ``S`` with a margin."""
    margin = _check_margin(margin)
    x = vector(x)
    offsets = [sub(c, cp.origin) for c in cp.vertices]
    best = UNBOUNDED
    for row, bj in zip(S.A, S.b):
        slack = bj - dot(row, x)
        for d in offsets:
            ad = dot(row, d)
            if ad > 0:
                ratio = slack / ad
                if ratio < best:
                    best = ratio
    if best is not UNBOUNDED and best <= 0:
        raise StrategyError("polytope cannot be placed at a point on a crossing row")
    s = _ONE if best is UNBOUNDED else margin * best
    P = VPolytope(tuple(add(x, scale(s, d)) for d in offsets))
    exits = tuple(tuple(e if e is UNBOUNDED else s * e for e in row) for row in cp.exits)
    plans = tuple(_choose(row, cp.system.modes, _internal_caps(S, c, internal))
                  for c, row in zip(P.vertices, exits))
    return ClosedPolytope(x, P, plans, cp.system, exits)


# --------------------------------------------------------------------------
# face analysis

@dataclass(frozen=True)
class FaceStatus:
    face: frozenset
    schedulable: bool
    witness: tuple
    closed: Optional[ClosedPolytope] = None
    via: Optional[str] = None
    falsifier: Optional[Falsifier] = None
    internal: dict = field(default_factory=dict)
    inherited_from: Optional[frozenset] = None

    @property
    def kind(self) -> str:
        if not self.schedulable:
            return "unschedulable"
        return "polytope" if self.closed is not None else "internal"

    def to_dict(self) -> dict:
        out = {"face": sorted(self.face), "status": self.kind,
               "witness": vec_to_json(self.witness)}
        if self.closed is not None:
            out["closed"] = self.closed.to_dict()
        if self.via is not None:
            out["via"] = self.via
        if self.falsifier is not None:
            out["falsifier"] = self.falsifier.to_dict()
        if self.inherited_from is not None:
            out["inherited_from"] = sorted(self.inherited_from)
        return out


class FaceReport(dict):
    """Face (frozenset of tight rows) to FaceStatus, in analysis order."""

    def unschedulable(self):
        return [I for I, st in self.items() if not st.schedulable]

    def upward_closed(self) -> bool:
        bad = self.unschedulable()
        return all(not self[I].schedulable or not any(J <= I for J in bad) for I in self)

    def to_dict(self) -> dict:
        return {"faces": [st.to_dict() for st in self.values()]}


def _first_vertex(mode, S, I, cls):
    for r in mode.rate_vertices:
        if classify_rate(S, I, r) is cls:
            return r
    return None


def analyze_faces(prob: Problem, within=None, margin=HALF, jobs=1) -> FaceReport:
    """Classify every face (optionally only subsets of ``within``) bottom-up."""
    sys, S = prob.system, prob.safety
    report = FaceReport()
    for face in enumerate_faces(S, within):
        I = face.tight
        bad = next((J for J, st in report.items() if not st.schedulable and J <= I), None)
        if bad is not None:
            report[I] = FaceStatus(I, False, face.witness, falsifier=report[bad].falsifier,
                                   inherited_from=bad)
            continue
        classes = {m.name: [classify_rate(S, I, r) for r in m.rate_vertices] for m in sys.modes}
        usable = [m for m in sys.modes if RateClass.EXTERNAL not in classes[m.name]]
        unusable = [m for m in sys.modes if RateClass.EXTERNAL in classes[m.name]]
        via = next((m.name for m in usable
                    if all(c is RateClass.INTERNAL for c in classes[m.name])), None)
        if via is not None:
            report[I] = FaceStatus(I, True, face.witness, via=via)
            continue
        external = {m.name: _first_vertex(m, S, I, RateClass.EXTERNAL) for m in unusable}
        if not usable:
            f = Falsifier(I, external, {}, (_ZERO,) * sys.n)
            report[I] = FaceStatus(I, False, face.witness, falsifier=f)
            continue
        tangent_modes, internal = [], {}
        for m in usable:
            tang = [r for r, c in zip(m.rate_vertices, classes[m.name]) if c is RateClass.TANGENT]
            inner = [r for r, c in zip(m.rate_vertices, classes[m.name]) if c is RateClass.INTERNAL]
            tangent_modes.append(Mode(m.name, tuple(tang)))
            if inner:
                internal[m.name] = tuple(inner)
        sub_sys = sys.with_modes(tangent_modes)
        verdict = bms_safe(sub_sys, jobs=jobs)
        if not verdict.safe:
            pushed = dict(zip(sub_sys.names, verdict.rates))
            f = Falsifier(I, external, pushed, verdict.push)
            report[I] = FaceStatus(I, False, face.witness, falsifier=f)
            continue
        cp = build_closed_polytope(sub_sys, face.witness, S, I, margin,
                                   verdict=verdict, internal=internal)
        report[I] = FaceStatus(I, True, face.witness, closed=cp, internal=internal)
    return report


# --------------------------------------------------------------------------
# strategy

class StrategyState:
    """Online scheduler: follows the active closed polytope, re-anchoring on face changes."""

    def __init__(self, problem: Problem, report: FaceReport, margin=HALF):
        self.problem = problem
        self.report = report
        self.margin = _check_margin(margin)
        self.active: Optional[ClosedPolytope] = None
        self.face: Optional[frozenset] = None
        self.via: Optional[str] = None
        self.last_bound = None

    def anchor(self, x):
        S = self.problem.safety
        I = face_of(S, x)
        status = self.report.get(I)
        if status is None:
            raise StrategyError(f"face {sorted(I)} was not analyzed")
        if not status.schedulable:
            raise StrategyError(f"face {sorted(I)} is not schedulable")
        self.face = I
        if status.closed is not None:
            self.active = anchor_polytope(status.closed, x, S, self.margin, status.internal)
            self.via = None
        else:
            self.active = None
            self.via = status.via

    def step(self, x):
        """Mode and duration to play from ``x``."""
        x = vector(x)
        if self.active is not None:
            try:
                return dynamic_step(self, x)
            except OutsideActive:
                pass
        self.anchor(x)
        if self.active is not None:
            return dynamic_step(self, x)
        S = self.problem.safety
        rates = self.problem.system.mode(self.via).rate_vertices
        t = _min(exit_time_h(S, x, r) for r in rates)
        duration = _ONE if t is UNBOUNDED else t * HALF
        self.last_bound = duration
        return self.via, duration

    def to_dict(self) -> dict:
        out = {"face": sorted(self.face) if self.face is not None else None}
        if self.active is not None:
            out["active"] = self.active.to_dict()
        if self.via is not None:
            out["via"] = self.via
        return out


def dynamic_step(st: StrategyState, x):
    """Follow the vertex maximizing weight times dwell in the active polytope."""
    cp = st.active
    if cp is None:
        raise OutsideActive("no active polytope")
    lam = hull_decompose(cp.polytope, x)
    if lam is None:
        raise OutsideActive(f"point {x} left the active polytope")
    best, best_val = 0, None
    for i, (l, plan) in enumerate(zip(lam, cp.plans)):
        val = l * plan.dwell
        if best_val is None or val > best_val:
            best, best_val = i, val
    st.last_bound = cp.dwell_bound
    return cp.plans[best].mode, best_val


@dataclass
class SchedulerWins:
    report: FaceReport
    strategy: StrategyState
    winner: str = field(default="scheduler", init=False)

    def to_dict(self) -> dict:
        return {"winner": "scheduler", "start_face": sorted(self.strategy.face),
                "strategy": self.strategy.to_dict(), "report": self.report.to_dict()}


@dataclass
class EnvironmentWins:
    falsifier: Falsifier
    report: FaceReport
    winner: str = field(default="environment", init=False)

    def to_dict(self) -> dict:
        return {"winner": "environment", "falsifier": self.falsifier.to_dict(),
                "report": self.report.to_dict()}


def decide(prob: Problem, margin=HALF, full=False, jobs=1):
    """Winner from the start state, with its certificate.

    Only faces below the start's face are analyzed unless ``full`` is set.
    """
    I0 = face_of(prob.safety, prob.start)
    report = analyze_faces(prob, None if full else I0, margin, jobs)
    status = report[I0]
    if not status.schedulable:
        return EnvironmentWins(status.falsifier, report)
    st = StrategyState(prob, report, margin)
    st.anchor(prob.start)
    return SchedulerWins(report, st)
