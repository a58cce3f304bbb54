"""Multi-mode systems, problems, JSON documents and model generators."""
from __future__ import annotations

import io
import json
import itertools
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterator

import jsonschema

from .geometry import (HPolytope, contains, filter_vertices, parse_rational,
                       vector)

__all__ = [
    "ModelError", "SchemaError", "DimensionMismatch", "UnboundedSafety",
    "EmptySafety", "StartOutsideSafety", "EmptyClause", "NoModeWithinBudget",
    "POLYTOPE", "VERTICES_ONLY", "Mode", "System", "Problem",
    "enumerate_instances", "instance_rates", "instance_count",
    "load", "loads", "save", "dumps", "problem_from_dict", "problem_to_dict",
    "gen_sat", "parse_dimacs", "gen_green", "bundled_model", "BUNDLED",
]

POLYTOPE = "polytope"
VERTICES_ONLY = "vertices-only"


class ModelError(ValueError):
    """Input error with a stable machine-readable ``code``."""

    code = "ModelError"

    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def to_dict(self):
        return {"error": self.code, "message": self.message}


class SchemaError(ModelError):
    code = "SchemaViolation"


class DimensionMismatch(ModelError):
    code = "DimensionMismatch"


class UnboundedSafety(ModelError):
    code = "UnboundedSafety"


class EmptySafety(ModelError):
    code = "EmptySafety"


class StartOutsideSafety(ModelError):
    code = "StartOutsideSafety"


class EmptyClause(ModelError):
    code = "EmptyClause"


class NoModeWithinBudget(ModelError):
    code = "NoModeWithinBudget"


@dataclass(frozen=True)
class Mode:
    name: str
    rate_vertices: tuple

    @property
    def is_constant(self) -> bool:
        return len(self.rate_vertices) == 1


def _dedupe(rates):
    out = []
    for r in rates:
        if r not in out:
            out.append(r)
    return tuple(out)


@dataclass(frozen=True)
class System:
    """A multi-mode system ``(M, n, R)`` with rate sets in V-representation.

    With ``polytope`` semantics each rate list is reduced to the vertices of
    its hull; with ``vertices-only`` semantics the listed (deduplicated) rates
    are exactly the environment's choices.
    """

    n: int
    modes: tuple
    semantics: str = POLYTOPE

    def __post_init__(self):
        if self.semantics not in (POLYTOPE, VERTICES_ONLY):
            raise SchemaError(f"unknown semantics {self.semantics!r}")
        names = [m.name for m in self.modes]
        if len(set(names)) != len(names):
            raise SchemaError("mode names must be unique")
        cleaned = []
        for m in self.modes:
            rates = tuple(tuple(Fraction(v) for v in r) for r in m.rate_vertices)
            if not rates:
                raise SchemaError(f"mode {m.name!r} has no rates")
            for r in rates:
                if len(r) != self.n:
                    raise DimensionMismatch(
                        f"mode {m.name!r} has a rate of dimension {len(r)} in a {self.n}-D system")
            rates = _dedupe(rates)
            if self.semantics == POLYTOPE and len(rates) > 1:
                rates = filter_vertices(rates).vertices
            cleaned.append(Mode(m.name, rates))
        object.__setattr__(self, "modes", tuple(cleaned))

    @classmethod
    def from_rates(cls, rate_lists, names=None, semantics=POLYTOPE):
        """Build from a list of per-mode rate lists; names default to m1, m2, ..."""
        rate_lists = [[vector(r) for r in rl] for rl in rate_lists]
        n = len(rate_lists[0][0]) if rate_lists and rate_lists[0] else 0
        if names is None:
            names = [f"m{i + 1}" for i in range(len(rate_lists))]
        return cls(n, tuple(Mode(nm, tuple(rl)) for nm, rl in zip(names, rate_lists)),
                   semantics)

    @property
    def is_cms(self) -> bool:
        return all(m.is_constant for m in self.modes)

    @property
    def names(self) -> list:
        return [m.name for m in self.modes]

    def mode(self, name) -> Mode:
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(name)

    def extreme_rates(self) -> list:
        """All rate vertices of all modes, deduplicated, in declaration order."""
        out = []
        for m in self.modes:
            for r in m.rate_vertices:
                if r not in out:
                    out.append(r)
        return out

    def with_modes(self, modes) -> "System":
        return System(self.n, tuple(modes), self.semantics)

    def with_semantics(self, semantics) -> "System":
        return System(self.n, self.modes, semantics)


@dataclass(frozen=True)
class Problem:
    system: System
    safety: HPolytope
    start: tuple

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(Fraction(v) for v in self.start))
        n = self.system.n
        if self.safety.dim != n:
            raise DimensionMismatch(f"safety set is {self.safety.dim}-D, system is {n}-D")
        if len(self.start) != n:
            raise DimensionMismatch(f"start has dimension {len(self.start)}, system is {n}-D")
        if self.safety.is_empty():
            raise EmptySafety("safety set is empty")
        if not self.safety.is_bounded():
            raise UnboundedSafety("safety set is unbounded")
        if not contains(self.safety, self.start):
            raise StartOutsideSafety("start state lies outside the safety set")


Instance = tuple  # per-mode index into rate_vertices, aligned with System.modes


def enumerate_instances(sys: System, reverse=False) -> Iterator[tuple]:
    """Cartesian product of per-mode vertex choices in lexicographic order."""
    ranges = [range(len(m.rate_vertices)) for m in sys.modes]
    if reverse:
        ranges = [reversed(r) for r in ranges]
        ranges = [list(r) for r in ranges]
    return itertools.product(*ranges)


def instance_count(sys: System) -> int:
    k = 1
    for m in sys.modes:
        k *= len(m.rate_vertices)
    return k


def instance_rates(sys: System, inst) -> list:
    return [m.rate_vertices[i] for m, i in zip(sys.modes, inst)]


# --------------------------------------------------------------------------
# JSON documents

_RAT = {"anyOf": [{"type": "integer"}, {"type": "number"}, {"type": "string"}]}
SCHEMA = {
    "type": "object",
    "required": ["n", "modes", "safety", "start"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "semantics": {"enum": [POLYTOPE, VERTICES_ONLY]},
        "modes": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "required": ["name", "rates"],
                "properties": {
                    "name": {"type": "string"},
                    "rates": {"type": "array", "minItems": 1,
                              "items": {"type": "array", "items": _RAT}},
                },
            },
        },
        "safety": {
            "type": "object", "required": ["A", "b"],
            "properties": {
                "A": {"type": "array", "minItems": 1,
                      "items": {"type": "array", "items": _RAT}},
                "b": {"type": "array", "items": _RAT},
            },
        },
        "start": {"type": "array", "items": _RAT},
    },
}


def _rats(values, what):
    try:
        return vector(values)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from None


def problem_from_dict(doc) -> Problem:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{path or 'document'}: {exc.message}") from None
    n = doc["n"]
    modes = []
    for m in doc["modes"]:
        modes.append(Mode(m["name"], tuple(_rats(r, f"mode {m['name']}") for r in m["rates"])))
    sys = System(n, tuple(modes), doc.get("semantics", POLYTOPE))
    A = [_rats(row, "safety.A") for row in doc["safety"]["A"]]
    b = _rats(doc["safety"]["b"], "safety.b")
    if len(A) != len(b) or any(len(row) != n for row in A):
        raise DimensionMismatch("safety matrix does not match n or b")
    start = _rats(doc["start"], "start")
    return Problem(sys, HPolytope(tuple(A), b), start)


def _s(v) -> str:
    return str(Fraction(v))


def vec_to_json(v) -> list:
    return [_s(x) for x in v]


def system_to_dict(sys: System) -> dict:
    return {
        "n": sys.n,
        "semantics": sys.semantics,
        "modes": [{"name": m.name, "rates": [vec_to_json(r) for r in m.rate_vertices]}
                  for m in sys.modes],
    }


def problem_to_dict(prob: Problem) -> dict:
    doc = system_to_dict(prob.system)
    doc["safety"] = {"A": [vec_to_json(r) for r in prob.safety.A],
                     "b": vec_to_json(prob.safety.b)}
    doc["start"] = vec_to_json(prob.start)
    return doc


def loads(text: str) -> Problem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return problem_from_dict(doc)


def load(source) -> Problem:
    """Load from a path, a bundled model name, or a text stream."""
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return loads(source.read())
    path = Path(source)
    if not path.exists():
        bundled = bundled_model(path.name)
        if bundled is not None:
            return loads(bundled)
        raise SchemaError(f"no such model file: {source}")
    return loads(path.read_text())


def dumps(prob: Problem) -> str:
    return json.dumps(problem_to_dict(prob), indent=2)


def save(prob: Problem, dest):
    text = dumps(prob) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


BUNDLED = ("example1.json", "example2.json", "example4.json", "green.json",
           "fig6-left.json", "fig6-right.json", "fig5-left.cnf", "fig5-right.cnf",
           "green-config.json")


def bundled_model(name: str):
    """Text of a bundled model or CNF file, or None."""
    if name not in BUNDLED:
        return None
    return resources.files("bmsgame.models").joinpath(name).read_text()


# --------------------------------------------------------------------------
# generators

def parse_dimacs(text: str) -> list:
    """Clauses (lists of nonzero ints) from DIMACS CNF text."""
    clauses, cur = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "cp%":
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(cur)
    return clauses


def gen_sat(clauses, n_vars=None) -> System:
    """Vertices-only system with one mode per clause.

    Literal ``+i`` contributes the unit rate ``+e_i`` and ``-i`` contributes
    ``-e_i``; repeated literals collapse to one rate.
    """
    clauses = [list(c) for c in clauses]
    if not clauses:
        raise EmptyClause("formula has no clauses")
    for j, c in enumerate(clauses):
        if not c:
            raise EmptyClause(f"clause {j + 1} is empty")
        if any(lit == 0 for lit in c):
            raise SchemaError("literal 0 is not allowed")
    n = n_vars or max(abs(lit) for c in clauses for lit in c)
    modes = []
    for j, c in enumerate(clauses):
        rates = []
        for lit in c:
            r = [Fraction(0)] * n
            r[abs(lit) - 1] = Fraction(1 if lit > 0 else -1)
            rates.append(tuple(r))
        modes.append(Mode(f"c{j + 1}", tuple(rates)))
    return System(n, tuple(modes), VERTICES_ONLY)


def gen_green(zones, budget) -> System:
    """Constant-rate system of all ON/OFF combinations within an energy budget.

    ``zones`` is a list of ``{"on": (rate, usage), "off": (rate, usage)}``.
    Mode ``m_<bits>`` has bit 1 for zones switched ON.
    """
    budget = parse_rational(budget)
    modes = []
    for bits in itertools.product((0, 1), repeat=len(zones)):
        rate, usage = [], Fraction(0)
        for z, bit in zip(zones, bits):
            r, u = z["on"] if bit else z["off"]
            rate.append(parse_rational(r))
            usage += parse_rational(u)
        if usage <= budget:
            modes.append(Mode("m" + "".join(map(str, bits)), (tuple(rate),)))
    if not modes:
        raise NoModeWithinBudget(f"no ON/OFF combination uses at most {budget}")
    return System(len(zones), tuple(modes), VERTICES_ONLY)


def default_problem(sys: System, half_width=1) -> Problem:
    """Wrap a bare system with the box ``[-w, w]^n`` and the origin as start."""
    from .geometry import box
    w = parse_rational(half_width)
    return Problem(sys, box([-w] * sys.n, [w] * sys.n), (Fraction(0),) * sys.n)
