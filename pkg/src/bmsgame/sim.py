"""Play a scheduler against an environment policy and record the run."""
from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .geometry import add, contains, dot, parse_rational, scale, vector
from .model import POLYTOPE, ModelError, Problem, vec_to_json

__all__ = [
    "PolicyError", "FixedInstance", "RandomVertex", "Pusher", "RandomInHull",
    "make_env_policy", "RoundRobin", "Step", "Trace", "simulate",
]

DENOM_BITS = 16


class PolicyError(ModelError):
    code = "PolicyError"


@dataclass
class FixedInstance:
    instance: tuple

    def bind(self, sys):
        if len(self.instance) != len(sys.modes):
            raise PolicyError(f"instance needs {len(sys.modes)} indices")
        table = {}
        for m, i in zip(sys.modes, self.instance):
            if not 0 <= i < len(m.rate_vertices):
                raise PolicyError(f"index {i} out of range for mode {m.name!r}")
            table[m.name] = m.rate_vertices[i]
        self._table = table
        return self

    def choose(self, mode, x):
        return self._table[mode.name]


@dataclass
class RandomVertex:
    seed: int

    def bind(self, sys):
        self._rng = random.Random(self.seed)
        return self

    def choose(self, mode, x):
        return mode.rate_vertices[self._rng.randrange(len(mode.rate_vertices))]


@dataclass
class Pusher:
    """Plays the vertex with the largest progress along ``v``."""

    v: tuple

    def bind(self, sys):
        if len(self.v) != sys.n:
            raise PolicyError(f"push vector has dimension {len(self.v)}, system is {sys.n}-D")
        return self

    def choose(self, mode, x):
        best = mode.rate_vertices[0]
        for r in mode.rate_vertices[1:]:
            if dot(self.v, r) > dot(self.v, best):
                best = r
        return best


@dataclass
class RandomInHull:
    """Random convex combination of a mode's vertices (polytope semantics only)."""

    seed: int

    def bind(self, sys):
        if sys.semantics != POLYTOPE:
            raise PolicyError("hull sampling needs polytope semantics")
        self._rng = random.Random(self.seed)
        return self

    def choose(self, mode, x):
        w = [self._rng.randint(0, 1 << DENOM_BITS) for _ in mode.rate_vertices]
        total = sum(w)
        if total == 0:
            return mode.rate_vertices[0]
        r = (Fraction(0),) * len(mode.rate_vertices[0])
        for wi, v in zip(w, mode.rate_vertices):
            r = add(r, scale(Fraction(wi, total), v))
        return r


def make_env_policy(text: str, prob: Problem):
    """Parse ``fixed:i,j,..``, ``random:seed``, ``pusher:v1,v2,..`` or ``hull:seed``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "fixed":
            pol = FixedInstance(tuple(int(a) for a in arg.split(",")))
        elif kind == "random":
            pol = RandomVertex(int(arg))
        elif kind == "pusher":
            pol = Pusher(vector(arg.split(",")))
        elif kind == "hull":
            pol = RandomInHull(int(arg))
        else:
            raise PolicyError(f"unknown policy kind {kind!r}")
    except ValueError as exc:
        if isinstance(exc, PolicyError):
            raise
        raise PolicyError(f"malformed policy {text!r}: {exc}") from None
    return pol.bind(prob.system)


class RoundRobin:
    """Cycle through the modes with a fixed duration."""

    def __init__(self, sys, duration=1):
        self.names = sys.names
        self.duration = parse_rational(duration)
        self.i = 0

    def step(self, x):
        name = self.names[self.i % len(self.names)]
        self.i += 1
        return name, self.duration


@dataclass(frozen=True)
class Step:
    mode: str
    duration: Fraction
    rate: tuple
    landing: tuple


@dataclass
class Trace:
    start: tuple
    steps: list = field(default_factory=list)
    safe: bool = True
    elapsed: Fraction = Fraction(0)
    exit_step: Optional[int] = None
    bounds: list = field(default_factory=list, repr=False)

    def recheck(self, prob: Problem) -> bool:
        """Recompute every landing and the verdict exactly."""
        x, total = self.start, Fraction(0)
        for i, s in enumerate(self.steps):
            x = add(x, scale(s.duration, s.rate))
            total += s.duration
            if x != s.landing:
                return False
            if not contains(prob.safety, x):
                return not self.safe and self.exit_step == i and i == len(self.steps) - 1
        return self.safe and total == self.elapsed

    def to_dict(self) -> dict:
        return {
            "start": vec_to_json(self.start),
            "safe": self.safe,
            "elapsed": str(self.elapsed),
            "exit_step": self.exit_step,
            "steps": [{"mode": s.mode, "duration": str(s.duration),
                       "rate": vec_to_json(s.rate), "x": vec_to_json(s.landing)}
                      for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        n = len(self.start)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "mode", "duration"] + [f"rate{i + 1}" for i in range(n)]
                   + [f"x{i + 1}" for i in range(n)])
        w.writerow([0, "", ""] + [""] * n + vec_to_json(self.start))
        for i, s in enumerate(self.steps, 1):
            w.writerow([i, s.mode, str(s.duration)] + vec_to_json(s.rate) + vec_to_json(s.landing))
        return buf.getvalue()


def simulate(prob: Problem, strategy, env, rounds: int) -> Trace:
    """Run ``rounds`` rounds, stopping at the first landing outside the safety set.

    ``strategy`` is anything with ``step(x) -> (mode, duration)``; ``env``
    anything with ``choose(mode, x) -> rate``.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    sys = prob.system
    x = prob.start
    trace = Trace(start=x)
    for i in range(rounds):
        name, duration = strategy.step(x)
        mode = sys.mode(name)
        r = env.choose(mode, x)
        x = add(x, scale(duration, r))
        trace.steps.append(Step(name, duration, r, x))
        trace.bounds.append(getattr(strategy, "last_bound", None))
        trace.elapsed += duration
        if not contains(prob.safety, x):
            trace.safe = False
            trace.exit_step = i
            break
    return trace
