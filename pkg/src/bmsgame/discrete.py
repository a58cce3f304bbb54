"""Clock-period games: durations are positive multiples of a fixed period.

The reachable grid ``start + delta * sum_r i_r r`` is finite inside a bounded
safety set, so the scheduler's winning region is a greatest fixpoint.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .geometry import (UNBOUNDED, add, contains, exit_time_h, is_zero,
                       parse_rational, scale, vector)
from .model import VERTICES_ONLY, ModelError, Problem, vec_to_json

__all__ = [
    "DiscreteError", "NotSchedulable", "SemanticsError", "GameSolution",
    "build_grid", "discrete_schedulable", "verify_game_solution",
    "max_delta", "max_delta_report", "MaxDeltaReport", "solution_from_dict",
]

_ONE = Fraction(1)


class DiscreteError(ValueError):
    code = "DiscreteError"


class NotSchedulable(DiscreteError):
    code = "NotSchedulable"


class SemanticsError(ModelError):
    code = "SemanticsError"


@dataclass
class GameSolution:
    delta: Fraction
    start: tuple
    grid: dict          # point -> index vector over `rates`
    rates: tuple
    winning: frozenset
    action: dict        # winning point -> (mode, k)

    @property
    def yes(self) -> bool:
        return self.start in self.winning

    def step(self, x):
        mode, k = self.action[tuple(x)]
        return mode, k * self.delta

    def to_dict(self) -> dict:
        pts = sorted(self.winning)
        return {
            "answer": "yes" if self.yes else "no",
            "delta": str(self.delta),
            "start": vec_to_json(self.start),
            "grid_size": len(self.grid),
            "winning": [vec_to_json(p) for p in pts],
            "actions": [{"point": vec_to_json(p), "mode": self.action[p][0],
                         "periods": self.action[p][1]} for p in pts],
        }


def solution_from_dict(doc, prob: Problem) -> GameSolution:
    delta = parse_rational(doc["delta"])
    winning = frozenset(vector(p) for p in doc["winning"])
    action = {vector(a["point"]): (a["mode"], int(a["periods"])) for a in doc["actions"]}
    return GameSolution(delta, vector(doc["start"]), {}, (), winning, action)


def _require_vertices_only(prob: Problem):
    if prob.system.semantics != VERTICES_ONLY:
        raise SemanticsError("clock-period games need vertices-only semantics")


def build_grid(prob: Problem, delta) -> tuple:
    """Breadth-first closure of single-period moves inside the safety set.

    Returns ``(grid, rates)`` where ``grid`` maps each point to the
    lexicographically least index vector seen for it.
    """
    S = prob.safety
    rates = tuple(r for r in prob.system.extreme_rates())
    start = prob.start
    grid = {start: (0,) * len(rates)}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        idx = grid[x]
        for i, r in enumerate(rates):
            if is_zero(r):
                continue
            y = add(x, scale(delta, r))
            if not contains(S, y):
                continue
            j = idx[:i] + (idx[i] + 1,) + idx[i + 1:]
            if y not in grid:
                grid[y] = j
                queue.append(y)
            elif j < grid[y]:
                grid[y] = j
    return grid, rates


def _k_max(S, x, mode, delta):
    """Largest period count keeping every endpoint in ``S`` (1 for a resting mode)."""
    best = UNBOUNDED
    for r in mode.rate_vertices:
        t = exit_time_h(S, x, r)
        if t < best:
            best = t
    if best is UNBOUNDED:
        return 1
    return int(best / delta)  # floor of a nonnegative Fraction


def _solve(prob: Problem, delta, grid):
    S, modes = prob.safety, prob.system.modes
    moves = {}
    for x in grid:
        opts = []
        for m in modes:
            for k in range(1, _k_max(S, x, m, delta) + 1):
                ends = tuple(add(x, scale(k * delta, r)) for r in m.rate_vertices)
                opts.append((m.name, k, ends))
        moves[x] = opts
    win = set(grid)
    changed = True
    while changed:
        changed = False
        for x in list(win):
            if not any(all(e in win for e in ends) for _, _, ends in moves[x]):
                win.discard(x)
                changed = True
    action = {}
    for x in win:
        for name, k, ends in moves[x]:
            if all(e in win for e in ends):
                action[x] = (name, k)
                break
    return frozenset(win), action


def discrete_schedulable(prob: Problem, delta) -> GameSolution:
    """Solve the safety game on the period-``delta`` grid from the start."""
    _require_vertices_only(prob)
    delta = parse_rational(delta)
    if delta <= 0:
        raise DiscreteError(f"period must be positive, got {delta}")
    grid, rates = build_grid(prob, delta)
    win, action = _solve(prob, delta, grid)
    return GameSolution(delta, prob.start, grid, rates, win, action)


def verify_game_solution(prob: Problem, sol: GameSolution) -> bool:
    """Every winning point has an action whose endpoints stay winning."""
    S, sys = prob.safety, prob.system
    for x in sol.winning:
        if not contains(S, x) or x not in sol.action:
            return False
        name, k = sol.action[x]
        if k < 1:
            return False
        for r in sys.mode(name).rate_vertices:
            if add(x, scale(k * sol.delta, r)) not in sol.winning:
                return False
    return True


@dataclass
class MaxDeltaReport:
    value: object              # Fraction or UNBOUNDED
    gamma: Optional[Fraction] = None
    gamma_halvings: int = 0
    candidates_tested: list = field(default_factory=list)
    solution: Optional[GameSolution] = None

    def to_dict(self) -> dict:
        out = {"max_delta": str(self.value)}
        if self.gamma is not None:
            out["gamma"] = str(self.gamma)
            out["gamma_halvings"] = self.gamma_halvings
            out["candidates_tested"] = [str(c) for c in self.candidates_tested]
        return out


def _ray_limit(S, start, w):
    """``max {d : A(start + d w) <= b}`` for a nonzero direction ``w``."""
    return exit_time_h(S, start, w)


def _gamma_seed(prob: Problem):
    from .synthesis import SchedulerWins, decide
    res = decide(prob)
    if not isinstance(res, SchedulerWins):
        raise NotSchedulable("the scheduler does not win the continuous game from the start")
    cp = res.strategy.active
    return cp.dwell_bound if cp is not None else _ONE


def max_delta_report(prob: Problem, max_halvings: int = 64) -> MaxDeltaReport:
    """Largest period for which the scheduler still wins the clock-period game."""
    _require_vertices_only(prob)
    gamma = _gamma_seed(prob)
    if any(all(is_zero(r) for r in m.rate_vertices) for m in prob.system.modes):
        return MaxDeltaReport(UNBOUNDED)
    halvings = 0
    while not discrete_schedulable(prob, gamma).yes:
        halvings += 1
        if halvings > max_halvings:
            raise DiscreteError("no period passed the game check after repeated halving")
        gamma /= 2
    grid, rates = build_grid(prob, gamma)
    cands = set()
    for idx in grid.values():
        w = tuple(sum((i * r[c] for i, r in zip(idx, rates)), Fraction(0))
                  for c in range(prob.system.n))
        if is_zero(w):
            continue
        d = _ray_limit(prob.safety, prob.start, w)
        if d is not UNBOUNDED and d > gamma:
            cands.add(d)
    tested = []
    for d in sorted(cands, reverse=True):
        tested.append(d)
        sol = discrete_schedulable(prob, d)
        if sol.yes:
            return MaxDeltaReport(d, gamma, halvings, tested, sol)
    return MaxDeltaReport(gamma, gamma, halvings, tested, discrete_schedulable(prob, gamma))


def max_delta(prob: Problem):
    """The maximal period, or UNBOUNDED when a resting mode makes any period work."""
    return max_delta_report(prob).value
