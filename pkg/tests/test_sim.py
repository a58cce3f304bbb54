import csv
import io
import json
from fractions import Fraction as F

import pytest

import gen
from bmsgame import model
from bmsgame.geometry import dot, in_hull
from bmsgame.model import VERTICES_ONLY, Problem
from bmsgame.sim import (FixedInstance, PolicyError, Pusher, RandomInHull,
                         RandomVertex, RoundRobin, make_env_policy, simulate)
from bmsgame.synthesis import EnvironmentWins, SchedulerWins, decide

h = F(1, 2)


@pytest.fixture
def ex4():
    return model.load("example4.json")


@pytest.fixture
def ex2():
    return model.load("example2.json")


def test_example4_random_vertex(ex4):
    res = decide(ex4, margin=1)
    tr = simulate(ex4, res.strategy, RandomVertex(7).bind(ex4.system), 1000)
    assert tr.safe and len(tr.steps) == 1000
    assert tr.elapsed >= 1000
    assert tr.recheck(ex4)


def test_example4_default_margin_bound(ex4):
    res = decide(ex4)
    bound = res.strategy.active.dwell_bound
    tr = simulate(ex4, res.strategy, RandomVertex(1).bind(ex4.system), 300)
    assert tr.safe and all(s.duration >= bound for s in tr.steps)


def test_example2_fixed_instance_exits(ex2):
    env = make_env_policy("fixed:1,1", ex2)
    tr = simulate(ex2, RoundRobin(ex2.system), env, 1000)
    assert not tr.safe
    assert tr.exit_step == len(tr.steps) - 1 < 1000
    assert tr.recheck(ex2)


def test_zero_rounds(ex4):
    tr = simulate(ex4, RoundRobin(ex4.system), RandomVertex(0).bind(ex4.system), 0)
    assert tr.safe and tr.elapsed == 0 and tr.steps == []
    with pytest.raises(ValueError):
        simulate(ex4, RoundRobin(ex4.system), RandomVertex(0).bind(ex4.system), -1)


def test_policy_parsing(ex2):
    assert make_env_policy("pusher:1,0", ex2) == Pusher((1, 0))
    assert make_env_policy("random:42", ex2) == RandomVertex(42)
    assert make_env_policy("fixed:0,1", ex2) == FixedInstance((0, 1))
    assert make_env_policy("hull:3", ex2) == RandomInHull(3)
    assert make_env_policy("pusher:1/2,-1", ex2).v == (h, -1)


@pytest.mark.parametrize("text", ["bogus:1", "random:x", "fixed:0", "fixed:0,5", "pusher:1",
                                  "pusher:a,b"])
def test_policy_errors(ex2, text):
    with pytest.raises(PolicyError):
        make_env_policy(text, ex2)


def test_hull_needs_polytope_semantics():
    green = model.load("green.json")
    assert green.system.semantics == VERTICES_ONLY
    with pytest.raises(PolicyError):
        make_env_policy("hull:1", green)


def test_pusher_picks_best_first(ex2):
    p = Pusher((1, 0)).bind(ex2.system)
    assert p.choose(ex2.system.mode("m1"), None) == (h, 1)
    tie = Pusher((0, 1)).bind(ex2.system)
    assert tie.choose(ex2.system.mode("m1"), None) == (-h, 1)


def test_hull_samples_stay_in_hull(ex4):
    env = RandomInHull(5).bind(ex4.system)
    m = ex4.system.mode("m1")
    for _ in range(20):
        r = env.choose(m, None)
        assert in_hull(m.rate_vertices, r)


def test_seeds_are_deterministic(ex4):
    runs = [simulate(ex4, decide(ex4).strategy, RandomInHull(3).bind(ex4.system), 50)
            for _ in range(2)]
    assert runs[0].steps == runs[1].steps


def test_exports(ex2):
    tr = simulate(ex2, RoundRobin(ex2.system), make_env_policy("fixed:1,1", ex2), 10)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["step", "mode", "duration", "rate1", "rate2", "x1", "x2"]
    assert rows[1][-2:] == ["-1", "-1/2"]
    assert rows[2] == ["1", "m1", "1", "1/2", "1", "-1/2", "1/2"]
    doc = json.loads(tr.to_json())
    assert doc["safe"] is False and doc["steps"][0]["x"] == ["-1/2", "1/2"]


def test_game_solution_as_strategy():
    from bmsgame.discrete import discrete_schedulable
    p = model.load("green.json")
    sol = discrete_schedulable(p, F(5, 2))
    tr = simulate(p, sol, RandomVertex(4).bind(p.system), 200)
    assert tr.safe and tr.elapsed == 500


def test_schedulable_problems_survive_seeds():
    for p in [model.load("example4.json"), model.load("example1.json"), model.load("fig6-right.json")]:
        for seed in range(3):
            res = decide(p)
            tr = simulate(p, res.strategy, RandomVertex(seed).bind(p.system), 300)
            assert tr.safe
            assert all(s.duration >= b for s, b in zip(tr.steps, tr.bounds))


def test_falsifiers_drive_runs_out():
    seen = 0
    for p in gen.problems(120, seed=31) + [model.load("example2.json"), model.load("fig6-left.json")]:
        res = decide(p)
        if not isinstance(res, EnvironmentWins) or res.falsifier.face:
            continue
        v = res.falsifier.push
        gain = min(dot(v, r) for r in res.falsifier.pushed.values())
        env = Pusher(v).bind(p.system)
        tr = simulate(p, RoundRobin(p.system), env, 500)
        prev = dot(v, p.start)
        for s in tr.steps:
            cur = dot(v, s.landing)
            assert cur - prev >= s.duration * gain
            prev = cur
        assert not tr.safe
        seen += 1
    assert seen >= 10
