"""Command-line interface.

Exit codes: 0 scheduler wins / safe / yes, 1 environment wins / unsafe / no,
2 usage error, 3 input error.  Every command prints one JSON document.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import model
from .discrete import (DiscreteError, discrete_schedulable, max_delta_report,
                       verify_game_solution)
from .geometry import GeometryError, box, face_of, parse_rational
from .model import VERTICES_ONLY, ModelError, Problem
from .safety import bms_safe, bms_safe_2d, verify_falsifier
from .sim import RoundRobin, make_env_policy, simulate
from .synthesis import (SchedulerWins, StrategyError, SynthesisError,
                        analyze_faces, decide, verify_closed)

EXIT_WIN, EXIT_LOSE, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(doc, out):
    out.write(json.dumps(doc, indent=2) + "\n")


def _load(path: str, stdin) -> Problem:
    if path == "-":
        return model.loads(stdin.read())
    return model.load(path)


def _read_text(path: str) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text()
    bundled = model.bundled_model(p.name)
    if bundled is None:
        raise ModelError(f"no such file: {path}")
    return bundled


def _maybe_vertices_only(prob: Problem, flag: bool) -> Problem:
    if flag and prob.system.semantics != VERTICES_ONLY:
        return Problem(prob.system.with_semantics(VERTICES_ONLY), prob.safety, prob.start)
    return prob


def cmd_check(args, prob, out):
    if args.planar:
        verdict = bms_safe_2d(prob.system)
    else:
        verdict = bms_safe(prob.system, jobs=args.jobs)
    doc = {"command": "check", **verdict.to_dict(prob.system)}
    _emit(doc, out)
    return EXIT_WIN if verdict.safe else EXIT_LOSE


def cmd_decide(args, prob, out):
    res = decide(prob, margin=args.margin, full=args.full, jobs=args.jobs)
    doc = res.to_dict()
    if isinstance(res, SchedulerWins):
        doc["verified"] = all(verify_closed(st.closed.system, st.closed, prob.safety)
                              for st in res.report.values() if st.closed is not None)
    else:
        doc["verified"] = verify_falsifier(prob, res.falsifier)
    doc = {"command": "decide", **doc}
    _emit(doc, out)
    return EXIT_WIN if isinstance(res, SchedulerWins) else EXIT_LOSE


def cmd_faces(args, prob, out):
    report = analyze_faces(prob, margin=args.margin, jobs=args.jobs)
    start_face = face_of(prob.safety, prob.start)
    faces = [{"face": sorted(I), "status": st.kind,
              **({"via": st.via} if st.via else {}),
              **({"inherited_from": sorted(st.inherited_from)}
                 if st.inherited_from is not None else {})}
             for I, st in report.items()]
    ok = report[start_face].schedulable
    _emit({"command": "faces", "start_face": sorted(start_face),
           "winner": "scheduler" if ok else "environment",
           "upward_closed": report.upward_closed(), "faces": faces}, out)
    return EXIT_WIN if ok else EXIT_LOSE


def cmd_synthesize(args, prob, out):
    res = decide(prob, margin=args.margin, jobs=args.jobs)
    if not isinstance(res, SchedulerWins):
        _emit({"command": "synthesize", "winner": "environment",
               "falsifier": res.falsifier.to_dict()}, out)
        return EXIT_LOSE
    polys = [{"face": sorted(I), **st.closed.to_dict()}
             for I, st in res.report.items() if st.closed is not None]
    internal = [{"face": sorted(I), "via": st.via}
                for I, st in res.report.items() if st.via is not None]
    _emit({"command": "synthesize", "winner": "scheduler",
           "active": res.strategy.to_dict(), "face_polytopes": polys,
           "internal_faces": internal}, out)
    return EXIT_WIN


def cmd_simulate(args, prob, out):
    env_text = args.env or f"random:{args.seed}"
    env = make_env_policy(env_text, prob)
    res = decide(prob, margin=args.margin, jobs=args.jobs)
    if isinstance(res, SchedulerWins):
        strategy, name = res.strategy, "synthesized"
    else:
        strategy, name = RoundRobin(prob.system), "round-robin"
    trace = simulate(prob, strategy, env, args.rounds)
    if args.trace:
        text = trace.to_csv() if args.trace.endswith(".csv") else trace.to_json()
        Path(args.trace).write_text(text)
    if args.format == "csv":
        out.write(trace.to_csv())
    else:
        _emit({"command": "simulate", "strategy": name, "env": env_text, **trace.to_dict()}, out)
    return EXIT_WIN if trace.safe else EXIT_LOSE


def cmd_discrete(args, prob, out):
    if args.delta is None:
        raise UsageError("discrete: --delta is required")
    prob = _maybe_vertices_only(prob, args.vertices_only)
    sol = discrete_schedulable(prob, parse_rational(args.delta))
    doc = {"command": "discrete", **sol.to_dict(),
           "verified": verify_game_solution(prob, sol)}
    _emit(doc, out)
    return EXIT_WIN if sol.yes else EXIT_LOSE


def cmd_max_delta(args, prob, out):
    prob = _maybe_vertices_only(prob, args.vertices_only)
    try:
        rep = max_delta_report(prob)
    except DiscreteError as exc:
        if getattr(exc, "code", "") == "NotSchedulable":
            _emit({"command": "max-delta", "winner": "environment", "message": str(exc)}, out)
            return EXIT_LOSE
        raise
    _emit({"command": "max-delta", "winner": "scheduler", **rep.to_dict()}, out)
    return EXIT_WIN


def cmd_gen(args, out):
    if args.kind == "sat":
        if not args.cnf:
            raise UsageError("gen sat: --cnf is required")
        sys_ = model.gen_sat(model.parse_dimacs(_read_text(args.cnf)))
        w = parse_rational(args.box)
        prob = Problem(sys_, box([-w] * sys_.n, [w] * sys_.n), (0,) * sys_.n)
    else:
        if not args.config:
            raise UsageError("gen green: --config is required")
        try:
            cfg = json.loads(_read_text(args.config))
        except json.JSONDecodeError as exc:
            raise model.SchemaError(f"invalid JSON config: {exc}") from None
        if "zones" not in cfg or "budget" not in cfg:
            raise model.SchemaError("green config needs 'zones' and 'budget'")
        sys_ = model.gen_green(cfg["zones"], cfg["budget"])
        n = sys_.n
        if "safety" in cfg:
            from .geometry import HPolytope, vector
            S = HPolytope(tuple(vector(r) for r in cfg["safety"]["A"]),
                          vector(cfg["safety"]["b"]))
        else:
            lo, hi = cfg.get("bounds", (-1, 1))
            S = box([parse_rational(lo)] * n, [parse_rational(hi)] * n)
        if "start" in cfg:
            start = tuple(parse_rational(v) for v in cfg["start"])
        else:
            lo, hi = cfg.get("bounds", (-1, 1))
            mid = (parse_rational(lo) + parse_rational(hi)) / 2
            start = (mid,) * n
        prob = Problem(sys_, S, start)
    _emit(model.problem_to_dict(prob), out)
    return EXIT_WIN


def build_parser():
    p = _Parser(prog="bmsgame", description=__doc__.splitlines()[0])
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for instance checks")
    subs = p.add_subparsers(dest="command", parser_class=_Parser)

    def with_model(name, help_):
        sp = subs.add_parser(name, help=help_)
        sp.add_argument("model", help="model JSON path, bundled model name, or - for stdin")
        sp.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--margin", default="1/2", help="scale margin in (0, 1]")
        return sp

    sp = with_model("check", "safety of the system from interior starts")
    sp.add_argument("--planar", action="store_true", help="use the polynomial 2-D test")
    sp = with_model("decide", "winner and certificate from the model's start")
    sp.add_argument("--full", action="store_true", help="analyze every face, not just those below the start")
    with_model("faces", "face-by-face schedulability report")
    with_model("synthesize", "closed polytopes and vertex plans")
    sp = with_model("simulate", "play the game and record a trace")
    sp.add_argument("--env", help="fixed:i,j.. | random:SEED | pusher:v1,v2.. | hull:SEED")
    sp.add_argument("--rounds", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", help="write the trace to this path (.csv or .json)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp = with_model("discrete", "clock-period game for a fixed period")
    sp.add_argument("--delta")
    sp.add_argument("--vertices-only", action="store_true",
                    help="treat listed rates as the only environment choices")
    sp = with_model("max-delta", "largest clock period the scheduler can use")
    sp.add_argument("--vertices-only", action="store_true")
    sp = subs.add_parser("gen", help="generate a model")
    sp.add_argument("kind", choices=("sat", "green"))
    sp.add_argument("--cnf", help="DIMACS file for sat")
    sp.add_argument("--box", default="1", help="half-width of the safety box for sat")
    sp.add_argument("--config", help="JSON zone config for green")
    return p


COMMANDS = {
    "check": cmd_check, "decide": cmd_decide, "faces": cmd_faces,
    "synthesize": cmd_synthesize, "simulate": cmd_simulate,
    "discrete": cmd_discrete, "max-delta": cmd_max_delta,
}


def _error(code, message, out, err, status):
    _emit({"error": code, "message": message}, out)
    err.write(f"bmsgame: {message}\n")
    return status


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if args.command == "gen":
            return cmd_gen(args, out)
        if getattr(args, "rounds", 0) < 0:
            raise UsageError("--rounds must be nonnegative")
        prob = _load(args.model, stdin)
        return COMMANDS[args.command](args, prob, out)
    except UsageError as exc:
        return _error("UsageError", str(exc), out, err, EXIT_USAGE)
    except ModelError as exc:
        return _error(exc.code, exc.message, out, err, EXIT_INPUT)
    except (GeometryError, SynthesisError, StrategyError, DiscreteError) as exc:
        return _error(getattr(exc, "code", type(exc).__name__), str(exc), out, err, EXIT_INPUT)
    except ValueError as exc:
        return _error("InvalidValue", str(exc), out, err, EXIT_INPUT)


def main():
    sys.exit(run())
