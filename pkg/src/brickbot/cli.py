"""Command-line front end.

Exit codes: 0 success, 2 bad input, 3 no supervisor exists, 4 state cap
exceeded, 5 joint behaviour blocking, 6 simulation hit the step limit,
7 simulation stuck, 8 script mismatch.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .efa import DEFAULT_STATE_CAP
from .errors import ModelError, ParseError, ResourceLimitError, ScriptError
from .explicit import to_text
from .render import render_snapshot
from .simulator import (COMPLETED, STEP_LIMIT, STUCK, SimulationConfig, Simulator, parse_script,
                        parse_trace, replay_positions)
from .structure import OUTSIDE, UnreachableTargetError, build_structure_automaton, parse_structure
from .synthesis import REPAIR_MODES, supervisor_from_text, synthesize
from .verification import verify_theorem

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_CAP = 4
EXIT_BLOCKING = 5
EXIT_STEP_LIMIT = 6
EXIT_STUCK = 7
EXIT_SCRIPT = 8

log = logging.getLogger("brickbot")


def _load_structure(path):
    return parse_structure(Path(path).read_text(encoding="utf-8"))


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_structure(args) -> int:
    spec = _load_structure(args.file)
    try:
        t = build_structure_automaton(spec, state_cap=args.state_cap)
    except UnreachableTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    if args.stats:
        print(f"states {len(t.states)} transitions {t.n_transitions} marked {len(t.marked)}")
    if args.out or not args.stats:
        _emit(to_text(t), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = _load_structure(args.file)
    sup = synthesize(spec, args.robot, repair_mode=args.repair_mode, state_cap=args.state_cap)
    if sup is None:
        print("no supervisor exists")
        return EXIT_EMPTY
    c = sup.certificate
    summary = (f"supervisor robot={sup.robot} states={len(sup.automaton.states)} "
               f"trans={sup.automaton.n_transitions} passes={sup.passes} "
               f"certificate trim={int(c['trim'])} taskobs={int(c['task_observer'])} "
               f"reciprocal={int(c['totally_reciprocal'])}")
    if args.out:
        Path(args.out).write_text(sup.to_text(), encoding="utf-8")
        print(summary)
    else:
        sys.stdout.write(sup.to_text())
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _load_structure(args.file)
    sup = None
    if args.supervisor:
        sup = supervisor_from_text(Path(args.supervisor).read_text(encoding="utf-8"))
    report = verify_theorem(spec, args.robots, state_cap=args.state_cap, supervisor=sup,
                            use_plant=args.unsynthesized)
    sys.stdout.write(report.to_text())
    if not report.supervisor_exists:
        return EXIT_EMPTY
    return EXIT_OK if report.nonblocking else EXIT_BLOCKING


def _snapshots(spec, trace, robots):
    out = []
    for te, heights, pos in replay_positions(trace, spec, robots):
        out.append(f"# after step={te.step} robot={te.robot} event={te.event}\n")
        out.append(render_snapshot(spec, heights, pos))
    return out


def cmd_simulate(args) -> int:
    spec = _load_structure(args.file)
    script = None
    if args.policy != "random":
        if not args.policy.startswith("script:"):
            print("error: --policy must be 'random' or 'script:<file>'", file=sys.stderr)
            return EXIT_INPUT
        script = parse_script(Path(args.policy[len("script:"):]).read_text(encoding="utf-8"))
    sup = synthesize(spec, 1, state_cap=args.state_cap)
    if sup is None:
        print("no supervisor exists")
        return EXIT_EMPTY
    config = SimulationConfig(spec, args.robots, args.seed, script, args.max_steps)
    try:
        trace = Simulator(config, sup).run()
    except ScriptError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT
    text = trace.to_text()
    if args.trace:
        Path(args.trace).write_text(text, encoding="utf-8")
    if args.render:
        body = []
        lines = text.splitlines(keepends=True)
        snaps = iter(_snapshots(spec, trace, args.robots))
        for te, line in zip(trace.events, lines):
            body.append(line)
            if te.cause == "executed":
                body.append(next(snaps))
                body.append(next(snaps))
        body.append(lines[-1])
        sys.stdout.write("".join(body))
    elif not args.trace:
        sys.stdout.write(text)
    else:
        print(f"outcome={trace.outcome} steps={trace.steps}")
    return {COMPLETED: EXIT_OK, STEP_LIMIT: EXIT_STEP_LIMIT, STUCK: EXIT_STUCK}[trace.outcome]


def cmd_render(args) -> int:
    spec = _load_structure(args.file)
    trace = parse_trace(Path(args.trace).read_text(encoding="utf-8"))
    robots = args.robots or max((te.robot for te in trace.events), default=1)
    sys.stdout.write("# initial\n" + render_snapshot(
        spec, {}, {r: OUTSIDE for r in range(1, robots + 1)}))
    sys.stdout.write("".join(_snapshots(spec, trace, robots)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brickbot", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cap(sp):
        sp.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)

    st = sub.add_parser("structure", help="structure automaton tools")
    st_sub = st.add_subparsers(dest="action", required=True)
    build = st_sub.add_parser("build", help="build and serialise the structure automaton")
    build.add_argument("file")
    build.add_argument("--out")
    build.add_argument("--stats", action="store_true")
    cap(build)
    build.set_defaults(func=cmd_structure)

    sy = sub.add_parser("synth", help="synthesise the supervisor for one robot")
    sy.add_argument("file")
    sy.add_argument("--out")
    sy.add_argument("--robot", type=int, default=1)
    sy.add_argument("--repair-mode", choices=REPAIR_MODES, default="states")
    cap(sy)
    sy.set_defaults(func=cmd_synth)

    ve = sub.add_parser("verify", help="check the joint behaviour of n supervised robots")
    ve.add_argument("file")
    ve.add_argument("--robots", type=int, required=True)
    ve.add_argument("--supervisor", help="use a saved supervisor instead of synthesising")
    ve.add_argument("--unsynthesized", action="store_true",
                    help="negative control: use the unpruned plant as supervisor")
    cap(ve)
    ve.set_defaults(func=cmd_verify)

    si = sub.add_parser("simulate", help="simulate decentralised construction")
    si.add_argument("file")
    si.add_argument("--robots", type=int, default=1)
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--policy", default="random")
    si.add_argument("--max-steps", type=int, default=10_000)
    si.add_argument("--trace")
    si.add_argument("--render", action="store_true")
    cap(si)
    si.set_defaults(func=cmd_simulate)

    re_ = sub.add_parser("render", help="draw ASCII snapshots of a saved trace")
    re_.add_argument("file")
    re_.add_argument("trace")
    re_.add_argument("--robots", type=int)
    re_.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
