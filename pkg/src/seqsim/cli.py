"""Command-line interface.

    seqsim check FILE --ntid N
    seqsim transform FILE --ntid N -o OUT [--layout-json PATH]
    seqsim run FILE [--ntid N] (--schedule "0,1,0" | --seed S)
               [--fuel F] [--trace-json PATH]
    seqsim explore FILE --ntid N [--depth D] [--fuel F] [--jobs J]
    seqsim verify FILE --ntid N [--depth D] [--fuel F] [--json]

Exit codes: 0 success, 1 usage or parse error, 2 check/verify failure,
3 unsafe program (blocking state reachable), 4 bound exhausted.

A file with a `mains` block is a parallel program; without one it is
sequential (`run` then drives select from --seed or --schedule).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .explorer import (
    DEFAULT_DEPTH, DEFAULT_FUEL, explore_par, verify_program,
)
from .lang import ProgramPar
from .parser import parse_program
from .printer import print_program
from .semseq import RandomOracle, ScriptedOracle, initial_seq_state, run_seq
from .sempar import run_par
from .traces import action_to_json, event_to_json, heap_to_json
from .transform import transform
from .wellformed import check_well_formed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2
EXIT_UNSAFE = 3
EXIT_BOUND = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return None
    program, diags = parse_program(text)
    for d in diags:
        print(f"{path}:{d.render()}", file=sys.stderr)
    return program


def _parse_schedule(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def cmd_check(args) -> int:
    program = _load(args.file)
    if program is None:
        return EXIT_USAGE
    diags = check_well_formed(program, args.ntid)
    for d in diags:
        print(f"{args.file}:{d.render()}")
    if diags:
        return EXIT_CHECK_FAILED
    kind = "parallel" if isinstance(program, ProgramPar) else "sequential"
    print(f"{args.file}: well-formed {kind} program "
          f"({len(program.procs)} procedure(s))")
    return EXIT_OK


def cmd_transform(args) -> int:
    program = _load(args.file)
    if program is None:
        return EXIT_USAGE
    if not isinstance(program, ProgramPar):
        print("error: transform needs a parallel program (mains block)", file=sys.stderr)
        return EXIT_USAGE
    diags = check_well_formed(program, args.ntid)
    if diags:
        for d in diags:
            print(f"{args.file}:{d.render()}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    sim, layout = transform(program, args.ntid)
    text = print_program(sim)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.layout_json:
        with open(args.layout_json, "w", encoding="utf-8") as fh:
            json.dump(layout.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_run(args) -> int:
    program = _load(args.file)
    if program is None:
        return EXIT_USAGE
    schedule = _parse_schedule(args.schedule) if args.schedule else None

    if isinstance(program, ProgramPar):
        ntid = args.ntid if args.ntid else len(program.mains)
        diags = check_well_formed(program, ntid)
        if diags:
            for d in diags:
                print(f"{args.file}:{d.render()}", file=sys.stderr)
            return EXIT_CHECK_FAILED
        driver = schedule if schedule is not None else RandomOracle(args.seed)
        res = run_par(program, ntid, driver, fuel=args.fuel)
        trace = [event_to_json(e) for e in res.events]
        outcome, blocked, heap = res.outcome, res.blocked, res.state.heap
    else:
        diags = check_well_formed(program)
        if diags:
            for d in diags:
                print(f"{args.file}:{d.render()}", file=sys.stderr)
            return EXIT_CHECK_FAILED
        oracle = ScriptedOracle(schedule) if schedule is not None else RandomOracle(args.seed)
        res = run_seq(program, initial_seq_state(program), oracle, fuel=args.fuel)
        trace = [action_to_json(a) for a in res.actions]
        outcome, blocked, heap = res.outcome, res.blocked, res.state.heap

    if args.trace_json:
        with open(args.trace_json, "w", encoding="utf-8") as fh:
            json.dump(trace, fh, indent=2)
            fh.write("\n")
    print(f"outcome: {outcome}" + (f" ({blocked})" if blocked else ""))
    print(f"steps: {res.steps}")
    print("heap: " + json.dumps(heap_to_json(heap), sort_keys=True))
    if outcome == "final":
        return EXIT_OK
    if outcome == "blocked":
        return EXIT_UNSAFE
    if outcome == "fuel-exhausted":
        return EXIT_BOUND
    return EXIT_OK if outcome == "schedule-exhausted" else EXIT_USAGE


def cmd_explore(args) -> int:
    program = _load(args.file)
    if program is None:
        return EXIT_USAGE
    if not isinstance(program, ProgramPar):
        print("error: explore needs a parallel program", file=sys.stderr)
        return EXIT_USAGE
    diags = check_well_formed(program, args.ntid)
    if diags:
        for d in diags:
            print(f"{args.file}:{d.render()}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    res = explore_par(program, args.ntid, fuel=args.fuel, depth=args.depth,
                      jobs=args.jobs)
    print(json.dumps(res.to_json(), sort_keys=True, indent=2))
    if res.verdict == "blocking":
        return EXIT_UNSAFE
    if res.verdict == "unknown-beyond-bound":
        return EXIT_BOUND
    return EXIT_OK


def cmd_verify(args) -> int:
    program = _load(args.file)
    if program is None:
        return EXIT_USAGE
    if not isinstance(program, ProgramPar):
        print("error: verify needs a parallel program", file=sys.stderr)
        return EXIT_USAGE
    diags = check_well_formed(program, args.ntid)
    if diags:
        for d in diags:
            print(f"{args.file}:{d.render()}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    verdict = verify_program(program, args.ntid, fuel=args.fuel, bound=args.depth)
    if args.json:
        print(json.dumps(verdict.to_json(), sort_keys=True, indent=2))
    else:
        print(f"verdict: {verdict.verdict}")
        print(f"pairs checked: {verdict.pairs}, forward: {verdict.forward_checks}, "
              f"backward: {verdict.backward_checks}, depth: {verdict.depth_reached}")
        if verdict.failure:
            print(f"failure: {json.dumps(verdict.failure, sort_keys=True)}")
        if verdict.exploration and verdict.exploration.witness_schedule:
            print(f"blocking schedule: {verdict.exploration.witness_schedule}")
    return verdict.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqsim",
                     description="Sequentialize concurrent toy programs and "
                                 "check the simulation is faithful.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and well-formedness check")
    p.add_argument("file")
    p.add_argument("--ntid", type=int, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("transform", help="compile to a simulating sequential program")
    p.add_argument("file")
    p.add_argument("--ntid", type=int, required=True)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--layout-json", default=None)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("run", help="run one execution")
    p.add_argument("file")
    p.add_argument("--ntid", type=int, default=None)
    p.add_argument("--schedule", default=None,
                   help="comma-separated thread ids (parallel) or select choices (sequential)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--trace-json", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explore", help="enumerate all interleavings")
    p.add_argument("file")
    p.add_argument("--ntid", type=int, required=True)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("verify", help="check the simulation on all reachable states")
    p.add_argument("file")
    p.add_argument("--ntid", type=int, required=True)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
