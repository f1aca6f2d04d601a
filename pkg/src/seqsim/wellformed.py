"""Static well-formedness checks.

`check_well_formed` returns a list of diagnostics; an empty list means the
program is accepted by the transformation and the explorer. Parallel programs
are user inputs and get the full battery (reserved names, select calls,
nested atomics, mains/ntid validity); sequential programs are checked for the
structural rules only, so generated simulating programs pass.

Diagnostic codes are stable identifiers (tests assert on them):

    dup-proc          duplicate procedure name
    dup-param         duplicate parameter name in one procedure
    dup-location      duplicate memory location
    bad-memory-size   non-positive memory size
    reserved-name     procedure defines/steals a reserved name
                      (select, interleavings, L<digits>)
    sim-char-name     user identifier contains '$' or '#'
    recursion         cycle in the call graph (self calls included)
    undefined-proc    call to an undefined procedure
    arity-mismatch    call with the wrong number of arguments
    select-call       user code calls select (parallel programs)
    nested-atomic     atomic block inside an atomic block
    atomic-instr      atomic block in a sequential program
    bad-mains         mains empty or naming an undefined procedure
    bad-ntid          ntid outside [1, number of mains]
    main-params       sequential entry procedure takes parameters
    no-procs          program defines no procedure
"""

from __future__ import annotations

import re
from typing import Optional

from .lang import (
    Atomic, Call, Code, If, INTERLEAVINGS, Program, ProgramPar, SELECT,
    While, proc_map, proc_vars, walk_code,
)
from .parser import Diagnostic

_LABEL_NAME = re.compile(r"^L[0-9]+$")
_SIM_CHARS = ("$", "#")


def _err(code: str, message: str, span=None) -> Diagnostic:
    return Diagnostic("error", code, message, span)


def is_reserved_name(name: str) -> bool:
    return name in (SELECT, INTERLEAVINGS) or _LABEL_NAME.match(name) is not None


def _has_sim_char(name: str) -> bool:
    return any(c in name for c in _SIM_CHARS)


def _calls(code: Code):
    for li in walk_code(code):
        if isinstance(li.instr, Call):
            yield li


def check_well_formed(program: Program, ntid: Optional[int] = None) -> list[Diagnostic]:
    parallel = isinstance(program, ProgramPar)
    diags: list[Diagnostic] = []

    if not program.procs:
        diags.append(_err("no-procs", "program defines no procedure"))

    # memory declarations
    seen_locs: set[str] = set()
    for name, size in program.memory:
        if name in seen_locs:
            diags.append(_err("dup-location", f"memory location {name} declared twice"))
        seen_locs.add(name)
        if size <= 0:
            diags.append(_err("bad-memory-size", f"memory location {name} has size {size}"))
        if parallel and _has_sim_char(name):
            diags.append(_err("sim-char-name", f"memory location {name} uses a reserved character"))

    # procedure names and parameters
    procs = proc_map(program)
    seen_procs: set[str] = set()
    for p in program.procs:
        if p.name in seen_procs:
            diags.append(_err("dup-proc", f"procedure {p.name} defined twice", p.span))
        seen_procs.add(p.name)
        if len(set(p.params)) != len(p.params):
            diags.append(_err("dup-param", f"procedure {p.name} repeats a parameter name", p.span))
        if parallel:
            if is_reserved_name(p.name):
                diags.append(_err("reserved-name", f"procedure name {p.name} is reserved", p.span))
            for ident in [p.name, *proc_vars(p)]:
                if _has_sim_char(ident):
                    diags.append(_err("sim-char-name",
                                      f"identifier {ident} in procedure {p.name} uses a reserved character",
                                      p.span))
        elif p.name == SELECT:
            diags.append(_err("reserved-name", "procedure name select is reserved", p.span))

    # calls: defined, right arity, select policy
    for p in program.procs:
        for li in _calls(p.body):
            callee = li.instr.name
            if callee == SELECT:
                if parallel:
                    diags.append(_err("select-call",
                                      f"procedure {p.name} calls select", li.span))
                elif len(li.instr.args) != 3:
                    diags.append(_err("arity-mismatch",
                                      "select takes 3 arguments", li.span))
                continue
            target = procs.get(callee)
            if target is None:
                diags.append(_err("undefined-proc",
                                  f"call to undefined procedure {callee}", li.span))
            elif len(li.instr.args) != len(target.params):
                diags.append(_err("arity-mismatch",
                                  f"{callee} takes {len(target.params)} argument(s), "
                                  f"got {len(li.instr.args)}", li.span))

    # call graph must be acyclic (no recursion, direct or mutual)
    edges = {
        p.name: sorted({li.instr.name for li in _calls(p.body) if li.instr.name in procs})
        for p in program.procs
    }
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(name: str, path: list[str]) -> None:
        state[name] = 1
        path.append(name)
        for nxt in edges[name]:
            if state.get(nxt) == 1:
                cycle = path[path.index(nxt):] + [nxt]
                diags.append(_err("recursion",
                                  "recursive call cycle: " + " -> ".join(cycle),
                                  procs[nxt].span))
            elif state.get(nxt) is None:
                visit(nxt, path)
        path.pop()
        state[name] = 2

    for name in edges:
        if state.get(name) is None:
            visit(name, [])

    # atomic placement
    def check_atomics(code: Code, inside: bool) -> None:
        for li in code:
            ins = li.instr
            if isinstance(ins, Atomic):
                if not parallel:
                    diags.append(_err("atomic-instr",
                                      "atomic blocks are only allowed in parallel programs",
                                      li.span))
                elif inside:
                    diags.append(_err("nested-atomic", "nested atomic block", li.span))
                check_atomics(ins.body, True)
            elif isinstance(ins, While):
                check_atomics(ins.body, inside)
            elif isinstance(ins, If):
                check_atomics(ins.then, inside)
                check_atomics(ins.orelse, inside)

    for p in program.procs:
        check_atomics(p.body, False)

    if parallel:
        if not program.mains:
            diags.append(_err("bad-mains", "mains is empty"))
        for name in program.mains:
            if name not in procs:
                diags.append(_err("bad-mains", f"mains entry {name} is not a defined procedure"))
        if ntid is not None and not 1 <= ntid <= len(program.mains):
            diags.append(_err("bad-ntid",
                              f"ntid must lie in [1, {len(program.mains)}], got {ntid}"))
    elif program.procs and program.procs[0].params:
        diags.append(_err("main-params",
                          f"entry procedure {program.procs[0].name} must take no parameter",
                          program.procs[0].span))

    return diags


class WellFormednessError(Exception):
    """Raised by operations whose precondition is a well-formed program."""

    def __init__(self, diags: list[Diagnostic]):
        super().__init__("; ".join(d.render() for d in diags))
        self.diags = diags


def require_well_formed(program: Program, ntid: Optional[int] = None) -> None:
    diags = check_well_formed(program, ntid)
    if diags:
        raise WellFormednessError(diags)
