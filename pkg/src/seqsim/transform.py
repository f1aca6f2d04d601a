"""Compilation of a parallel program into a sequential simulating program.

Every instruction that executes as one parallel step (assignments, heap
reads/writes, condition evaluations, calls, whole atomic blocks) becomes one
procedure of the output, named "L<label>" and parameterized by the simulated
thread id. Thread-local state moves into global arrays indexed by thread id:

    $pct         per-thread simulated program counter (size ntid)
    $ptid        the thread picked by the last select (size 1)
    $from$<m>    per-thread return label for calls to m (size ntid)
    $sim$<m>$<x> per-thread copy of local variable x of procedure m

A generated procedure loads the locals it needs out of the $sim arrays,
performs the original instruction's effect (heap reads/writes hit the real
locations), stores defined locals back, and finally advances $pct to the
instruction's next label. Calls store argument values into the callee's
parameter arrays and the return label into $from$<callee>; returns are
handled by one extra procedure per source procedure, named after its end
label, that copies $from$<m> back into $pct. Inside an atomic block the same
translation applies, but with no $pct updates, with conditionals and loops
keeping their structure, and with procedure calls inlined (scratch names of
inlined bodies get a '#k' suffix).

The entry point, `interleavings`, initializes $pct/$from, then loops: select
an active thread, dispatch on its counter through nested conditionals to the
procedure simulating its next instruction, and rescan the counters to decide
termination (counter 0 means the thread is done).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .lang import (
    Assign, Atomic, Call, Code, Const, Expr, If, INTERLEAVINGS, LabeledInstr,
    Loc, Op, Proc, ProgramPar, ProgramSeq, Read, SELECT, Var, While, Write,
    begin_label, end_label, expr_vars, label_program, proc_map, proc_vars,
    simulated_instrs,
)
from .wellformed import require_well_formed

# fresh scratch locals of the generated code ('$' cannot occur in user names)
TID = "$tid"
TMP = "$tmp"
AUX = "$aux"
TERMINATED = "$terminated"

PCT = "$pct"
PTID = "$ptid"


def to_name(label: int) -> str:
    """Procedure name simulating the instruction at `label`."""
    return f"L{label}"


@dataclass(frozen=True)
class SimLayout:
    """Memory plan of the simulating program."""

    ntid: int
    pct: str
    ptid: str
    from_loc: dict[str, str]              # procedure -> $from location
    simvar: dict[tuple[str, str], str]    # (procedure, variable) -> $sim location
    call_labels: frozenset[int]           # labels of simulated user calls
    call_target: dict[int, str]           # those labels -> callee name
    return_label: dict[int, str]          # end label -> procedure it returns from
    # the labeled interleavings loop instruction; state equivalence compares
    # the simulating stack against it (attached by transform, not in JSON)
    loop_instr: Optional[LabeledInstr] = field(default=None, compare=False)

    def sim_locations(self) -> set[str]:
        locs = {self.pct, self.ptid}
        locs.update(self.from_loc.values())
        locs.update(self.simvar.values())
        return locs

    def to_json(self) -> dict:
        return {
            "pct": self.pct,
            "ptid": self.ptid,
            "from": dict(sorted(self.from_loc.items())),
            "simvar": {f"{m}.{x}": loc
                       for (m, x), loc in sorted(self.simvar.items())},
            "calls": {str(l): self.call_target[l] for l in sorted(self.call_labels)},
            "returns": {str(l): m for l, m in sorted(self.return_label.items())},
        }


def plan_layout(program: ProgramPar, ntid: int) -> SimLayout:
    """Deterministic memory plan: one $from array per procedure, one $sim
    array per (procedure, local or parameter)."""
    from_loc = {p.name: f"$from${p.name}" for p in program.procs}
    simvar = {}
    for p in program.procs:
        for x in proc_vars(p):
            simvar[(p.name, x)] = f"$sim${p.name}${x}"
    call_labels = []
    call_target = {}
    for p in program.procs:
        for li in simulated_instrs(p):
            if isinstance(li.instr, Call):
                call_labels.append(li.label)
                call_target[li.label] = li.instr.name
    return_label = {p.end_label: p.name for p in program.procs}
    return SimLayout(ntid, PCT, PTID, from_loc, simvar,
                     frozenset(call_labels), call_target, return_label)


def sim_memory(program: ProgramPar, layout: SimLayout) -> tuple[tuple[str, int], ...]:
    out = list(program.memory)
    out.append((layout.pct, layout.ntid))
    out.append((layout.ptid, 1))
    for p in program.procs:
        out.append((layout.from_loc[p.name], layout.ntid))
    for p in program.procs:
        for x in proc_vars(p):
            out.append((layout.simvar[(p.name, x)], layout.ntid))
    return tuple(out)


# ---- code emission helpers ------------------------------------------------

def _i(instr) -> LabeledInstr:
    return LabeledInstr(0, 0, instr)


def load_seq(layout: SimLayout, proc: str, x: str,
             target: Optional[str] = None) -> list[LabeledInstr]:
    """Read x's per-thread cell into the plain local (`target` defaults to x,
    inlining renames it)."""
    loc = layout.simvar[(proc, x)]
    return [
        _i(Assign(TMP, Const(Loc(loc)))),
        _i(Read(target or x, TMP, Var(TID))),
    ]


def store_seq(layout: SimLayout, proc: str, x: str, value: Expr) -> list[LabeledInstr]:
    """Write `value` into x's per-thread cell."""
    loc = layout.simvar[(proc, x)]
    return [
        _i(Assign(TMP, Const(Loc(loc)))),
        _i(Write(TMP, Var(TID), value)),
    ]


def _set_pct(label: int) -> list[LabeledInstr]:
    return [
        _i(Assign(TMP, Const(Loc(PCT)))),
        _i(Write(TMP, Var(TID), Const(label))),
    ]


def _loads(layout: SimLayout, proc: str, names: list[str],
           rename: Optional[dict[str, str]] = None) -> list[LabeledInstr]:
    out: list[LabeledInstr] = []
    seen: set[str] = set()
    for x in names:
        if x not in seen:
            seen.add(x)
            out.extend(load_seq(layout, proc, x, (rename or {}).get(x)))
    return out


def _rename_expr(e: Expr, rename: dict[str, str]) -> Expr:
    if isinstance(e, Var) and e.name in rename:
        return Var(rename[e.name])
    if isinstance(e, Op):
        return Op(e.op, tuple(_rename_expr(a, rename) for a in e.args))
    return e


# ---- per-instruction procedures -------------------------------------------

def compile_instruction(layout: SimLayout, program: ProgramPar,
                        proc_name: str, li: LabeledInstr) -> Proc:
    """One simulating procedure for one (non-atomic-inner) instruction."""
    ins = li.instr
    body: list[LabeledInstr] = []

    if isinstance(ins, Assign):
        body += _loads(layout, proc_name, expr_vars(ins.expr))
        body += store_seq(layout, proc_name, ins.x, ins.expr)
        body += _set_pct(li.next)

    elif isinstance(ins, Read):
        body += _loads(layout, proc_name, [ins.y] + expr_vars(ins.offset))
        body.append(_i(Read(ins.x, ins.y, ins.offset)))
        body += store_seq(layout, proc_name, ins.x, Var(ins.x))
        body += _set_pct(li.next)

    elif isinstance(ins, Write):
        body += _loads(layout, proc_name,
                       [ins.x] + expr_vars(ins.offset) + expr_vars(ins.value))
        body.append(_i(Write(ins.x, ins.offset, ins.value)))
        body += _set_pct(li.next)

    elif isinstance(ins, If):
        then_target = ins.then[0].label if ins.then else li.next
        else_target = ins.orelse[0].label if ins.orelse else li.next
        body += _loads(layout, proc_name, expr_vars(ins.cond))
        body.append(_i(If(ins.cond,
                          tuple(_set_pct(then_target)),
                          tuple(_set_pct(else_target)))))

    elif isinstance(ins, While):
        # empty body spins on the loop's own label, as the source program does
        body_target = ins.body[0].label if ins.body else li.label
        body += _loads(layout, proc_name, expr_vars(ins.cond))
        body.append(_i(If(ins.cond,
                          tuple(_set_pct(body_target)),
                          tuple(_set_pct(li.next)))))

    elif isinstance(ins, Call):
        callee = proc_map(program)[ins.name]
        for a in ins.args:
            body += _loads(layout, proc_name, expr_vars(a))
        for param, arg in zip(callee.params, ins.args):
            body += store_seq(layout, callee.name, param, arg)
        body.append(_i(Assign(TMP, Const(Loc(layout.from_loc[callee.name])))))
        body.append(_i(Write(TMP, Var(TID), Const(li.next))))
        body += _set_pct(begin_label(program, callee.name))

    elif isinstance(ins, Atomic):
        counter = [0]
        body += compile_atomic(layout, program, ins.body, proc_name, {}, counter)
        body += _set_pct(li.next)

    else:
        raise TypeError(f"cannot compile {type(ins).__name__}")

    return Proc(to_name(li.label), (TID,), tuple(body))


def compile_atomic(layout: SimLayout, program: ProgramPar, code: Code,
                   proc_name: str, rename: dict[str, str],
                   counter: list[int]) -> list[LabeledInstr]:
    """Translate an atomic block body: no counter updates, conditionals and
    loops keep their structure, calls are inlined with fresh scratch names."""
    out: list[LabeledInstr] = []
    for li in code:
        ins = li.instr

        if isinstance(ins, Assign):
            out += _loads(layout, proc_name, expr_vars(ins.expr), rename)
            out += store_seq(layout, proc_name, ins.x, _rename_expr(ins.expr, rename))

        elif isinstance(ins, Read):
            out += _loads(layout, proc_name, [ins.y] + expr_vars(ins.offset), rename)
            x = rename.get(ins.x, ins.x)
            y = rename.get(ins.y, ins.y)
            out.append(_i(Read(x, y, _rename_expr(ins.offset, rename))))
            out += store_seq(layout, proc_name, ins.x, Var(x))

        elif isinstance(ins, Write):
            out += _loads(layout, proc_name,
                          [ins.x] + expr_vars(ins.offset) + expr_vars(ins.value),
                          rename)
            out.append(_i(Write(rename.get(ins.x, ins.x),
                                _rename_expr(ins.offset, rename),
                                _rename_expr(ins.value, rename))))

        elif isinstance(ins, If):
            out += _loads(layout, proc_name, expr_vars(ins.cond), rename)
            out.append(_i(If(
                _rename_expr(ins.cond, rename),
                tuple(compile_atomic(layout, program, ins.then, proc_name, rename, counter)),
                tuple(compile_atomic(layout, program, ins.orelse, proc_name, rename, counter)),
            )))

        elif isinstance(ins, While):
            # reload the condition's variables at entry and after each body
            # pass so every re-test sees current values
            cond_loads = _loads(layout, proc_name, expr_vars(ins.cond), rename)
            inner = compile_atomic(layout, program, ins.body, proc_name, rename, counter)
            out += cond_loads
            out.append(_i(While(_rename_expr(ins.cond, rename),
                                tuple(inner + cond_loads))))

        elif isinstance(ins, Call):
            callee = proc_map(program)[ins.name]
            for a in ins.args:
                out += _loads(layout, proc_name, expr_vars(a), rename)
            for param, arg in zip(callee.params, ins.args):
                out += store_seq(layout, callee.name, param, _rename_expr(arg, rename))
            counter[0] += 1
            inlined = {x: f"{x}#{counter[0]}" for x in proc_vars(callee)}
            out += compile_atomic(layout, program, callee.body,
                                  callee.name, inlined, counter)

        else:
            raise TypeError(f"{type(ins).__name__} inside an atomic block")
    return out


def gen_return_proc(layout: SimLayout, program: ProgramPar, name: str) -> Proc:
    """Procedure run when `name` returns: counter := stored return label."""
    body = (
        _i(Assign(TMP, Const(Loc(layout.from_loc[name])))),
        _i(Read(AUX, TMP, Var(TID))),
        _i(Assign(TMP, Const(Loc(PCT)))),
        _i(Write(TMP, Var(TID), Var(AUX))),
    )
    return Proc(to_name(end_label(program, name)), (TID,), body)


def gen_interleavings(layout: SimLayout, program: ProgramPar, ntid: int,
                      dispatch_labels: list[int]) -> Proc:
    body: list[LabeledInstr] = []

    # initialization: counters at each thread's first instruction, return
    # labels of the entry procedures at 0 so threads stop after their main
    body.append(_i(Assign(TMP, Const(Loc(PCT)))))
    for t in range(ntid):
        body.append(_i(Write(TMP, Const(t),
                             Const(begin_label(program, program.mains[t])))))
    for t in range(ntid):
        body.append(_i(Assign(TMP, Const(Loc(layout.from_loc[program.mains[t]])))))
        body.append(_i(Write(TMP, Const(t), Const(0))))
    body.append(_i(Assign(TERMINATED, Const(False))))

    # dispatch: nested conditionals over ascending labels
    dispatch: Code = ()
    for label in sorted(dispatch_labels, reverse=True):
        dispatch = (
            _i(If(Op("=", (Var(AUX), Const(label))),
                  (_i(Call(to_name(label), (Var(TID),))),),
                  dispatch)),
        )

    loop_body: list[LabeledInstr] = [
        _i(Call(SELECT, (Const(ntid), Const(Loc(PTID)), Const(Loc(PCT))))),
        _i(Assign(TMP, Const(Loc(PTID)))),
        _i(Read(TID, TMP, Const(0))),
        _i(Assign(TMP, Const(Loc(PCT)))),
        _i(Read(AUX, TMP, Var(TID))),
        *dispatch,
        # termination scan: rescan every counter; any nonzero keeps running
        _i(Assign(TERMINATED, Const(True))),
        _i(Assign(AUX, Const(Loc(PCT)))),
        _i(Assign(TMP, Const(0))),
        _i(While(Op("<", (Var(TMP), Const(ntid))), (
            _i(Read(TID, AUX, Var(TMP))),
            _i(If(Op("!=", (Var(TID), Const(0))),
                  (_i(Assign(TERMINATED, Const(False))),),
                  ())),
            _i(Assign(TMP, Op("+", (Var(TMP), Const(1))))),
        ))),
    ]
    body.append(_i(While(Op("!", (Var(TERMINATED),)), tuple(loop_body))))
    return Proc(INTERLEAVINGS, (), tuple(body))


def transform(program: ProgramPar, ntid: int) -> tuple[ProgramSeq, SimLayout]:
    """Compile a labeled, well-formed parallel program for `ntid` threads.
    Deterministic: the same input yields the identical output."""
    require_well_formed(program, ntid)
    layout = plan_layout(program, ntid)

    instr_procs: list[Proc] = []
    dispatch_labels: list[int] = []
    for p in program.procs:
        for li in simulated_instrs(p):
            instr_procs.append(compile_instruction(layout, program, p.name, li))
            dispatch_labels.append(li.label)
    return_procs = [gen_return_proc(layout, program, p.name) for p in program.procs]
    dispatch_labels.extend(p.end_label for p in program.procs)

    main = gen_interleavings(layout, program, ntid, dispatch_labels)
    sim = ProgramSeq(tuple([main] + instr_procs + return_procs),
                     sim_memory(program, layout))
    sim = label_program(sim)

    loop = sim.procs[0].body[-1]
    return sim, replace(layout, loop_instr=loop)
