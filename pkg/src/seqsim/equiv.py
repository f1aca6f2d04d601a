"""State and trace equivalence between a parallel program and its simulation.

State equivalence holds at simulating loop heads and has six parts:

    heap            the original heap equals the simulating heap restricted
                    to the original locations
    vars            every variable bound in any environment on any thread's
                    stack equals its per-thread $sim cell
    pct-running     a running thread's counter names the next instruction of
                    its top context (a context with nothing left to run maps
                    to the procedure's end label)
    pct-terminated  a thread's stack is empty exactly when its counter is 0
    wf-stack        walking a thread's stack top-down, each callee's $from
                    cell holds the caller's resumption label, and the bottom
                    frame's $from cell holds 0
    sim-loop        the simulating stack is a single interleavings frame
                    sitting exactly at the loop head, and its terminated flag
                    is true exactly when every counter is 0

Trace equivalence compares filtered traces. Filtering the simulating side
keeps reads/writes of original locations, calls to select, and calls
to/returns from the procedures that simulate user calls and procedure
returns. Lifting turns each select-delimited segment into one (thread,
action) event; the parallel side of an atomic event is normalized to its
heap reads/writes, which is what survives inlining on the simulating side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .lang import (
    Atomic, Call, INTERLEAVINGS, ProgramPar, Read, SELECT, Value, Write,
    end_label, label_index, same_value,
)
from .semseq import (
    ActionSeq, CallAct, Frame, Heap, ReadAct, ReturnAct, SeqState, TAU,
    WriteAct,
)
from .sempar import AtomicAct, EventPar, ParState
from .transform import SimLayout, TERMINATED, to_name

CONDITIONS = ("heap", "vars", "pct-running", "pct-terminated", "wf-stack", "sim-loop")


@dataclass(frozen=True)
class HeapSplit:
    par_part: Heap  # original program locations
    sim_part: Heap  # simulation bookkeeping locations


def split_heap(sim_heap: Heap, layout: SimLayout, program: ProgramPar) -> HeapSplit:
    """Partition the simulating heap; raises if it does not split cleanly."""
    par_locs = {name for name, _ in program.memory}
    sim_locs = layout.sim_locations()
    par_part, sim_part = {}, {}
    for name, cells in sim_heap.items():
        if name in par_locs:
            par_part[name] = cells
        elif name in sim_locs:
            sim_part[name] = cells
        else:
            raise ValueError(f"location {name} belongs to neither heap part")
    missing = (par_locs | sim_locs) - set(sim_heap)
    if missing:
        raise ValueError(f"simulating heap misses locations: {sorted(missing)}")
    return HeapSplit(par_part, sim_part)


@dataclass
class EquivReport:
    conditions: dict[str, bool]
    details: list[str] = field(default_factory=list)  # first failure per condition

    @property
    def ok(self) -> bool:
        return all(self.conditions.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "conditions": dict(self.conditions),
                "details": list(self.details)}

    def __str__(self) -> str:
        if self.ok:
            return "equivalent"
        bad = [c for c, v in self.conditions.items() if not v]
        return f"not equivalent ({', '.join(bad)}): " + "; ".join(self.details)


def next_label(frame: Frame, program: ProgramPar) -> int:
    """Label of the next instruction a context will run; the procedure's end
    label (= its return procedure) when nothing is left."""
    if frame.rest:
        return frame.rest[0].label
    return end_label(program, frame.proc)


def wf_stack(stack: tuple[Frame, ...], sim_heap: Heap, t: int,
             program: ProgramPar, layout: SimLayout) -> bool:
    """Each callee's $from cell holds the caller's resumption label; the
    bottom frame's holds 0. Empty stacks are vacuously well formed."""
    for i, frame in enumerate(stack):
        cell = sim_heap[layout.from_loc[frame.proc]][t]
        expected = next_label(stack[i + 1], program) if i + 1 < len(stack) else 0
        if not same_value(cell, expected):
            return False
    return True


def states_equivalent(par: ParState, sim: SeqState, layout: SimLayout,
                      program: ProgramPar, ntid: int) -> EquivReport:
    """Evaluate all six conditions; any structural surprise on the simulating
    side shows up as a failed condition, not an exception (except a heap that
    does not split, which violates the caller's precondition)."""
    split = split_heap(sim.heap, layout, program)
    pct = sim.heap[layout.pct]
    conds = {c: True for c in CONDITIONS}
    details: list[str] = []

    def fail(cond: str, detail: str) -> None:
        if conds[cond]:
            conds[cond] = False
            details.append(f"{cond}: {detail}")

    # (1) original heap replicated
    if set(par.heap) != set(split.par_part):
        fail("heap", "heap domains differ")
    else:
        for name, cells in sorted(par.heap.items()):
            sim_cells = split.par_part[name]
            if len(cells) != len(sim_cells):
                fail("heap", f"size of {name} differs")
                continue
            for o, (a, b) in enumerate(zip(cells, sim_cells)):
                if not same_value(a, b):
                    fail("heap", f"{name}[{o}]: parallel {a!r} vs simulating {b!r}")
                    break

    # (2) locals replicated in the $sim arrays
    for t in range(ntid):
        for frame in par.stacks[t]:
            for x, v in sorted(frame.env.items()):
                loc = layout.simvar.get((frame.proc, x))
                if loc is None:
                    fail("vars", f"no cell for {frame.proc}.{x}")
                    continue
                cell = sim.heap[loc][t]
                if not same_value(cell, v):
                    fail("vars", f"thread {t} {frame.proc}.{x}: "
                                 f"parallel {v!r} vs cell {cell!r}")

    # (3a)/(3b) counters model the next instruction, 0 when done
    for t in range(ntid):
        stack = par.stacks[t]
        if stack:
            want = next_label(stack[0], program)
            if not same_value(pct[t], want):
                fail("pct-running", f"thread {t}: counter {pct[t]!r}, next label {want}")
            if same_value(pct[t], 0):
                fail("pct-terminated", f"thread {t} running but counter is 0")
        elif not same_value(pct[t], 0):
            fail("pct-terminated", f"thread {t} done but counter is {pct[t]!r}")

    # (4) call stacks modeled by the $from cells
    for t in range(ntid):
        if not wf_stack(par.stacks[t], sim.heap, t, program, layout):
            fail("wf-stack", f"thread {t}: $from chain does not match the stack")

    # (5) simulating stack parked at the loop head, flag consistent
    frame = sim.stack[0] if len(sim.stack) == 1 else None
    if (frame is None or frame.proc != INTERLEAVINGS
            or frame.rest != (layout.loop_instr,)):
        fail("sim-loop", "simulating stack is not at the interleavings loop head")
    else:
        flag = frame.env.get(TERMINATED)
        all_done = all(same_value(pct[t], 0) for t in range(ntid))
        if not isinstance(flag, bool) or flag is not all_done:
            fail("sim-loop", f"terminated flag {flag!r} vs counters all zero {all_done}")

    return EquivReport(conds, details)


# ---- trace filtering and lifting ------------------------------------------

class LiftError(Exception):
    """A simulating trace segment has no recognizable shape; this signals a
    transformation bug, not a property failure of the checked program."""


def _generated_label(layout: SimLayout, name: str) -> Optional[int]:
    if name.startswith("L") and name[1:].isdigit():
        return int(name[1:])
    return None


def filter_sim_trace(actions: list[ActionSeq], layout: SimLayout) -> list[ActionSeq]:
    """Drop simulation-internal noise: taus, bookkeeping-heap traffic, and
    helper procedure calls other than select, simulated user calls, and
    return procedures. Idempotent."""
    sim_locs = layout.sim_locations()
    visible_procs = ({to_name(l) for l in layout.call_labels}
                     | {to_name(l) for l in layout.return_label})
    out = []
    for a in actions:
        if isinstance(a, (ReadAct, WriteAct)):
            if a.loc not in sim_locs:
                out.append(a)
        elif isinstance(a, CallAct):
            if a.name == SELECT or a.name in visible_procs:
                out.append(a)
        elif isinstance(a, ReturnAct):
            if a.name in visible_procs:
                out.append(a)
    return out


def _segments(actions: list[ActionSeq]) -> tuple[list[ActionSeq], list[list[ActionSeq]]]:
    """Split a raw simulating trace at the select calls."""
    prefix: list[ActionSeq] = []
    segments: list[list[ActionSeq]] = []
    current = prefix
    for a in actions:
        if isinstance(a, CallAct) and a.name == SELECT:
            current = [a]
            segments.append(current)
        else:
            current.append(a)
    return prefix, segments


def lift_sim_trace(actions: list[ActionSeq], layout: SimLayout,
                   program: ProgramPar, select_choices: list[int]) -> list[EventPar]:
    """Turn a raw simulating trace into parallel events, one per
    select-delimited segment. Needs the recorded select choices (the chosen
    thread is not part of the select action itself)."""
    labels = label_index(program)
    sim_locs = layout.sim_locations()
    prefix, segments = _segments(actions)
    if filter_sim_trace(prefix, layout):
        raise LiftError("visible actions before the first select")
    if len(segments) != len(select_choices):
        raise LiftError(f"{len(segments)} segments but {len(select_choices)} select choices")

    events: list[EventPar] = []
    for seg, tid in zip(segments, select_choices):
        dispatch_label = None
        for a in seg:
            if isinstance(a, CallAct) and a.name != SELECT:
                lbl = _generated_label(layout, a.name)
                if lbl is not None:
                    if a.args != (tid,):
                        raise LiftError(f"dispatch {a.name} ran for {a.args}, "
                                        f"select chose {tid}")
                    dispatch_label = lbl
                    break
        if dispatch_label is None:
            raise LiftError("segment dispatched no simulating procedure")
        par_ops = [a for a in seg
                   if isinstance(a, (ReadAct, WriteAct)) and a.loc not in sim_locs]

        if dispatch_label in layout.return_label:
            _expect_ops(par_ops, 0, "return")
            events.append(EventPar(tid, ReturnAct(layout.return_label[dispatch_label])))
            continue
        if dispatch_label not in labels:
            raise LiftError(f"dispatched label {dispatch_label} not in the program")
        ins = labels[dispatch_label][1].instr

        if isinstance(ins, Call):
            _expect_ops(par_ops, 0, "call")
            events.append(EventPar(tid, CallAct(ins.name, _call_args(seg, layout, ins, tid))))
        elif isinstance(ins, Read):
            _expect_ops(par_ops, 1, "read")
            if not isinstance(par_ops[0], ReadAct):
                raise LiftError("read segment performed a write")
            events.append(EventPar(tid, par_ops[0]))
        elif isinstance(ins, Write):
            _expect_ops(par_ops, 1, "write")
            if not isinstance(par_ops[0], WriteAct):
                raise LiftError("write segment performed a read")
            events.append(EventPar(tid, par_ops[0]))
        elif isinstance(ins, Atomic):
            events.append(EventPar(tid, AtomicAct(tuple(par_ops))))
        else:  # Assign / If / While are silent
            _expect_ops(par_ops, 0, "silent")
            events.append(EventPar(tid, TAU))
    return events


def _expect_ops(par_ops: list, n: int, what: str) -> None:
    if len(par_ops) != n:
        raise LiftError(f"{what} segment touched the original heap "
                        f"{len(par_ops)} time(s), expected {n}")


def _call_args(seg: list[ActionSeq], layout: SimLayout, ins: Call,
               tid: int) -> tuple[Value, ...]:
    """Argument values of a simulated call, read off the writes into the
    callee's parameter cells (in declaration order)."""
    writes: dict[str, Value] = {}
    for a in seg:
        if isinstance(a, WriteAct) and a.offset == tid:
            writes.setdefault(a.loc, a.value)
    args = []
    for x in _callee_params(layout, ins.name, len(ins.args)):
        loc = layout.simvar[(ins.name, x)]
        if loc not in writes:
            raise LiftError(f"call segment never passed parameter {x} of {ins.name}")
        args.append(writes[loc])
    return tuple(args)


def _callee_params(layout: SimLayout, callee: str, arity: int) -> list[str]:
    # parameter cells come first in plan_layout's first-occurrence order
    params = [x for (m, x), _ in layout.simvar.items() if m == callee]
    return params[:arity]


def normalize_par_event(event: EventPar) -> EventPar:
    """Reduce an atomic event to its heap reads/writes: inner taus and the
    call/return bookkeeping of inlined procedures have no simulating
    counterpart."""
    if isinstance(event.action, AtomicAct):
        kept = tuple(a for a in event.action.actions
                     if isinstance(a, (ReadAct, WriteAct)))
        return EventPar(event.tid, AtomicAct(kept))
    return event


def traces_equivalent(par_events: list[EventPar], sim_actions: list[ActionSeq],
                      layout: SimLayout, program: ProgramPar,
                      select_choices: list[int]) -> tuple[bool, str]:
    """Element-wise comparison of the normalized parallel trace against the
    lifted simulating trace."""
    try:
        lifted = lift_sim_trace(sim_actions, layout, program, select_choices)
    except LiftError as err:
        return False, f"lifting failed: {err}"
    expected = [normalize_par_event(e) for e in par_events]
    if len(expected) != len(lifted):
        return False, f"{len(expected)} parallel events vs {len(lifted)} segments"
    for i, (a, b) in enumerate(zip(expected, lifted)):
        if a != b:
            return False, f"event {i}: parallel {a!r} vs lifted {b!r}"
    return True, ""
