"""Small-step semantics of parallel programs.

Each thread owns a stack of local contexts; all threads share one heap. A
step picks an enabled thread and either delegates one sequential step to it
(the whole shared heap is handed to the sequential reduction) or, when the
thread's next instruction is an atomic block, runs the block to completion
through the sequential semantics and reports the collected actions as one
atomic event. Events are (thread id, action) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lang import Atomic, ProgramPar, proc_map
from .semseq import (
    ActionSeq, Blocked, ChoiceOracle, Frame, Heap, OracleError, SeqState,
    Stepped, canon_frame, canon_heap, check_initial_heap, initial_heap,
    step_seq,
)

DEFAULT_ATOMIC_FUEL = 10_000


@dataclass(frozen=True)
class AtomicAct:
    """The action list an atomic block produced, as one indivisible event."""

    actions: tuple[ActionSeq, ...]


ActionPar = Union[ActionSeq, AtomicAct]


@dataclass(frozen=True)
class EventPar:
    tid: int
    action: ActionPar


@dataclass(frozen=True)
class ParState:
    stacks: tuple[tuple[Frame, ...], ...]  # index = thread id
    heap: Heap

    @property
    def ntid(self) -> int:
        return len(self.stacks)

    def is_final(self) -> bool:
        return all(not s for s in self.stacks)


def initial_par_state(program: ProgramPar, ntid: int,
                      heap: Optional[Heap] = None) -> ParState:
    if not 1 <= ntid <= len(program.mains):
        raise ValueError(f"ntid must lie in [1, {len(program.mains)}], got {ntid}")
    if heap is None:
        heap = initial_heap(program)
    else:
        check_initial_heap(program, heap)
    procs = proc_map(program)
    stacks = []
    for t in range(ntid):
        main = procs[program.mains[t]]
        stacks.append((Frame(main.name, {}, main.body),))
    return ParState(tuple(stacks), heap)


def enabled_threads(state: ParState) -> list[int]:
    """Threads that still have code to execute."""
    return [t for t, s in enumerate(state.stacks) if s]


def step_par(program: ProgramPar, state: ParState, t: int,
             atomic_fuel: int = DEFAULT_ATOMIC_FUEL
             ) -> Union[tuple[EventPar, ParState], Blocked]:
    """One step of thread t. Precondition: t is enabled (caller error
    otherwise, reported as ValueError rather than Blocked)."""
    if not 0 <= t < state.ntid:
        raise ValueError(f"thread id {t} outside [0, {state.ntid})")
    stack = state.stacks[t]
    if not stack:
        raise ValueError(f"thread {t} has no code to execute")

    top = stack[0]
    if top.rest and isinstance(top.rest[0].instr, Atomic):
        return _step_atomic(program, state, t, atomic_fuel)

    seq_state = SeqState(stack, state.heap)
    out = step_seq(_as_seq_view(program), seq_state, oracle=None)
    if isinstance(out, Blocked):
        return out
    assert isinstance(out, Stepped)
    stacks = state.stacks[:t] + (out.state.stack,) + state.stacks[t + 1:]
    return EventPar(t, out.action), ParState(stacks, out.state.heap)


def _step_atomic(program: ProgramPar, state: ParState, t: int,
                 atomic_fuel: int) -> Union[tuple[EventPar, ParState], Blocked]:
    stack = state.stacks[t]
    top = stack[0]
    block = top.rest[0].instr.body
    # sequential closure of the block on a fresh single-frame stack,
    # until that frame is back with nothing left to run
    seq = SeqState((Frame(top.proc, top.env, block),), state.heap)
    actions: list[ActionSeq] = []
    view = _as_seq_view(program)
    for _ in range(atomic_fuel):
        if len(seq.stack) == 1 and not seq.stack[0].rest:
            new_top = Frame(top.proc, seq.stack[0].env, top.rest[1:])
            stacks = state.stacks[:t] + ((new_top,) + stack[1:],) + state.stacks[t + 1:]
            return EventPar(t, AtomicAct(tuple(actions))), ParState(stacks, seq.heap)
        out = step_seq(view, seq, oracle=None)
        if isinstance(out, Blocked):
            return out
        assert isinstance(out, Stepped)
        actions.append(out.action)
        seq = out.state
    return Blocked("atomic-fuel-exhausted",
                   f"atomic block did not finish within {atomic_fuel} steps")


def _as_seq_view(program: ProgramPar):
    # the sequential stepper only looks at procs; reuse the parallel ones
    return program


@dataclass
class RunParResult:
    events: list[EventPar]
    state: ParState
    outcome: str  # "final" | "blocked" | "fuel-exhausted" | "schedule-exhausted"
                  # | "schedule-error" | "oracle-error"
    blocked: Optional[Blocked] = None
    steps: int = 0
    schedule: list[int] = field(default_factory=list)  # threads actually run


def run_par(program: ProgramPar, ntid: int,
            schedule: Union[list[int], ChoiceOracle, None] = None,
            fuel: int = 100_000, heap: Optional[Heap] = None,
            atomic_fuel: int = DEFAULT_ATOMIC_FUEL) -> RunParResult:
    """Run from the initial state, choosing threads from a scripted schedule
    or an oracle over the enabled set. A scripted schedule that names a
    thread with nothing to run stops with outcome "schedule-error"."""
    state = initial_par_state(program, ntid, heap)
    result = RunParResult([], state, "fuel-exhausted")
    script = list(schedule) if isinstance(schedule, list) else None
    for _ in range(fuel):
        enabled = enabled_threads(result.state)
        if not enabled:
            result.outcome = "final"
            return result
        if script is not None:
            if not script:
                result.outcome = "schedule-exhausted"
                return result
            t = script.pop(0)
            if t not in enabled:
                result.outcome = "schedule-error"
                result.blocked = Blocked("schedule-error",
                                         f"scheduled thread {t} is not enabled")
                return result
        elif isinstance(schedule, ChoiceOracle):
            try:
                t = schedule.choose(enabled)
            except OracleError as err:
                result.outcome = "oracle-error"
                result.blocked = Blocked("oracle-error", str(err))
                return result
        else:
            t = enabled[0]
        out = step_par(program, result.state, t, atomic_fuel)
        if isinstance(out, Blocked):
            result.outcome = "blocked"
            result.blocked = out
            return result
        event, result.state = out
        result.events.append(event)
        result.schedule.append(t)
        result.steps += 1
    return result


def canon_par_state(s: ParState) -> tuple:
    return (tuple(tuple(canon_frame(f) for f in stack) for stack in s.stacks),
            canon_heap(s.heap))
