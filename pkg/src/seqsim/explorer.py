"""Exhaustive interleaving exploration and executable simulation checks.

`explore_par` enumerates all schedules of a parallel program depth-first,
pruning on canonicalized states, and reports whether a blocking state is
reachable within the bounds. `explore_sim` does the same for a sequential
program whose only branching is the select built-in.

`verify_transformed` runs the three simulation checks over every reachable
(parallel state, simulating loop-head state) pair up to a depth bound:

    init      the initialization code establishes state equivalence
    forward   each enabled parallel step is matched by exactly one loop
              iteration (select scripted to the same thread) that
              re-establishes equivalence and lifts to the same event
    backward  each thread the simulation's select may pick corresponds to an
              enabled parallel step with matching successor and trace

Bounded exploration can only ever verify up to its bound; the verdict says so
explicitly rather than claiming more.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .lang import INTERLEAVINGS, ProgramPar, ProgramSeq, same_value
from .semseq import (
    ActionSeq, Blocked, CallAct, ChoiceOracle, Final, Heap, Loc, OracleError,
    ScriptedOracle, SeqState, canon_heap, canon_seq_state, initial_heap,
    initial_seq_state, run_seq, select_candidates, step_seq,
)
from .sempar import (
    DEFAULT_ATOMIC_FUEL, EventPar, ParState, canon_par_state, enabled_threads,
    initial_par_state, step_par,
)
from .equiv import filter_sim_trace, states_equivalent, traces_equivalent
from .transform import SimLayout, transform
from .wellformed import require_well_formed

DEFAULT_DEPTH = 12
DEFAULT_FUEL = 100_000


# ---- parallel-state exploration -------------------------------------------

@dataclass
class ExplorationResult:
    verdict: str  # "safe" | "blocking" | "unknown-beyond-bound"
    visited: int
    steps_used: int
    depth_reached: int
    final_heaps: list[Heap]
    witness_schedule: Optional[list[int]] = None
    blocked: Optional[Blocked] = None
    schedules: list[tuple[tuple[int, ...], str]] = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return self.verdict == "safe"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "visited": self.visited,
            "steps": self.steps_used,
            "depth": self.depth_reached,
            "finals": len(self.final_heaps),
            "witness": self.witness_schedule,
            "reason": self.blocked.reason if self.blocked else None,
        }


def explore_par(program: ProgramPar, ntid: int, fuel: int = DEFAULT_FUEL,
                depth: int = DEFAULT_DEPTH, heap: Optional[Heap] = None,
                dedupe: bool = True, jobs: int = 1,
                atomic_fuel: int = DEFAULT_ATOMIC_FUEL) -> ExplorationResult:
    """All schedules up to `depth` parallel steps. The first blocking state
    found (in DFS order, threads ascending) becomes the witness; its schedule
    replays to the blocking state."""
    require_well_formed(program, ntid)
    init = initial_par_state(program, ntid, heap)
    if jobs > 1:
        return _explore_split(program, init, fuel, depth, dedupe, jobs, atomic_fuel)
    return _explore_from(program, init, fuel, depth, 0, (), dedupe, atomic_fuel)


def _explore_from(program: ProgramPar, init: ParState, fuel: int, depth: int,
                  start_depth: int, prefix: tuple[int, ...], dedupe: bool,
                  atomic_fuel: int) -> ExplorationResult:
    result = ExplorationResult("safe", 0, 0, start_depth, [])
    seen: dict[tuple, int] = {}
    finals: set[tuple] = set()
    exhausted = False
    stack: list[tuple[ParState, int, tuple[int, ...]]] = [(init, start_depth, prefix)]

    while stack:
        state, d, sched = stack.pop()
        key = canon_par_state(state)
        prev = seen.get(key)
        if dedupe and prev is not None and prev <= d:
            result.schedules.append((sched, "seen"))
            continue
        if prev is None:
            result.visited += 1
        seen[key] = d
        result.depth_reached = max(result.depth_reached, d)

        enabled = enabled_threads(state)
        if not enabled:
            fkey = canon_heap(state.heap)
            if fkey not in finals:
                finals.add(fkey)
                result.final_heaps.append(state.heap)
            result.schedules.append((sched, "final"))
            continue
        if d >= depth:
            exhausted = True
            result.schedules.append((sched, "depth-bound"))
            continue

        for t in reversed(enabled):  # DFS explores ascending thread ids first
            if result.steps_used >= fuel:
                exhausted = True
                break
            result.steps_used += 1
            out = step_par(program, state, t, atomic_fuel)
            if isinstance(out, Blocked):
                result.verdict = "blocking"
                result.witness_schedule = list(sched) + [t]
                result.blocked = out
                result.schedules.append((tuple(sched) + (t,), "blocked"))
                return result
            _, nxt = out
            stack.append((nxt, d + 1, sched + (t,)))

    result.verdict = "unknown-beyond-bound" if exhausted else "safe"
    return result


def _explore_branch(args) -> ExplorationResult:
    program, state, fuel, depth, t, dedupe, atomic_fuel = args
    return _explore_from(program, state, fuel, depth, 1, (t,), dedupe, atomic_fuel)


def _explore_split(program: ProgramPar, init: ParState, fuel: int, depth: int,
                   dedupe: bool, jobs: int, atomic_fuel: int) -> ExplorationResult:
    """Fan the first-level branches out over worker processes. Each branch
    keeps a private memo table, so some states are revisited across branches;
    the merged verdict is identical to a single-threaded run's."""
    enabled = enabled_threads(init)
    branches = []
    for t in enabled:
        out = step_par(program, init, t, atomic_fuel)
        if isinstance(out, Blocked):
            return ExplorationResult("blocking", 1, 1, 1, [],
                                     witness_schedule=[t], blocked=out,
                                     schedules=[((t,), "blocked")])
        branches.append((program, out[1], fuel, depth, t, dedupe, atomic_fuel))

    merged = ExplorationResult("safe", 1, len(branches), 0, [])
    if not enabled:
        merged.final_heaps.append(init.heap)
        return merged
    finals: set[tuple] = set()
    exhausted = False
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for t, sub in zip(enabled, pool.map(_explore_branch, branches)):
            merged.visited += sub.visited
            merged.steps_used += sub.steps_used
            merged.depth_reached = max(merged.depth_reached, sub.depth_reached)
            merged.schedules.extend(sub.schedules)
            for h in sub.final_heaps:
                k = canon_heap(h)
                if k not in finals:
                    finals.add(k)
                    merged.final_heaps.append(h)
            if sub.verdict == "blocking" and merged.verdict != "blocking":
                merged.verdict = "blocking"
                merged.witness_schedule = sub.witness_schedule
                merged.blocked = sub.blocked
            elif sub.verdict == "unknown-beyond-bound":
                exhausted = True
    if merged.verdict != "blocking" and exhausted:
        merged.verdict = "unknown-beyond-bound"
    return merged


# ---- sequential exploration over select choices ---------------------------

def explore_sim(program: ProgramSeq, fuel: int = DEFAULT_FUEL,
                max_states: int = 200_000,
                heap: Optional[Heap] = None) -> ExplorationResult:
    """All executions of a sequential program over every select resolution,
    pruning on canonicalized states. The witness schedule lists the select
    choices leading to the block."""
    init = initial_seq_state(program, heap)
    result = ExplorationResult("safe", 0, 0, 0, [])
    seen: set[tuple] = set()
    finals: set[tuple] = set()
    exhausted = False
    stack: list[tuple[SeqState, tuple[int, ...], int]] = [(init, (), 0)]

    while stack:
        state, choices, nsteps = stack.pop()
        key = canon_seq_state(state)
        if key in seen:
            continue
        seen.add(key)
        result.visited += 1
        if len(seen) >= max_states or nsteps >= fuel:
            exhausted = True
            continue

        candidates = select_candidates(state)
        branch = candidates if candidates else [None]
        for c in reversed(branch):
            oracle = ScriptedOracle([c]) if c is not None else None
            out = step_seq(program, state, oracle)
            result.steps_used += 1
            if isinstance(out, Final):
                fkey = canon_heap(state.heap)
                if fkey not in finals:
                    finals.add(fkey)
                    result.final_heaps.append(state.heap)
                result.schedules.append((choices, "final"))
                continue
            if isinstance(out, Blocked):
                result.verdict = "blocking"
                result.witness_schedule = list(choices)
                result.blocked = out
                return result
            nxt_choices = choices + (c,) if c is not None else choices
            stack.append((out.state, nxt_choices, nsteps + 1))

    if result.verdict == "safe" and exhausted:
        result.verdict = "unknown-beyond-bound"
    return result


# ---- driving the simulation loop ------------------------------------------

def at_loop_head(state: SeqState, layout: SimLayout) -> bool:
    return (len(state.stack) == 1
            and state.stack[0].proc == INTERLEAVINGS
            and state.stack[0].rest == (layout.loop_instr,))


@dataclass
class IterationRun:
    status: str  # "loop-head" | "final" | "blocked" | "fuel-exhausted" | "oracle-error"
    state: SeqState
    actions: list[ActionSeq]
    select_choices: list[int]
    steps: int
    blocked: Optional[Blocked] = None


def run_to_loop_head(sim: ProgramSeq, state: SeqState, layout: SimLayout,
                     oracle: Optional[ChoiceOracle] = None,
                     fuel: int = DEFAULT_FUEL) -> IterationRun:
    """Step until the state is parked at the interleavings loop head again
    (at least one step is taken)."""
    run = IterationRun("fuel-exhausted", state, [], [], 0)
    for _ in range(fuel):
        try:
            out = step_seq(sim, run.state, oracle)
        except OracleError as err:
            run.status = "oracle-error"
            run.blocked = Blocked("oracle-error", str(err))
            return run
        if isinstance(out, Final):
            run.status = "final"
            return run
        if isinstance(out, Blocked):
            run.status = "blocked"
            run.blocked = out
            return run
        act = out.action
        if isinstance(act, CallAct) and act.name == "select":
            tid_loc = act.args[0]
            assert isinstance(tid_loc, Loc)
            run.select_choices.append(out.state.heap[tid_loc.name][0])
        run.actions.append(act)
        run.state = out.state
        run.steps += 1
        if at_loop_head(run.state, layout):
            run.status = "loop-head"
            return run
    return run


# initialization must establish equivalence from any allocation, so the
# bookkeeping cells start as conspicuous nonzero junk, never pre-zeroed
BOOKKEEPING_FILL = -1


def initial_sim_state(sim: ProgramSeq, par_heap: Heap,
                      fill: int = BOOKKEEPING_FILL) -> SeqState:
    """Initial simulating state: original cells copied from the parallel
    initial heap, everything else filled with `fill`."""
    heap = initial_heap(sim, fill)
    for name, cells in par_heap.items():
        heap[name] = cells
    return initial_seq_state(sim, heap)


# ---- the three checks ------------------------------------------------------

@dataclass
class CheckResult:
    ok: bool
    detail: str = ""
    par_state: Optional[ParState] = None
    sim_state: Optional[SeqState] = None
    event: Optional[EventPar] = None


def check_init(program: ProgramPar, ntid: int,
               sim: Optional[ProgramSeq] = None,
               layout: Optional[SimLayout] = None,
               heap: Optional[Heap] = None,
               fuel: int = DEFAULT_FUEL) -> CheckResult:
    """Run the generated initialization to the first loop head and compare
    against the parallel initial state."""
    if sim is None or layout is None:
        sim, layout = transform(program, ntid)
    par0 = initial_par_state(program, ntid, heap)
    sim_init = initial_sim_state(sim, par0.heap)
    run = run_to_loop_head(sim, sim_init, layout, oracle=None, fuel=fuel)
    if run.status != "loop-head":
        return CheckResult(False, f"initialization did not reach the loop head: "
                                  f"{run.blocked or run.status}")
    if run.select_choices:
        return CheckResult(False, "initialization ran a select")
    report = states_equivalent(par0, run.state, layout, program, ntid)
    if not report.ok:
        return CheckResult(False, str(report), par0, run.state)
    return CheckResult(True, "", par0, run.state)


def check_forward_step(program: ProgramPar, ntid: int, par_state: ParState,
                       sim_state: SeqState, t: int, sim: ProgramSeq,
                       layout: SimLayout, fuel: int = DEFAULT_FUEL,
                       atomic_fuel: int = DEFAULT_ATOMIC_FUEL) -> CheckResult:
    """One parallel step of thread t against one simulating loop iteration
    with select scripted to t."""
    out = step_par(program, par_state, t, atomic_fuel)
    if isinstance(out, Blocked):
        return CheckResult(False, f"parallel step of thread {t} blocked: {out}")
    event, par_next = out
    run = run_to_loop_head(sim, sim_state, layout, ScriptedOracle([t]), fuel)
    if run.status != "loop-head":
        return CheckResult(False, f"simulation iteration for thread {t} ended with "
                                  f"{run.blocked or run.status}", par_next)
    report = states_equivalent(par_next, run.state, layout, program, ntid)
    if not report.ok:
        return CheckResult(False, f"after thread {t}: {report}", par_next, run.state, event)
    same, why = traces_equivalent([event], run.actions, layout, program,
                                  run.select_choices)
    if not same:
        return CheckResult(False, f"trace mismatch for thread {t}: {why}",
                           par_next, run.state, event)
    return CheckResult(True, "", par_next, run.state, event)


def check_backward_step(program: ProgramPar, ntid: int, sim_state: SeqState,
                        par_state: ParState, sim: ProgramSeq, layout: SimLayout,
                        fuel: int = DEFAULT_FUEL,
                        atomic_fuel: int = DEFAULT_ATOMIC_FUEL) -> CheckResult:
    """Every choice the simulation's select may make at this loop head maps
    back to an enabled parallel step with matching successor and trace."""
    pct = sim_state.heap[layout.pct]
    candidates = [t for t in range(ntid) if not same_value(pct[t], 0)]
    if not candidates:
        if not par_state.is_final():
            return CheckResult(False, "simulation can stop but the parallel "
                                      "program still has code to run")
        return CheckResult(True)
    for t in candidates:
        if not par_state.stacks[t]:
            return CheckResult(False, f"select may pick thread {t}, which has "
                                      f"nothing to run in the parallel program")
        fwd = check_forward_step(program, ntid, par_state, sim_state, t,
                                 sim, layout, fuel, atomic_fuel)
        if not fwd.ok:
            return CheckResult(False, f"backward branch {t}: {fwd.detail}")
    return CheckResult(True)


# ---- whole-program verification --------------------------------------------

@dataclass
class SimulationVerdict:
    ok: bool
    verdict: str  # "verified" | "verified-up-to-bound" | "check-failed" | "unsafe"
    init_ok: bool = False
    pairs: int = 0
    forward_checks: int = 0
    backward_checks: int = 0
    depth_reached: int = 0
    bounded: bool = False
    failure: Optional[dict] = None
    exploration: Optional[ExplorationResult] = None

    @property
    def exit_code(self) -> int:
        if self.verdict == "unsafe":
            return 3
        if not self.ok:
            return 2
        return 4 if self.bounded else 0

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "verdict": self.verdict,
            "init_ok": self.init_ok,
            "pairs": self.pairs,
            "forward_checks": self.forward_checks,
            "backward_checks": self.backward_checks,
            "depth_reached": self.depth_reached,
            "bounded": self.bounded,
            "failure": self.failure,
            "exploration": self.exploration.to_json() if self.exploration else None,
        }


def verify_program(program: ProgramPar, ntid: int, fuel: int = DEFAULT_FUEL,
                   bound: int = DEFAULT_DEPTH,
                   heap: Optional[Heap] = None) -> SimulationVerdict:
    require_well_formed(program, ntid)
    sim, layout = transform(program, ntid)
    return verify_transformed(program, sim, layout, ntid, fuel, bound, heap)


def verify_transformed(program: ProgramPar, sim: ProgramSeq, layout: SimLayout,
                       ntid: int, fuel: int = DEFAULT_FUEL,
                       bound: int = DEFAULT_DEPTH,
                       heap: Optional[Heap] = None,
                       atomic_fuel: int = DEFAULT_ATOMIC_FUEL) -> SimulationVerdict:
    """Breadth-first sweep over reachable equivalent state pairs, running the
    forward check for every enabled thread and the backward check once per
    pair. Stops at the first failing check with a replayable counterexample."""
    exploration = explore_par(program, ntid, fuel=10 * fuel, depth=bound,
                              heap=heap, atomic_fuel=atomic_fuel)
    if exploration.verdict == "blocking":
        return SimulationVerdict(False, "unsafe", exploration=exploration)

    init = check_init(program, ntid, sim, layout, heap, fuel)
    if not init.ok:
        return SimulationVerdict(False, "check-failed", init_ok=False,
                                 failure={"kind": "init", "detail": init.detail},
                                 exploration=exploration)
    verdict = SimulationVerdict(True, "verified", init_ok=True,
                                exploration=exploration)

    queue: list[tuple[ParState, SeqState, int, tuple[int, ...]]] = [
        (init.par_state, init.sim_state, 0, ())
    ]
    seen: set[tuple] = set()
    pos = 0
    while pos < len(queue):
        par_state, sim_state, depth, sched = queue[pos]
        pos += 1
        key = (canon_par_state(par_state), canon_seq_state(sim_state))
        if key in seen:
            continue
        seen.add(key)
        verdict.pairs += 1
        verdict.depth_reached = max(verdict.depth_reached, depth)

        if par_state.is_final():
            res = run_seq(sim, sim_state, None, fuel)
            if res.outcome != "final" or filter_sim_trace(res.actions, layout):
                verdict.ok = False
                verdict.verdict = "check-failed"
                verdict.failure = {"kind": "termination", "schedule": list(sched),
                                   "detail": f"simulation did not wind down cleanly "
                                             f"({res.outcome})"}
                return verdict
            continue
        if depth >= bound:
            verdict.bounded = True
            continue

        bwd = check_backward_step(program, ntid, sim_state, par_state, sim,
                                  layout, fuel, atomic_fuel)
        verdict.backward_checks += 1
        if not bwd.ok:
            verdict.ok = False
            verdict.verdict = "check-failed"
            verdict.failure = {"kind": "backward", "schedule": list(sched),
                               "detail": bwd.detail}
            return verdict

        for t in enabled_threads(par_state):
            fwd = check_forward_step(program, ntid, par_state, sim_state, t,
                                     sim, layout, fuel, atomic_fuel)
            verdict.forward_checks += 1
            if not fwd.ok:
                verdict.ok = False
                verdict.verdict = "check-failed"
                verdict.failure = {"kind": "forward", "schedule": list(sched),
                                   "thread": t, "detail": fwd.detail}
                return verdict
            queue.append((fwd.par_state, fwd.sim_state, depth + 1, sched + (t,)))

    if exploration.verdict == "unknown-beyond-bound":
        verdict.bounded = True
    if verdict.bounded:
        verdict.verdict = "verified-up-to-bound"
    return verdict
