from __future__ import annotations

import pytest

from seqsim import (
    AtomicAct, CallAct, EventPar, Loc, ReadAct, ReturnAct, ScriptedOracle, Tau,
    WriteAct, check_init, filter_sim_trace, initial_par_state, lift_sim_trace,
    next_label, run_par, run_seq, split_heap, states_equivalent,
    traces_equivalent, transform, wf_stack,
)
from seqsim.equiv import LiftError, normalize_par_event
from seqsim.explorer import initial_sim_state, run_to_loop_head
from seqsim.lang import end_label
from seqsim.semseq import Frame, SeqState, Stepped, step_seq
from seqsim.transform import to_name

from conftest import load_corpus_program, parse


def sim_run_for_schedule(program, ntid, schedule, heap=None):
    """Run the parallel program under `schedule` and the simulating program
    with the same select choices; both runs go to completion."""
    par = run_par(program, ntid, schedule=list(schedule), heap=heap)
    assert par.outcome in ("final", "schedule-exhausted")
    sim, layout = transform(program, ntid)
    state = initial_sim_state(sim, initial_par_state(program, ntid, heap).heap)
    res = run_seq(sim, state, ScriptedOracle(list(schedule)), fuel=1_000_000)
    return par, sim, layout, res


# ---- next_label / wf_stack ---------------------------------------------------

def test_next_label_head_and_empty():
    program = parse("memory { } proc m() { x := 1; while true { y := 2; } } mains [m]")
    body = program.procs[0].body
    assert next_label(Frame("m", {}, body), program) == body[0].label
    assert next_label(Frame("m", {}, (body[1],)), program) == body[1].label
    assert next_label(Frame("m", {}, ()), program) == program.procs[0].end_label


def test_wf_stack_cases():
    program = parse("""
        memory { }
        proc f() { x := 1; }
        proc m() { f(); y := 2; }
        mains [m]
    """)
    sim, layout = transform(program, 1)
    f_from = layout.from_loc["f"]
    m_from = layout.from_loc["m"]
    rest_after_call = program.procs[1].body[1:]  # y := 2

    # single frame with 0 at the base
    heap = {f_from: (0,), m_from: (0,)}
    assert wf_stack((Frame("m", {}, program.procs[1].body),), heap, 0, program, layout)

    # f called from m: f's cell must hold the caller's resumption label
    stack = (Frame("f", {}, program.procs[0].body),
             Frame("m", {}, rest_after_call))
    good = {f_from: (rest_after_call[0].label,), m_from: (0,)}
    bad = {f_from: (rest_after_call[0].label + 1,), m_from: (0,)}
    assert wf_stack(stack, good, 0, program, layout)
    assert not wf_stack(stack, bad, 0, program, layout)

    # empty stack is vacuously fine
    assert wf_stack((), {}, 0, program, layout)


# ---- states_equivalent ---------------------------------------------------------

def test_init_states_equivalent_all_conditions(corpus_case):
    name, program, ntid = corpus_case
    res = check_init(program, ntid)
    assert res.ok, f"{name}: {res.detail}"


def test_pct_zero_with_running_thread_fails_3b():
    program = load_corpus_program("racy_counter.par")
    res = check_init(program, 2)
    sim, layout = transform(program, 2)
    heap = dict(res.sim_state.heap)
    heap[layout.pct] = (0, heap[layout.pct][1])
    broken = SeqState(res.sim_state.stack, heap)
    report = states_equivalent(res.par_state, broken, layout, program, 2)
    assert not report.ok
    assert report.conditions["pct-terminated"] is False
    assert report.conditions["pct-running"] is False


def test_mid_iteration_state_fails_condition_5():
    program = load_corpus_program("racy_counter.par")
    res = check_init(program, 2)
    sim, layout = transform(program, 2)
    out = step_seq(sim, res.sim_state, ScriptedOracle([0]))  # loop re-test
    assert isinstance(out, Stepped)
    report = states_equivalent(res.par_state, out.state, layout, program, 2)
    assert report.conditions["sim-loop"] is False


def test_heap_mismatch_fails_condition_1():
    program = load_corpus_program("racy_counter.par")
    res = check_init(program, 2)
    sim, layout = transform(program, 2)
    heap = dict(res.sim_state.heap)
    heap["c"] = (41,)
    report = states_equivalent(res.par_state, SeqState(res.sim_state.stack, heap),
                               layout, program, 2)
    assert report.conditions["heap"] is False


def test_split_heap_partitions():
    program = load_corpus_program("racy_counter.par")
    sim, layout = transform(program, 2)
    res = check_init(program, 2)
    split = split_heap(res.sim_state.heap, layout, program)
    assert set(split.par_part) == {"c"}
    assert set(split.sim_part) == layout.sim_locations()
    with pytest.raises(ValueError):
        split_heap({"ghost": (0,)}, layout, program)


# ---- filtering -----------------------------------------------------------------

def test_filter_drops_tau_and_sim_heap_ops():
    program = load_corpus_program("racy_counter.par")
    _, layout = transform(program, 2)
    sim_x = layout.simvar[("incr", "v")]
    assert filter_sim_trace([Tau(), WriteAct(sim_x, 0, 5)], layout) == []


def test_filter_keeps_select_and_par_ops():
    program = load_corpus_program("racy_counter.par")
    _, layout = transform(program, 2)
    trace = [CallAct("select", (Loc(layout.ptid), Loc(layout.pct))),
             ReadAct("c", 0, 7)]
    assert filter_sim_trace(trace, layout) == trace


def test_filter_drops_non_call_dispatches():
    program = load_corpus_program("racy_counter.par")
    _, layout = transform(program, 2)
    # label of an assignment: its simulating procedure is not a kept category
    assign_label = program.procs[0].body[0].label
    assert assign_label not in layout.call_labels
    assert filter_sim_trace([CallAct(to_name(assign_label), (0,))], layout) == []
    # a user call's dispatch and a return proc's dispatch stay
    program2 = load_corpus_program("call_chain.par")
    _, layout2 = transform(program2, 2)
    call_label = next(iter(layout2.call_labels))
    ret_label = next(iter(layout2.return_label))
    kept = [CallAct(to_name(call_label), (0,)), ReturnAct(to_name(ret_label))]
    assert filter_sim_trace(kept, layout2) == kept


def test_filter_idempotent_on_corpus_runs():
    # deterministic round-robin schedules over the corpus
    from conftest import CORPUS
    for name, ntid in CORPUS:
        program = load_corpus_program(name)
        schedule = _round_robin_schedule(program, ntid)
        _, _, layout, res = sim_run_for_schedule(program, ntid, schedule)
        once = filter_sim_trace(res.actions, layout)
        assert filter_sim_trace(once, layout) == once


def _round_robin_schedule(program, ntid, limit=400):
    from seqsim import enabled_threads, step_par
    state = initial_par_state(program, ntid)
    schedule = []
    step = 0
    while len(schedule) < limit:
        enabled = enabled_threads(state)
        if not enabled:
            return schedule
        pick = min((x for x in enabled if x >= step % ntid), default=enabled[0])
        _, state = step_par(program, state, pick)
        schedule.append(pick)
        step += 1
    raise AssertionError("schedule limit hit")


# ---- lifting -------------------------------------------------------------------

def test_lift_assign_segment_is_tau():
    program = load_corpus_program("racy_counter.par")
    par, sim, layout, res = sim_run_for_schedule(program, 2, [0])
    events = lift_sim_trace(res.actions, layout, program, res.select_choices)
    assert events[0] == EventPar(0, Tau())


def test_lift_atomic_segment():
    program = load_corpus_program("atomic_transfer.par")
    heap = {"A": (7,), "B": (0,)}
    par, sim, layout, res = sim_run_for_schedule(program, 2, [0, 0], heap=heap)
    events = lift_sim_trace(res.actions, layout, program, res.select_choices)
    assert events[1] == EventPar(0, AtomicAct((ReadAct("A", 0, 7), WriteAct("B", 0, 7))))


def test_lift_call_and_return_segments():
    program = load_corpus_program("call_chain.par")
    par, sim, layout, res = sim_run_for_schedule(program, 2, [0, 0, 0, 0, 0])
    events = lift_sim_trace(res.actions, layout, program, res.select_choices)
    assert events[0] == EventPar(0, CallAct("add_store", (1, 2)))
    assert any(e == EventPar(0, ReturnAct("add_store")) for e in events)


def test_lift_error_without_dispatch():
    program = load_corpus_program("racy_counter.par")
    _, layout = transform(program, 2)
    trace = [CallAct("select", (Loc(layout.ptid), Loc(layout.pct))), Tau()]
    with pytest.raises(LiftError):
        lift_sim_trace(trace, layout, program, [0])


# ---- trace equivalence -----------------------------------------------------------

def test_init_only_trace_is_equivalent_to_empty():
    program = load_corpus_program("racy_counter.par")
    sim, layout = transform(program, 2)
    state = initial_sim_state(sim, initial_par_state(program, 2).heap)
    run = run_to_loop_head(sim, state, layout)
    assert run.status == "loop-head"
    ok, why = traces_equivalent([], run.actions, layout, program, [])
    assert ok, why


def test_racy_counter_scripted_equivalence():
    program = load_corpus_program("racy_counter.par")
    for schedule in ([0, 0, 0, 0, 1, 1, 1, 1], [0, 1, 0, 1, 0, 1, 0, 1],
                     [1, 1, 0, 0, 1, 0, 1, 0]):
        par, sim, layout, res = sim_run_for_schedule(program, 2, schedule)
        assert res.outcome == "final"
        ok, why = traces_equivalent(par.events, res.actions, layout, program,
                                    res.select_choices)
        assert ok, f"{schedule}: {why}"


def test_mismatched_write_not_equivalent():
    program = load_corpus_program("racy_counter.par")
    par, sim, layout, res = sim_run_for_schedule(program, 2, [0, 0, 0, 0, 1, 1, 1, 1])
    wrong = [EventPar(e.tid, WriteAct(e.action.loc, e.action.offset, 99))
             if isinstance(e.action, WriteAct) else e
             for e in par.events]
    ok, why = traces_equivalent(wrong, res.actions, layout, program,
                                res.select_choices)
    assert not ok


def test_normalize_par_event_reduces_atomics():
    e = EventPar(1, AtomicAct((Tau(), CallAct("f", ()), ReadAct("a", 0, 1),
                               ReturnAct("f"), WriteAct("a", 0, 2))))
    assert normalize_par_event(e) == EventPar(1, AtomicAct((ReadAct("a", 0, 1),
                                                            WriteAct("a", 0, 2))))
    plain = EventPar(0, Tau())
    assert normalize_par_event(plain) == plain


def test_segment_per_event_granularity(corpus_case):
    name, program, ntid = corpus_case
    schedule = _round_robin_schedule(program, ntid)
    par, sim, layout, res = sim_run_for_schedule(program, ntid, schedule)
    events = lift_sim_trace(res.actions, layout, program, res.select_choices)
    assert len(events) == len(par.events)
    ok, why = traces_equivalent(par.events, res.actions, layout, program,
                                res.select_choices)
    assert ok, f"{name}: {why}"
