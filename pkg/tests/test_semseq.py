from __future__ import annotations

import random

import pytest

from seqsim import (
    Blocked, CallAct, Final, Loc, ReadAct, ReturnAct, ScriptedOracle,
    RandomOracle, Stepped, Tau, WriteAct, eval_expr, initial_seq_state,
    run_seq, select_candidates, step_seq,
)
from seqsim.lang import Const, Op, Var
from seqsim.semseq import EvalError, Frame, SeqState, canon_seq_state
from seqsim.parser import parse_program

from conftest import parse


def seq(text: str):
    program, diags = parse_program(text)
    assert not diags, [d.render() for d in diags]
    return program


# ---- eval_expr -------------------------------------------------------------

def test_eval_arithmetic():
    assert eval_expr({"y": 1}, Op("+", (Var("y"), Const(1)))) == 2


def test_eval_unbound():
    with pytest.raises(EvalError) as err:
        eval_expr({}, Var("x"))
    assert err.value.reason == "unbound-variable"


def test_eval_loc_equality():
    env = {"p": Loc("l1"), "q": Loc("l1"), "r": Loc("l2")}
    assert eval_expr(env, Op("=", (Var("p"), Var("q")))) is True
    assert eval_expr(env, Op("=", (Var("p"), Var("r")))) is False
    assert eval_expr(env, Op("!=", (Var("p"), Var("r")))) is True


def test_eval_loc_arithmetic_is_type_error():
    with pytest.raises(EvalError) as err:
        eval_expr({"p": Loc("l1")}, Op("+", (Var("p"), Const(1))))
    assert err.value.reason == "type-error"


def test_eval_mixed_kind_equality_is_type_error():
    with pytest.raises(EvalError):
        eval_expr({}, Op("=", (Const(1), Const(True))))


def test_eval_bool_ops_need_bools():
    with pytest.raises(EvalError):
        eval_expr({}, Op("&&", (Const(1), Const(True))))
    assert eval_expr({}, Op("||", (Const(False), Const(True)))) is True
    assert eval_expr({}, Op("!", (Const(False),))) is True


# ---- step_seq --------------------------------------------------------------

def test_assign_step():
    program = seq("memory { } proc m() { x := y + 1; }")
    state = SeqState((Frame("m", {"y": 1}, program.procs[0].body),), {})
    out = step_seq(program, state)
    assert isinstance(out, Stepped) and out.action == Tau()
    assert out.state.stack[0].env == {"y": 1, "x": 2}


def test_return_step():
    program = seq("memory { } proc m() { }")
    state = SeqState((Frame("m", {}, ()),), {})
    out = step_seq(program, state)
    assert isinstance(out, Stepped)
    assert out.action == ReturnAct("m")
    assert out.state.stack == ()


def test_final_state():
    program = seq("memory { } proc m() { }")
    assert isinstance(step_seq(program, SeqState((), {})), Final)


def test_select_single_candidate():
    program = seq("memory { tid: 1; pc: 2; } proc m() { select(2, &tid, &pc); }")
    state = initial_seq_state(program, {"tid": (0,), "pc": (0, 5)})
    assert select_candidates(state) == [1]
    out = step_seq(program, state, ScriptedOracle([1]))
    assert isinstance(out, Stepped)
    assert out.action == CallAct("select", (Loc("tid"), Loc("pc")))
    assert out.state.heap["tid"] == (1,)


def test_select_stuck_blocks():
    program = seq("memory { tid: 1; pc: 2; } proc m() { select(2, &tid, &pc); }")
    state = initial_seq_state(program, {"tid": (0,), "pc": (0, 0)})
    out = step_seq(program, state, ScriptedOracle([0]))
    assert isinstance(out, Blocked) and out.reason == "select-stuck"


def test_write_and_read_actions():
    program = seq("""
        memory { l2: 2; }
        proc m() {
          p := &l2;
          p[0] := 5;
          x := p[0];
        }
    """)
    res = run_seq(program, initial_seq_state(program))
    assert res.outcome == "final"
    assert res.actions == [Tau(), WriteAct("l2", 0, 5), ReadAct("l2", 0, 5),
                           ReturnAct("m")]


def test_out_of_bounds_blocks():
    program = seq("memory { c: 1; } proc m() { p := &c; x := p[5]; }")
    res = run_seq(program, initial_seq_state(program))
    assert res.outcome == "blocked" and res.blocked.reason == "out-of-bounds"


def test_non_bool_condition_blocks():
    program = seq("memory { } proc m() { while 1 { } }")
    res = run_seq(program, initial_seq_state(program))
    assert res.outcome == "blocked" and res.blocked.reason == "type-error"


def test_dynamic_recursion_blocks():
    # not well-formed, but the dynamic rule must still refuse it
    program = seq("memory { } proc m() { m(); }")
    res = run_seq(program, initial_seq_state(program), fuel=10)
    assert res.outcome == "blocked" and res.blocked.reason == "recursive-call"


def test_call_pushes_and_return_pops():
    program = seq("""
        memory { }
        proc m() { f(41 + 1); }
        proc f(a) { x := a; }
    """)
    res = run_seq(program, initial_seq_state(program))
    assert res.outcome == "final"
    assert res.actions == [CallAct("f", (42,)), Tau(), ReturnAct("f"),
                           ReturnAct("m")]


def test_empty_main_trace():
    program = seq("memory { } proc m() { }")
    res = run_seq(program, initial_seq_state(program))
    assert res.outcome == "final"
    assert res.actions == [ReturnAct("m")]


def test_fuel_zero():
    program = seq("memory { } proc m() { x := 1; }")
    res = run_seq(program, initial_seq_state(program), fuel=0)
    assert res.outcome == "fuel-exhausted" and res.actions == []


def test_assign_then_return_trace():
    program = seq("memory { } proc m() { x := 1; }")
    res = run_seq(program, initial_seq_state(program))
    assert res.actions == [Tau(), ReturnAct("m")]


def test_heap_domain_constant():
    program = seq("memory { a: 2; b: 1; } proc m() { p := &a; p[1] := 9; }")
    state = initial_seq_state(program)
    dom = set(state.heap)
    while True:
        out = step_seq(program, state)
        if not isinstance(out, Stepped):
            break
        assert set(out.state.heap) == dom
        state = out.state


def test_replay_reproduces_trace():
    program = seq("""
        memory { tid: 1; pc: 2; out: 1; }
        proc m() {
          q := &pc;
          q[0] := 1;
          q[1] := 1;
          select(2, &tid, &pc);
          p := &tid;
          t := p[0];
          o := &out;
          o[0] := t;
          select(2, &tid, &pc);
        }
    """)
    first = run_seq(program, initial_seq_state(program), RandomOracle(13))
    again = run_seq(program, initial_seq_state(program),
                    ScriptedOracle(first.select_choices))
    assert again.actions == first.actions
    assert again.state == first.state


# ---- determinism under different oracles -----------------------------------

def _random_states(program, rng, n):
    """Pool of states: those visited along random runs, plus fuzzed frames."""
    states = []
    state = initial_seq_state(program)
    for _ in range(n):
        states.append(state)
        out = step_seq(program, state, RandomOracle(rng.randint(0, 999)))
        if not isinstance(out, Stepped):
            state = initial_seq_state(program)
        else:
            state = out.state
    # fuzzed: random envs and rests drawn from the program text
    instrs = [li for p in program.procs for li in p.body]
    values = [0, 1, True, False, Loc("a"), Loc("zzz"), -3]
    for _ in range(n):
        env = {name: rng.choice(values) for name in "xyzpq" if rng.random() < 0.6}
        rest = tuple(rng.choice(instrs) for _ in range(rng.randint(0, 2)))
        heap = {"a": tuple(rng.choice(values) for _ in range(2))}
        states.append(SeqState((Frame("m", env, rest),), heap))
    return states


def test_determinism_under_different_oracles():
    program = seq("""
        memory { a: 2; }
        proc f(k) { r := k * 2; }
        proc m() {
          p := &a;
          x := p[0];
          if x = 0 { p[1] := 3; } else { }
          i := 2;
          while 0 < i { i := i - 1; }
          f(4);
        }
    """)
    rng = random.Random(99)
    states = _random_states(program, rng, 600)
    checked = 0
    for state in states:
        if select_candidates(state):
            continue
        a = step_seq(program, state, ScriptedOracle([0, 1] * 50))
        b = step_seq(program, state, RandomOracle(4242))
        assert a == b
        checked += 1
    assert checked >= 1000


def test_canonical_key_distinguishes():
    f1 = Frame("m", {"x": 1}, ())
    f2 = Frame("m", {"x": 2}, ())
    s1 = SeqState((f1,), {"a": (0,)})
    s2 = SeqState((f2,), {"a": (0,)})
    s3 = SeqState((f1,), {"a": (1,)})
    keys = {canon_seq_state(s) for s in (s1, s2, s3)}
    assert len(keys) == 3
    assert canon_seq_state(s1) == canon_seq_state(SeqState((Frame("m", {"x": 1}, ()),),
                                                           {"a": (0,)}))
