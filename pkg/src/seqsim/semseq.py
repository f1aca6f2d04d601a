"""Small-step semantics of sequential programs.

A state is a stack of local execution contexts (topmost first) over a heap.
One `step_seq` applies exactly one rule and reports the action it produced;
`Blocked` is an ordinary outcome (dynamic type error, unbound variable,
out-of-bounds access, undefined procedure, recursion, stuck select), not an
exception. The only nondeterministic rule is the built-in `select`, which
asks the supplied oracle to pick an active thread index.

Rules, in terms of the head instruction of the top context:

    x := e          update the local environment          (tau)
    x[eo] := ev     x holds location l, o < size(l)       write l o v
    x := y[eo]      y holds location l, o < size(l)       read l o v
    while / if      condition must be a bool              (tau)
    m'(es)          m' defined, arity match, m' nowhere
                    on the stack; push a fresh context    call m' vs
    (empty rest)    pop the context                       return m
    select(n,p,c)   p, c locations; pick t < n with
                    heap(c)(t) != 0; write t at p[0]      call select [p, c]
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .lang import (
    Assign, Atomic, Call, Code, Const, Expr, If, Loc, Program, ProgramSeq,
    Read, SELECT, Value, Var, While, Write, is_bool, is_int, is_loc,
    proc_map, same_value,
)

Env = dict[str, Value]
Heap = dict[str, tuple[Value, ...]]


@dataclass(frozen=True)
class Frame:
    """Local execution context: procedure, environment, remaining code."""

    proc: str
    env: Env
    rest: Code


@dataclass(frozen=True)
class SeqState:
    stack: tuple[Frame, ...]  # topmost context first
    heap: Heap

    def is_final(self) -> bool:
        return not self.stack


# ---- actions -------------------------------------------------------------

@dataclass(frozen=True)
class Tau:
    pass


@dataclass(frozen=True)
class CallAct:
    name: str
    args: tuple[Value, ...]


@dataclass(frozen=True)
class ReturnAct:
    name: str


@dataclass(frozen=True)
class ReadAct:
    loc: str
    offset: int
    value: Value


@dataclass(frozen=True)
class WriteAct:
    loc: str
    offset: int
    value: Value


ActionSeq = Union[Tau, CallAct, ReturnAct, ReadAct, WriteAct]

TAU = Tau()


# ---- step outcomes -------------------------------------------------------

@dataclass(frozen=True)
class Stepped:
    action: ActionSeq
    state: SeqState


@dataclass(frozen=True)
class Final:
    pass


@dataclass(frozen=True)
class Blocked:
    reason: str   # machine-readable, e.g. "unbound-variable"
    message: str

    def __str__(self) -> str:
        return f"blocked[{self.reason}]: {self.message}"


StepOutcome = Union[Stepped, Final, Blocked]

FINAL = Final()


# ---- expression evaluation ----------------------------------------------

class EvalError(Exception):
    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason
        self.message = message


def eval_expr(env: Env, e: Expr) -> Value:
    """Pure evaluation; raises EvalError on unbound variables and kind
    mismatches (locations support equality only)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError("unbound-variable", f"variable {e.name} is not bound") from None
    op = e.op
    args = [eval_expr(env, a) for a in e.args]
    if op in ("+", "-", "*", "<", "<="):
        a, b = args
        if not (is_int(a) and is_int(b)):
            raise EvalError("type-error", f"operator {op} needs integers")
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "<":
            return a < b
        return a <= b
    if op in ("=", "!="):
        a, b = args
        if type(a) is not type(b):
            raise EvalError("type-error", f"operator {op} needs values of the same kind")
        return (a == b) if op == "=" else (a != b)
    if op in ("&&", "||"):
        a, b = args
        if not (is_bool(a) and is_bool(b)):
            raise EvalError("type-error", f"operator {op} needs booleans")
        return (a and b) if op == "&&" else (a or b)
    if op == "!":
        (a,) = args
        if not is_bool(a):
            raise EvalError("type-error", "operator ! needs a boolean")
        return not a
    raise EvalError("type-error", f"unknown operator {op}")


# ---- oracles -------------------------------------------------------------

class OracleError(Exception):
    """A scripted oracle ran dry or picked outside the candidate set."""


class ChoiceOracle:
    """Decision source for select: picks one of the candidate thread ids.

    Exhaustive exploration does not go through an oracle; it forks on
    `select_candidates` and replays each branch with a ScriptedOracle.
    """

    def choose(self, candidates: list[int]) -> int:
        raise NotImplementedError


class ScriptedOracle(ChoiceOracle):
    def __init__(self, script: list[int]):
        self.script = list(script)
        self.used: list[int] = []

    def choose(self, candidates: list[int]) -> int:
        if not self.script:
            raise OracleError("select script exhausted")
        t = self.script.pop(0)
        if t not in candidates:
            raise OracleError(f"scripted choice {t} not in candidates {candidates}")
        self.used.append(t)
        return t


class RandomOracle(ChoiceOracle):
    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.used: list[int] = []

    def choose(self, candidates: list[int]) -> int:
        t = self.rng.choice(candidates)
        self.used.append(t)
        return t


# ---- stepping ------------------------------------------------------------

def initial_heap(program: Program, fill: Value = 0) -> Heap:
    """Zero-filled (or constant-filled) heap for the declared memory."""
    if is_loc(fill):
        raise ValueError("initial heap cells must not hold locations")
    return {name: (fill,) * size for name, size in program.memory}


def check_initial_heap(program: Program, heap: Heap) -> None:
    """Initial heaps cover the declared memory exactly, sizes match, and no
    cell holds a location."""
    declared = dict(program.memory)
    if set(heap) != set(declared):
        raise ValueError("initial heap domain differs from declared memory")
    for name, cells in heap.items():
        if len(cells) != declared[name]:
            raise ValueError(f"initial heap size mismatch at {name}")
        if any(is_loc(v) for v in cells):
            raise ValueError(f"initial heap cell of {name} holds a location")


def initial_seq_state(program: ProgramSeq, heap: Optional[Heap] = None) -> SeqState:
    if not program.procs:
        raise ValueError("program has no entry procedure")
    if heap is None:
        heap = initial_heap(program)
    else:
        check_initial_heap(program, heap)
    main = program.procs[0]
    return SeqState(stack=(Frame(main.name, {}, main.body),), heap=heap)


def _pop_instr(top: Frame, new_env: Env) -> Frame:
    return Frame(top.proc, new_env, top.rest[1:])


def select_candidates(state: SeqState) -> Optional[list[int]]:
    """Candidate thread ids of a pending select, or None when the next
    instruction is not a (well-formed enough) select."""
    if not state.stack:
        return None
    top = state.stack[0]
    if not top.rest:
        return None
    ins = top.rest[0].instr
    if not (isinstance(ins, Call) and ins.name == SELECT and len(ins.args) == 3):
        return None
    try:
        n = eval_expr(top.env, ins.args[0])
        pc = eval_expr(top.env, ins.args[2])
    except EvalError:
        return None
    if not is_int(n) or not is_loc(pc) or pc.name not in state.heap:
        return None
    cells = state.heap[pc.name]
    return [t for t in range(n) if t < len(cells) and not same_value(cells[t], 0)]


def step_seq(program: ProgramSeq, state: SeqState,
             oracle: Optional[ChoiceOracle] = None) -> StepOutcome:
    """Apply exactly one rule. Deterministic except at select, where the
    oracle resolves the choice."""
    if not state.stack:
        return FINAL
    top = state.stack[0]
    if not top.rest:
        # [return]
        return Stepped(ReturnAct(top.proc), SeqState(state.stack[1:], state.heap))
    ins = top.rest[0].instr

    try:
        if isinstance(ins, Assign):
            v = eval_expr(top.env, ins.expr)
            frame = _pop_instr(top, {**top.env, ins.x: v})
            return Stepped(TAU, SeqState((frame,) + state.stack[1:], state.heap))

        if isinstance(ins, Write):
            v = eval_expr(top.env, ins.value)
            o = eval_expr(top.env, ins.offset)
            l = top.env.get(ins.x)
            if l is None:
                return Blocked("unbound-variable", f"variable {ins.x} is not bound")
            if not is_loc(l):
                return Blocked("type-error", f"variable {ins.x} does not hold a location")
            if not is_int(o):
                return Blocked("type-error", "write offset is not an integer")
            cells = state.heap.get(l.name)
            if cells is None:
                return Blocked("unknown-location", f"location {l.name} is not allocated")
            if not 0 <= o < len(cells):
                return Blocked("out-of-bounds", f"offset {o} outside {l.name}[0..{len(cells)})")
            heap = dict(state.heap)
            heap[l.name] = cells[:o] + (v,) + cells[o + 1:]
            frame = _pop_instr(top, top.env)
            return Stepped(WriteAct(l.name, o, v),
                           SeqState((frame,) + state.stack[1:], heap))

        if isinstance(ins, Read):
            o = eval_expr(top.env, ins.offset)
            l = top.env.get(ins.y)
            if l is None:
                return Blocked("unbound-variable", f"variable {ins.y} is not bound")
            if not is_loc(l):
                return Blocked("type-error", f"variable {ins.y} does not hold a location")
            if not is_int(o):
                return Blocked("type-error", "read offset is not an integer")
            cells = state.heap.get(l.name)
            if cells is None:
                return Blocked("unknown-location", f"location {l.name} is not allocated")
            if not 0 <= o < len(cells):
                return Blocked("out-of-bounds", f"offset {o} outside {l.name}[0..{len(cells)})")
            v = cells[o]
            frame = _pop_instr(top, {**top.env, ins.x: v})
            return Stepped(ReadAct(l.name, o, v),
                           SeqState((frame,) + state.stack[1:], state.heap))

        if isinstance(ins, While):
            c = eval_expr(top.env, ins.cond)
            if not is_bool(c):
                return Blocked("type-error", "loop condition is not a boolean")
            if c:
                rest = ins.body + (top.rest[0],) + top.rest[1:]
            else:
                rest = top.rest[1:]
            frame = Frame(top.proc, top.env, rest)
            return Stepped(TAU, SeqState((frame,) + state.stack[1:], state.heap))

        if isinstance(ins, If):
            c = eval_expr(top.env, ins.cond)
            if not is_bool(c):
                return Blocked("type-error", "branch condition is not a boolean")
            rest = (ins.then if c else ins.orelse) + top.rest[1:]
            frame = Frame(top.proc, top.env, rest)
            return Stepped(TAU, SeqState((frame,) + state.stack[1:], state.heap))

        if isinstance(ins, Call):
            if ins.name == SELECT:
                return _step_select(state, top, ins, oracle)
            callee = proc_map(program).get(ins.name)
            if callee is None:
                return Blocked("undefined-procedure", f"procedure {ins.name} is not defined")
            if len(ins.args) != len(callee.params):
                return Blocked("arity-mismatch",
                               f"{ins.name} takes {len(callee.params)} argument(s)")
            if any(f.proc == ins.name for f in state.stack):
                return Blocked("recursive-call", f"{ins.name} is already on the stack")
            vals = [eval_expr(top.env, a) for a in ins.args]
            caller = _pop_instr(top, top.env)
            callee_frame = Frame(ins.name, dict(zip(callee.params, vals)), callee.body)
            return Stepped(CallAct(ins.name, tuple(vals)),
                           SeqState((callee_frame, caller) + state.stack[1:], state.heap))

        if isinstance(ins, Atomic):
            return Blocked("atomic-instr", "atomic blocks have no sequential rule")

    except EvalError as err:
        return Blocked(err.reason, err.message)

    return Blocked("no-rule", f"no rule for {type(ins).__name__}")


def _step_select(state: SeqState, top: Frame, ins: Call,
                 oracle: Optional[ChoiceOracle]) -> StepOutcome:
    if len(ins.args) != 3:
        return Blocked("arity-mismatch", "select takes 3 arguments")
    n = eval_expr(top.env, ins.args[0])
    tid = eval_expr(top.env, ins.args[1])
    pc = eval_expr(top.env, ins.args[2])
    if not is_int(n):
        return Blocked("type-error", "select bound is not an integer")
    if not (is_loc(tid) and is_loc(pc)):
        return Blocked("type-error", "select needs two location arguments")
    tid_cells = state.heap.get(tid.name)
    pc_cells = state.heap.get(pc.name)
    if tid_cells is None or pc_cells is None:
        return Blocked("unknown-location", "select location is not allocated")
    if not tid_cells:
        return Blocked("out-of-bounds", f"location {tid.name} has size 0")
    candidates = [t for t in range(n) if t < len(pc_cells) and not same_value(pc_cells[t], 0)]
    if not candidates:
        return Blocked("select-stuck", "no candidate thread has a nonzero counter")
    if oracle is None:
        return Blocked("select-without-oracle", "select reached without an oracle")
    t = oracle.choose(candidates)
    heap = dict(state.heap)
    heap[tid.name] = (t,) + tid_cells[1:]
    frame = _pop_instr(top, top.env)
    return Stepped(CallAct(SELECT, (tid, pc)),
                   SeqState((frame,) + state.stack[1:], heap))


# ---- multi-step execution ------------------------------------------------

@dataclass
class RunResult:
    actions: list[ActionSeq]
    state: SeqState
    outcome: str  # "final" | "blocked" | "fuel-exhausted" | "oracle-error"
    blocked: Optional[Blocked] = None
    steps: int = 0
    # thread id chosen by each select, in order (read back from the cell the
    # select rule writes); drives trace lifting and replay
    select_choices: list[int] = field(default_factory=list)


def run_seq(program: ProgramSeq, state: SeqState,
            oracle: Optional[ChoiceOracle] = None, fuel: int = 100_000) -> RunResult:
    """Iterate step_seq until final, blocked, or out of fuel. The trace keeps
    every action, taus included; filtering is a separate concern."""
    result = RunResult([], state, "fuel-exhausted")
    for _ in range(fuel):
        try:
            out = step_seq(program, result.state, oracle)
        except OracleError as err:
            result.outcome = "oracle-error"
            result.blocked = Blocked("oracle-error", str(err))
            return result
        if isinstance(out, Final):
            result.outcome = "final"
            return result
        if isinstance(out, Blocked):
            result.outcome = "blocked"
            result.blocked = out
            return result
        _record_select(result, out)
        result.actions.append(out.action)
        result.state = out.state
        result.steps += 1
    return result


def _record_select(result: RunResult, out: Stepped) -> None:
    act = out.action
    if isinstance(act, CallAct) and act.name == SELECT:
        tid_loc = act.args[0]
        assert isinstance(tid_loc, Loc)
        chosen = out.state.heap[tid_loc.name][0]
        assert is_int(chosen)
        result.select_choices.append(chosen)


# ---- canonical state keys ------------------------------------------------

def canon_env(env: Env) -> tuple:
    return tuple(sorted(env.items(), key=lambda kv: kv[0]))


def canon_heap(heap: Heap) -> tuple:
    return tuple(sorted(heap.items()))


def canon_frame(f: Frame) -> tuple:
    return (f.proc, canon_env(f.env), f.rest)


def canon_seq_state(s: SeqState) -> tuple:
    """Hashable key that never merges states differing in any env binding,
    heap cell, stack frame, or remaining code."""
    return (tuple(canon_frame(f) for f in s.stack), canon_heap(s.heap))
