"""Core language: values, expressions, instructions, programs, labeling.

Two program flavors share the instruction set: sequential programs (first
procedure is the entry point, no `atomic`) and parallel programs (a `mains`
table assigns an entry procedure to each thread, `atomic { ... }` allowed).

Values are dynamically typed: Python ints (arbitrary precision), Python bools,
and `Loc` handles for declared memory locations. Heap cells behave like fixed
size arrays indexed from 0.

Every instruction carries a pair of labels (label, next): `label` is unique
program-wide and `next` names the instruction that follows in program text.
`label_program` assigns them canonically (dense, pre-order, starting at 1);
each procedure additionally owns a fresh end label that doubles as the label
of its return point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Span:
    """Source range (1-based lines, 0-based columns) for diagnostics."""

    line: int
    col: int
    end_line: int
    end_col: int


@dataclass(frozen=True)
class Loc:
    """A memory location handle. Supports equality only, never arithmetic."""

    name: str

    def __repr__(self) -> str:
        return f"Loc({self.name})"


# A runtime value: arbitrary-precision int, bool, or location handle.
Value = Union[int, bool, Loc]


def is_int(v: Value) -> bool:
    return type(v) is int


def is_bool(v: Value) -> bool:
    return type(v) is bool


def is_loc(v: Value) -> bool:
    return type(v) is Loc


def same_value(a: Value, b: Value) -> bool:
    """Strict equality: same kind and same content (1 never equals True)."""
    return type(a) is type(b) and a == b


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Op:
    op: str  # one of OPERATORS
    args: tuple["Expr", ...]


Expr = Union[Const, Var, Op]

# operator -> arity; comparison/equality yield bools, arithmetic ints
OPERATORS = {
    "+": 2, "-": 2, "*": 2,
    "=": 2, "!=": 2, "<": 2, "<=": 2,
    "&&": 2, "||": 2, "!": 1,
}


def expr_vars(e: Expr) -> list[str]:
    """Variables of an expression in first-occurrence order."""
    out: list[str] = []
    seen: set[str] = set()

    def walk(x: Expr) -> None:
        if isinstance(x, Var):
            if x.name not in seen:
                seen.add(x.name)
                out.append(x.name)
        elif isinstance(x, Op):
            for a in x.args:
                walk(a)

    walk(e)
    return out


# --------------------------------------------------------------------------
# Instructions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    x: str
    expr: "Expr"


@dataclass(frozen=True)
class Write:
    """x[offset] := value, where x must hold a location at runtime."""

    x: str
    offset: "Expr"
    value: "Expr"


@dataclass(frozen=True)
class Read:
    """x := y[offset], where y must hold a location at runtime."""

    x: str
    y: str
    offset: "Expr"


@dataclass(frozen=True)
class While:
    cond: "Expr"
    body: "Code"


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Code"
    orelse: "Code"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Atomic:
    """Parallel programs only; body runs without interleaving."""

    body: "Code"


Instr = Union[Assign, Write, Read, While, If, Call, Atomic]


@dataclass(frozen=True)
class LabeledInstr:
    label: int
    next: int
    instr: Instr
    span: Optional[Span] = field(default=None, compare=False)


Code = tuple[LabeledInstr, ...]


@dataclass(frozen=True)
class Proc:
    name: str
    params: tuple[str, ...]
    body: Code
    # label of the procedure's return point; 0 until label_program runs
    end_label: int = 0
    span: Optional[Span] = field(default=None, compare=False)


# memory declaration: ordered (location name, size) pairs
MemorySpec = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class ProgramPar:
    procs: tuple[Proc, ...]
    memory: MemorySpec
    mains: tuple[str, ...]  # index t = entry procedure of thread t


@dataclass(frozen=True)
class ProgramSeq:
    procs: tuple[Proc, ...]  # first procedure is the entry point
    memory: MemorySpec


Program = Union[ProgramPar, ProgramSeq]

# procedure names a user program may not define or call directly
SELECT = "select"
INTERLEAVINGS = "interleavings"


def proc_map(program: Program) -> dict[str, Proc]:
    return {p.name: p for p in program.procs}


def memory_sizes(program: Program) -> dict[str, int]:
    return dict(program.memory)


def walk_code(code: Code, into_atomic: bool = True) -> Iterator[LabeledInstr]:
    """All instructions of `code`, pre-order."""
    for li in code:
        yield li
        ins = li.instr
        if isinstance(ins, While):
            yield from walk_code(ins.body, into_atomic)
        elif isinstance(ins, If):
            yield from walk_code(ins.then, into_atomic)
            yield from walk_code(ins.orelse, into_atomic)
        elif isinstance(ins, Atomic) and into_atomic:
            yield from walk_code(ins.body, into_atomic)


def walk_program(program: Program, into_atomic: bool = True) -> Iterator[tuple[str, LabeledInstr]]:
    for p in program.procs:
        for li in walk_code(p.body, into_atomic):
            yield p.name, li


def simulated_instrs(proc: Proc) -> Iterator[LabeledInstr]:
    """Instructions of `proc` that execute a step of their own: everything
    except the inside of atomic blocks (an atomic block is one step)."""

    def walk(code: Code) -> Iterator[LabeledInstr]:
        for li in code:
            yield li
            ins = li.instr
            if isinstance(ins, While):
                yield from walk(ins.body)
            elif isinstance(ins, If):
                yield from walk(ins.then)
                yield from walk(ins.orelse)

    yield from walk(proc.body)


def proc_vars(proc: Proc) -> list[str]:
    """Parameters and every variable occurring in the body, in
    first-occurrence order (parameters first)."""
    out: list[str] = []
    seen: set[str] = set()

    def add(name: str) -> None:
        if name not in seen:
            seen.add(name)
            out.append(name)

    def add_expr(e: Expr) -> None:
        for v in expr_vars(e):
            add(v)

    for p in proc.params:
        add(p)

    def walk(code: Code) -> None:
        for li in code:
            ins = li.instr
            if isinstance(ins, Assign):
                add(ins.x)
                add_expr(ins.expr)
            elif isinstance(ins, Write):
                add(ins.x)
                add_expr(ins.offset)
                add_expr(ins.value)
            elif isinstance(ins, Read):
                add(ins.x)
                add(ins.y)
                add_expr(ins.offset)
            elif isinstance(ins, While):
                add_expr(ins.cond)
                walk(ins.body)
            elif isinstance(ins, If):
                add_expr(ins.cond)
                walk(ins.then)
                walk(ins.orelse)
            elif isinstance(ins, Call):
                for a in ins.args:
                    add_expr(a)
            elif isinstance(ins, Atomic):
                walk(ins.body)

    walk(proc.body)
    return out


def label_index(program: Program) -> dict[int, tuple[str, LabeledInstr]]:
    """label -> (procedure name, instruction). Only valid on labeled programs."""
    out: dict[int, tuple[str, LabeledInstr]] = {}
    for name, li in walk_program(program):
        out[li.label] = (name, li)
    return out


# --------------------------------------------------------------------------
# Labeling
# --------------------------------------------------------------------------

def label_program(program: Program) -> Program:
    """Assign canonical labels: dense from 1 in pre-order over the program,
    then one fresh end label per procedure (allocated after all instruction
    labels, in procedure order).

    `next` rules: textual successor within a sequence; the enclosing
    conditional's `next` for the last instruction of a branch; the loop's own
    label for the last instruction of a loop body; the procedure's end label
    for the last instruction of a procedure body. An empty body makes the
    begin and end label coincide on the fresh end label.
    """
    counter = itertools.count(1)

    def number(code: Code) -> Code:
        out = []
        for li in code:
            lbl = next(counter)
            ins = li.instr
            if isinstance(ins, While):
                ins = While(ins.cond, number(ins.body))
            elif isinstance(ins, If):
                ins = If(ins.cond, number(ins.then), number(ins.orelse))
            elif isinstance(ins, Atomic):
                ins = Atomic(number(ins.body))
            out.append(LabeledInstr(lbl, 0, ins, li.span))
        return tuple(out)

    numbered = [number(p.body) for p in program.procs]
    end_labels = [next(counter) for _ in program.procs]

    def link(code: Code, follow: int) -> Code:
        out = []
        for i, li in enumerate(code):
            nxt = code[i + 1].label if i + 1 < len(code) else follow
            ins = li.instr
            if isinstance(ins, While):
                ins = While(ins.cond, link(ins.body, li.label))
            elif isinstance(ins, If):
                ins = If(ins.cond, link(ins.then, nxt), link(ins.orelse, nxt))
            elif isinstance(ins, Atomic):
                ins = Atomic(link(ins.body, nxt))
            out.append(LabeledInstr(li.label, nxt, ins, li.span))
        return tuple(out)

    procs = tuple(
        replace(p, body=link(body, elbl), end_label=elbl)
        for p, body, elbl in zip(program.procs, numbered, end_labels)
    )
    return replace(program, procs=procs)


def begin_label(program: Program, name: str) -> int:
    """Label of the first instruction of `name`'s body (its end label when
    the body is empty)."""
    proc = proc_map(program).get(name)
    if proc is None:
        raise KeyError(f"undefined procedure: {name}")
    return proc.body[0].label if proc.body else proc.end_label


def end_label(program: Program, name: str) -> int:
    """Label of `name`'s return point."""
    proc = proc_map(program).get(name)
    if proc is None:
        raise KeyError(f"undefined procedure: {name}")
    return proc.end_label
