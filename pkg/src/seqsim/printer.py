"""Canonical pretty-printer.

Labels are emitted as leading `/*label,next*/` comments, so printed programs
re-parse cleanly and re-deriving labels canonically reproduces them:
parse(print(p)) is structurally equal to p for canonically labeled p.
"""

from __future__ import annotations

from .lang import (
    Assign, Atomic, Call, Code, Const, Expr, If, LabeledInstr, Loc,
    Program, ProgramPar, Read, Var, While, Write,
)

_PREC = {"||": 1, "&&": 2, "=": 3, "!=": 3, "<": 3, "<=": 3,
         "+": 4, "-": 4, "*": 5, "!": 6}


def print_expr(e: Expr) -> str:
    return _expr(e, 0)


def _expr(e: Expr, parent: int, right: bool = False) -> str:
    if isinstance(e, Const):
        v = e.value
        if type(v) is bool:
            return "true" if v else "false"
        if isinstance(v, Loc):
            return f"&{v.name}"
        return str(v)
    if isinstance(e, Var):
        return e.name
    prec = _PREC[e.op]
    if e.op == "!":
        return f"!{_expr(e.args[0], prec)}"
    a = _expr(e.args[0], prec)
    b = _expr(e.args[1], prec, right=True)
    text = f"{a} {e.op} {b}"
    # parenthesize when binding looser than the context, or when we are the
    # right operand at equal precedence (all binary operators associate left)
    if prec < parent or (prec == parent and right):
        return f"({text})"
    return text


def _instr(li: LabeledInstr, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    tag = f"/*{li.label},{li.next}*/ " if li.label else ""
    ins = li.instr
    if isinstance(ins, Assign):
        out.append(f"{pad}{tag}{ins.x} := {print_expr(ins.expr)};")
    elif isinstance(ins, Write):
        out.append(f"{pad}{tag}{ins.x}[{print_expr(ins.offset)}] := {print_expr(ins.value)};")
    elif isinstance(ins, Read):
        out.append(f"{pad}{tag}{ins.x} := {ins.y}[{print_expr(ins.offset)}];")
    elif isinstance(ins, While):
        out.append(f"{pad}{tag}while {print_expr(ins.cond)} {{")
        _code(ins.body, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(ins, If):
        out.append(f"{pad}{tag}if {print_expr(ins.cond)} {{")
        _code(ins.then, indent + 1, out)
        out.append(f"{pad}}} else {{")
        _code(ins.orelse, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(ins, Call):
        args = ", ".join(print_expr(a) for a in ins.args)
        out.append(f"{pad}{tag}{ins.name}({args});")
    elif isinstance(ins, Atomic):
        out.append(f"{pad}{tag}atomic {{")
        _code(ins.body, indent + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"unknown instruction {ins!r}")


def _code(code: Code, indent: int, out: list[str]) -> None:
    for li in code:
        _instr(li, indent, out)


def print_program(program: Program) -> str:
    out: list[str] = ["memory {"]
    for name, size in program.memory:
        out.append(f"  {name}: {size};")
    out.append("}")
    for p in program.procs:
        params = ", ".join(p.params)
        out.append("")
        if not p.body:
            out.append(f"proc {p.name}({params}) {{ }}")
            continue
        out.append(f"proc {p.name}({params}) {{")
        _code(p.body, 1, out)
        out.append("}")
    if isinstance(program, ProgramPar):
        out.append("")
        out.append(f"mains [{', '.join(program.mains)}]")
    out.append("")
    return "\n".join(out)
