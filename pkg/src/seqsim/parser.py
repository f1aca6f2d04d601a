"""Concrete syntax.

    program      := memory-block proc* mains-block?
    memory-block := "memory" "{" (IDENT ":" NAT ";")* "}"
    proc         := "proc" IDENT "(" [IDENT ("," IDENT)*] ")" block
    block        := "{" instr* "}"
    instr        := IDENT ":=" expr ";"
                  | IDENT "[" expr "]" ":=" expr ";"
                  | IDENT ":=" IDENT "[" expr "]" ";"
                  | "while" expr block
                  | "if" expr block "else" block
                  | IDENT "(" [expr ("," expr)*] ")" ";"
                  | "atomic" block
    mains-block  := "mains" "[" IDENT ("," IDENT)* "]"

Expressions: integer literals (optionally negated), `true`/`false`, `&IDENT`
location constants over declared memory, variables, and the operators
`|| && = != < <= + - * !` with the usual precedence. `//` and `/* */` are
comments; generated label comments are therefore ignored on re-parse and
labels are re-derived canonically.

A file with a `mains` block parses as a parallel program, otherwise as a
sequential one. Parsing never raises: errors come back as diagnostics.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Optional

from .lang import (
    Assign, Atomic, Call, Code, Const, Expr, If, LabeledInstr, Loc, Op, Proc,
    Program, ProgramPar, ProgramSeq, Read, Span, Var, While, Write,
    label_program,
)

KEYWORDS = {"memory", "proc", "while", "if", "else", "atomic", "mains", "true", "false"}

# '$' and '#' may occur in identifiers so generated programs re-parse, but
# user-facing (parallel) programs are rejected for them by well-formedness.
IDENT_START = set(string.ascii_letters) | {"_", "$"}
IDENT_CONT = IDENT_START | set(string.digits) | {"#"}

SYMBOLS = [":=", "!=", "<=", "&&", "||", "(", ")", "[", "]", "{", "}",
           ",", ";", ":", "&", "=", "<", "+", "-", "*", "!", "|"]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error"
    code: str      # stable identifier, see wellformed.CODES as well
    message: str
    span: Optional[Span] = None

    def render(self) -> str:
        where = f"{self.span.line}:{self.span.col}: " if self.span else ""
        return f"{where}{self.severity}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "sym", "kw", "eof"
    text: str
    span: Span


class ParseError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.render())
        self.diag = diag


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    toks: list[Token] = []
    diags: list[Diagnostic] = []
    i, line, col = 0, 1, 0
    n = len(text)

    def span(l0: int, c0: int) -> Span:
        return Span(l0, c0, line, col)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 0
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        if text.startswith("/*", i):
            l0, c0 = line, col
            i += 2
            col += 2
            while i < n and not text.startswith("*/", i):
                if text[i] == "\n":
                    line += 1
                    col = 0
                else:
                    col += 1
                i += 1
            if i >= n:
                diags.append(Diagnostic("error", "syntax", "unterminated comment", span(l0, c0)))
                break
            i += 2
            col += 2
            continue
        l0, c0 = line, col
        if c in IDENT_START:
            j = i
            while j < n and text[j] in IDENT_CONT:
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, span(l0, c0)))
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            toks.append(Token("int", word, span(l0, c0)))
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                i += len(sym)
                col += len(sym)
                toks.append(Token("sym", sym, span(l0, c0)))
                break
        else:
            diags.append(Diagnostic("error", "syntax", f"unexpected character {c!r}", span(l0, c0)))
            i += 1
            col += 1
    toks.append(Token("eof", "", Span(line, col, line, col)))
    return toks, diags


class _Parser:
    def __init__(self, toks: list[Token], memory_locs: set[str]):
        self.toks = toks
        self.pos = 0
        self.memory_locs = memory_locs

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, message: str, span: Optional[Span] = None) -> ParseError:
        return ParseError(Diagnostic("error", "syntax", message, span or self.peek().span))

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            found = repr(t.text) if t.text else "end of file"
            raise self.fail(f"expected {want!r}, found {found}")
        return self.next()

    def at_sym(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text == text

    def at_kw(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text == text

    # ---- program structure ----

    def program(self) -> Program:
        memory = self.memory_block()
        self.memory_locs.update(name for name, _ in memory)
        procs: list[Proc] = []
        while self.at_kw("proc"):
            procs.append(self.proc())
        mains: Optional[tuple[str, ...]] = None
        if self.at_kw("mains"):
            mains = self.mains_block()
        t = self.peek()
        if t.kind != "eof":
            raise self.fail(f"unexpected {t.text!r} after program")
        if mains is not None:
            return ProgramPar(tuple(procs), memory, mains)
        return ProgramSeq(tuple(procs), memory)

    def memory_block(self) -> tuple[tuple[str, int], ...]:
        self.expect("kw", "memory")
        self.expect("sym", "{")
        entries: list[tuple[str, int]] = []
        while not self.at_sym("}"):
            name = self.expect("ident")
            self.expect("sym", ":")
            size = self.expect("int")
            self.expect("sym", ";")
            entries.append((name.text, int(size.text)))
        self.expect("sym", "}")
        return tuple(entries)

    def proc(self) -> Proc:
        start = self.expect("kw", "proc").span
        name = self.expect("ident")
        self.expect("sym", "(")
        params: list[str] = []
        if not self.at_sym(")"):
            params.append(self.expect("ident").text)
            while self.at_sym(","):
                self.next()
                params.append(self.expect("ident").text)
        self.expect("sym", ")")
        body = self.block()
        return Proc(name.text, tuple(params), body, span=start)

    def mains_block(self) -> tuple[str, ...]:
        self.expect("kw", "mains")
        self.expect("sym", "[")
        names = [self.expect("ident").text]
        while self.at_sym(","):
            self.next()
            names.append(self.expect("ident").text)
        self.expect("sym", "]")
        return tuple(names)

    def block(self) -> Code:
        self.expect("sym", "{")
        out: list[LabeledInstr] = []
        while not self.at_sym("}"):
            out.append(self.instr())
        self.expect("sym", "}")
        return tuple(out)

    def instr(self) -> LabeledInstr:
        t = self.peek()
        span = t.span
        if self.at_kw("while"):
            self.next()
            cond = self.expr()
            body = self.block()
            return LabeledInstr(0, 0, While(cond, body), span)
        if self.at_kw("if"):
            self.next()
            cond = self.expr()
            then = self.block()
            self.expect("kw", "else")
            orelse = self.block()
            return LabeledInstr(0, 0, If(cond, then, orelse), span)
        if self.at_kw("atomic"):
            self.next()
            body = self.block()
            return LabeledInstr(0, 0, Atomic(body), span)
        name = self.expect("ident")
        if self.at_sym("("):
            self.next()
            args: list[Expr] = []
            if not self.at_sym(")"):
                args.append(self.expr())
                while self.at_sym(","):
                    self.next()
                    args.append(self.expr())
            self.expect("sym", ")")
            self.expect("sym", ";")
            return LabeledInstr(0, 0, Call(name.text, tuple(args)), span)
        if self.at_sym("["):
            self.next()
            offset = self.expr()
            self.expect("sym", "]")
            self.expect("sym", ":=")
            value = self.expr()
            self.expect("sym", ";")
            return LabeledInstr(0, 0, Write(name.text, offset, value), span)
        self.expect("sym", ":=")
        # `x := y[e];` is a heap read; anything else is a local assignment
        if self.peek().kind == "ident" and self.peek(1).kind == "sym" and self.peek(1).text == "[":
            src = self.next()
            self.next()  # "["
            offset = self.expr()
            self.expect("sym", "]")
            self.expect("sym", ";")
            return LabeledInstr(0, 0, Read(name.text, src.text, offset), span)
        e = self.expr()
        self.expect("sym", ";")
        return LabeledInstr(0, 0, Assign(name.text, e), span)

    # ---- expressions (precedence climbing) ----

    def expr(self) -> Expr:
        return self.or_expr()

    def binary(self, sub, ops: tuple[str, ...]) -> Expr:
        e = sub()
        while self.peek().kind == "sym" and self.peek().text in ops:
            op = self.next().text
            e = Op(op, (e, sub()))
        return e

    def or_expr(self) -> Expr:
        return self.binary(self.and_expr, ("||",))

    def and_expr(self) -> Expr:
        return self.binary(self.cmp_expr, ("&&",))

    def cmp_expr(self) -> Expr:
        return self.binary(self.add_expr, ("=", "!=", "<", "<="))

    def add_expr(self) -> Expr:
        return self.binary(self.mul_expr, ("+", "-"))

    def mul_expr(self) -> Expr:
        return self.binary(self.unary_expr, ("*",))

    def unary_expr(self) -> Expr:
        if self.at_sym("!"):
            self.next()
            return Op("!", (self.unary_expr(),))
        return self.primary()

    def primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if self.at_sym("-") and self.peek(1).kind == "int":
            self.next()
            lit = self.next()
            return Const(-int(lit.text))
        if self.at_kw("true"):
            self.next()
            return Const(True)
        if self.at_kw("false"):
            self.next()
            return Const(False)
        if self.at_sym("&"):
            self.next()
            name = self.expect("ident")
            if name.text not in self.memory_locs:
                raise ParseError(Diagnostic(
                    "error", "unknown-location",
                    f"location constant &{name.text} does not name declared memory",
                    name.span))
            return Const(Loc(name.text))
        if t.kind == "ident":
            self.next()
            return Var(t.text)
        if self.at_sym("("):
            self.next()
            e = self.expr()
            self.expect("sym", ")")
            return e
        found = repr(t.text) if t.text else "end of file"
        raise self.fail(f"expected expression, found {found}")


def parse_program(text: str, kind: Optional[str] = None
                  ) -> tuple[Optional[Program], list[Diagnostic]]:
    """Parse and canonically label a program.

    `kind` is "parallel", "sequential", or None to infer from the presence of
    a mains block. Returns (program, diagnostics); the program is None when a
    diagnostic prevented parsing, and a sequential program containing
    `atomic` yields an atomic-in-sequential diagnostic.
    """
    toks, diags = tokenize(text)
    if diags:
        return None, diags
    parser = _Parser(toks, set())
    try:
        program = parser.program()
    except ParseError as err:
        return None, [err.diag]

    if kind == "parallel" and isinstance(program, ProgramSeq):
        return None, [Diagnostic("error", "missing-mains",
                                 "parallel program requires a mains block")]
    if kind == "sequential" and isinstance(program, ProgramPar):
        return None, [Diagnostic("error", "unexpected-mains",
                                 "sequential program must not have a mains block")]
    if isinstance(program, ProgramSeq):
        for p in program.procs:
            for li in _atomics(p.body):
                return None, [Diagnostic("error", "atomic-in-sequential",
                                         "atomic blocks are only allowed in parallel programs",
                                         li.span)]
    return label_program(program), []


def _atomics(code: Code):
    for li in code:
        ins = li.instr
        if isinstance(ins, Atomic):
            yield li
        elif isinstance(ins, While):
            yield from _atomics(ins.body)
        elif isinstance(ins, If):
            yield from _atomics(ins.then)
            yield from _atomics(ins.orelse)
