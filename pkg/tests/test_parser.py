from __future__ import annotations

import random

from seqsim import parse_program, print_program, transform
from seqsim.lang import Const, Op, Var
from seqsim.printer import print_expr
from seqsim.parser import tokenize

from conftest import CORPUS, load_corpus_program, parse

import pytest


def test_minimal_program():
    p = parse("memory { c: 1; } proc m() { x := 1; } mains [m]")
    assert len(p.procs) == 1
    assert p.memory == (("c", 1),)
    assert p.mains == ("m",)


def test_kind_inference():
    par, _ = parse_program("memory { } proc m() { } mains [m]")
    seq, _ = parse_program("memory { } proc m() { }")
    assert type(par).__name__ == "ProgramPar"
    assert type(seq).__name__ == "ProgramSeq"


def test_atomic_in_sequential_rejected():
    program, diags = parse_program("memory { } proc m() { atomic { } }")
    assert program is None
    assert [d.code for d in diags] == ["atomic-in-sequential"]


def test_kind_gate():
    program, diags = parse_program("memory { } proc m() { }", kind="parallel")
    assert program is None and diags[0].code == "missing-mains"
    program, diags = parse_program("memory { } proc m() { } mains [m]", kind="sequential")
    assert program is None and diags[0].code == "unexpected-mains"


def test_missing_semicolon_has_span():
    text = "memory { }\nproc m() {\n  x := 1\n}\n"
    program, diags = parse_program(text)
    assert program is None
    assert diags[0].code == "syntax"
    assert diags[0].span is not None
    assert diags[0].span.line == 4  # the '}' where ';' was expected
    lines = text.count("\n") + 1
    assert 1 <= diags[0].span.line <= lines


def test_unknown_location_constant():
    program, diags = parse_program("memory { a: 1; } proc m() { p := &b; }")
    assert program is None
    assert diags[0].code == "unknown-location"


def test_unterminated_comment():
    program, diags = parse_program("memory { } /* no end")
    assert program is None
    assert diags[0].code == "syntax"


def test_read_vs_assign_disambiguation():
    p = parse("memory { a: 1; } proc m() { x := y; q := &a; z := q[0]; }")
    body = p.procs[0].body
    assert type(body[0].instr).__name__ == "Assign"
    assert type(body[2].instr).__name__ == "Read"


def test_negative_literal():
    p = parse("memory { } proc m() { x := -3; y := 1 - -3; }")
    assert p.procs[0].body[0].instr.expr == Const(-3)


def test_precedence():
    p = parse("memory { } proc m() { x := 1 + 2 * 3 < 7 && true; }")
    e = p.procs[0].body[0].instr.expr
    assert e == Op("&&", (Op("<", (Op("+", (Const(1), Op("*", (Const(2), Const(3))))),
                               Const(7))), Const(True)))


@pytest.mark.parametrize("name,ntid", CORPUS)
def test_roundtrip_corpus(name, ntid):
    program = load_corpus_program(name)
    text = print_program(program)
    back, diags = parse_program(text)
    assert not diags
    assert back == program


@pytest.mark.parametrize("name,ntid", CORPUS)
def test_roundtrip_transformed(name, ntid):
    program = load_corpus_program(name)
    sim, _ = transform(program, ntid)
    text = print_program(sim)
    back, diags = parse_program(text)
    assert not diags
    assert back == sim


def test_empty_proc_prints_on_one_line():
    p = parse("memory { } proc f() { } mains [f]")
    assert "proc f() { }" in print_program(p)


def _random_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([Const(rng.randint(-5, 5)), Const(True), Const(False),
                           Var(rng.choice("xyz"))])
    op = rng.choice(["+", "-", "*", "=", "!=", "<", "<=", "&&", "||", "!"])
    if op == "!":
        return Op(op, (_random_expr(rng, depth - 1),))
    return Op(op, (_random_expr(rng, depth - 1), _random_expr(rng, depth - 1)))


def test_expr_print_parse_roundtrip():
    rng = random.Random(7)
    for _ in range(300):
        e = _random_expr(rng, 4)
        text = f"memory {{ }} proc m() {{ x := {print_expr(e)}; }}"
        program, diags = parse_program(text)
        assert not diags, (print_expr(e), [d.render() for d in diags])
        got = program.procs[0].body[0].instr.expr
        assert got == e, (print_expr(e), got)


def test_generated_names_lex():
    toks, diags = tokenize("$tmp := &$sim$f$x; y#1 := $tmp[$tid];")
    assert not diags
    assert toks[0].text == "$tmp"
    assert any(t.text == "y#1" for t in toks)


def test_parsing_is_total_under_fuzz():
    # garbage in, diagnostics out; the parser never raises
    rng = random.Random(1234)
    alphabet = "memory proc mains atomic while if else {}[]();:=&!<|+-*/ \n\t0123456789abc$#\"'\\\x00é"
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
        program, diags = parse_program(text)
        if program is None:
            assert diags, f"silent failure on {text!r}"
