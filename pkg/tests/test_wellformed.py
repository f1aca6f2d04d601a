from __future__ import annotations

from seqsim import check_well_formed, parse_program, transform

from conftest import CORPUS, load_corpus_program, parse

import pytest


def codes(text: str, ntid=None):
    program, diags = parse_program(text)
    assert not diags, [d.render() for d in diags]
    return sorted({d.code for d in check_well_formed(program, ntid)})


def test_self_recursion():
    assert codes("memory { } proc f() { f(); } mains [f]") == ["recursion"]


def test_mutual_recursion():
    text = """
        memory { }
        proc f() { g(); }
        proc g() { f(); }
        mains [f]
    """
    assert codes(text) == ["recursion"]


def test_reserved_proc_names():
    assert codes("memory { } proc select() { } proc m() { } mains [m]") == ["reserved-name"]
    assert codes("memory { } proc interleavings() { } proc m() { } mains [m]") == ["reserved-name"]
    assert codes("memory { } proc L7() { } proc m() { } mains [m]") == ["reserved-name"]


def test_nested_atomic():
    text = "memory { } proc m() { atomic { atomic { } } } mains [m]"
    assert codes(text) == ["nested-atomic"]


def test_select_called_by_user():
    text = "memory { p: 1; c: 1; } proc m() { select(1, &p, &c); } mains [m]"
    assert codes(text) == ["select-call"]


def test_ntid_bounds():
    text = "memory { } proc m() { } mains [m]"
    assert codes(text, ntid=2) == ["bad-ntid"]
    assert codes(text, ntid=0) == ["bad-ntid"]
    assert codes(text, ntid=1) == []


def test_undefined_and_arity():
    assert codes("memory { } proc m() { nope(); } mains [m]") == ["undefined-proc"]
    text = "memory { } proc f(a) { } proc m() { f(1, 2); } mains [m]"
    assert codes(text) == ["arity-mismatch"]


def test_duplicates():
    assert codes("memory { } proc m() { } proc m() { } mains [m]") == ["dup-proc"]
    assert codes("memory { } proc m(a, a) { } mains [m]") == ["dup-param"]
    assert codes("memory { x: 1; x: 2; } proc m() { } mains [m]") == ["dup-location"]


def test_memory_sizes():
    assert codes("memory { x: 0; } proc m() { } mains [m]") == ["bad-memory-size"]


def test_bad_mains():
    assert codes("memory { } proc m() { } mains [ghost]") == ["bad-mains"]


def test_sequential_entry_no_params():
    program, diags = parse_program("memory { } proc m(a) { }")
    assert not diags
    assert [d.code for d in check_well_formed(program)] == ["main-params"]


def test_sequential_allows_generated_names():
    # the transformation's output must pass the sequential check
    text = """
        memory { x: 1; }
        proc interleavings() { L3($tid); }
        proc L3($tid) { $tmp := &x; $tmp[$tid] := 0; }
    """
    program, diags = parse_program(text)
    assert not diags
    assert check_well_formed(program) == []


def test_select_ok_in_sequential():
    text = "memory { p: 1; c: 1; } proc m() { select(1, &p, &c); }"
    program, diags = parse_program(text)
    assert check_well_formed(program) == []
    bad = "memory { p: 1; c: 1; } proc m() { select(1, &p); }"
    program, _ = parse_program(bad)
    assert [d.code for d in check_well_formed(program)] == ["arity-mismatch"]


def test_sim_chars_rejected_in_parallel():
    program, diags = parse_program("memory { } proc m() { $x := 1; } mains [m]")
    assert not diags
    assert "sim-char-name" in codes_of(program, 1)


def codes_of(program, ntid):
    return sorted({d.code for d in check_well_formed(program, ntid)})


@pytest.mark.parametrize("name,ntid", CORPUS)
def test_corpus_accepted(name, ntid):
    program = load_corpus_program(name)
    assert check_well_formed(program, ntid) == []


@pytest.mark.parametrize("name,ntid", CORPUS)
def test_transform_output_well_formed(name, ntid):
    program = load_corpus_program(name)
    sim, _ = transform(program, ntid)
    assert check_well_formed(sim) == []


def test_diagnostics_cite_spans():
    text = "memory { }\nproc f() { f(); }\nmains [f]\n"
    program, _ = parse_program(text)
    diags = check_well_formed(program, 1)
    assert diags and all(d.span is not None for d in diags)
    nlines = text.count("\n")
    for d in diags:
        assert 1 <= d.span.line <= nlines
