from __future__ import annotations

from pathlib import Path

import pytest

from seqsim import parse_program

CORPUS_DIR = Path(__file__).parent / "corpus"
GOLDEN_DIR = Path(__file__).parent / "golden"

# (file, ntid) for every corpus program; all are well-formed and safe
CORPUS = [
    ("racy_counter.par", 2),
    ("racy_counter_2step.par", 2),
    ("atomic_transfer.par", 2),
    ("atomic_counter.par", 2),
    ("countdown.par", 2),
    ("call_chain.par", 2),
    ("branches.par", 2),
    ("swap_cells.par", 2),
    ("offsets.par", 2),
    ("inline_call.par", 2),
    ("loc_values.par", 2),
    ("three_threads.par", 3),
    ("empty_main.par", 2),
    ("nested_control.par", 2),
    ("atomic_control.par", 2),
    ("atomic_loop.par", 2),
    ("deep_calls.par", 2),
]


def load_corpus_program(name):
    text = (CORPUS_DIR / name).read_text(encoding="utf-8")
    program, diags = parse_program(text)
    assert not diags, f"{name}: {[d.render() for d in diags]}"
    return program


def parse(text: str):
    program, diags = parse_program(text)
    assert not diags, [d.render() for d in diags]
    return program


@pytest.fixture(params=CORPUS, ids=[name for name, _ in CORPUS])
def corpus_case(request):
    name, ntid = request.param
    return name, load_corpus_program(name), ntid
