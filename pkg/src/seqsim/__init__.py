"""seqsim: sequentialize concurrent toy programs and check the simulation.

The pipeline: parse a parallel program, compile it to a sequential program
whose main loop enumerates thread interleavings, then check on concrete
executions that the two stay in lockstep (state equivalence at every loop
head, trace equivalence event by event).
"""

from .lang import (
    Assign, Atomic, Call, Code, Const, Expr, If, Instr, LabeledInstr, Loc,
    MemorySpec, Op, Proc, Program, ProgramPar, ProgramSeq, Read, Span, Value,
    Var, While, Write, begin_label, end_label, label_program,
)
from .parser import Diagnostic, parse_program
from .printer import print_expr, print_program
from .wellformed import WellFormednessError, check_well_formed
from .semseq import (
    ActionSeq, Blocked, CallAct, ChoiceOracle, Final, Frame, Heap, RandomOracle,
    ReadAct, ReturnAct, RunResult, ScriptedOracle, SeqState, Stepped, Tau,
    WriteAct, eval_expr, initial_heap, initial_seq_state, run_seq,
    select_candidates, step_seq,
)
from .sempar import (
    AtomicAct, EventPar, ParState, enabled_threads, initial_par_state,
    run_par, step_par,
)
from .transform import SimLayout, plan_layout, transform
from .equiv import (
    EquivReport, HeapSplit, LiftError, filter_sim_trace, lift_sim_trace,
    next_label, split_heap, states_equivalent, traces_equivalent, wf_stack,
)
from .explorer import (
    ExplorationResult, SimulationVerdict, check_backward_step, check_forward_step,
    check_init, explore_par, explore_sim, verify_program, verify_transformed,
)

__version__ = "0.1.0"
