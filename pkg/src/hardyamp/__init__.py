"""Randomness amplification from Hardy paradoxes against no-signaling adversaries."""
from .bell import (
    CHSH,
    BellScenario,
    CapacityError,
    ConditionalBox,
    DomainError,
    HardyFrame,
    StructuralError,
    classical_mdl_max,
    hardy_frame_222,
    mdl_functional,
    validate_box,
)
from .data import CountTable, ingest_counts, table1_counts
from .extractor import cg_extract, k_bits, pipeline, raz_check
from .gadgets import Gadget, GadgetGame, clifton_gadget, complete_bases, four_copy_game, verify_gadget
from .lp import LPProblem, LPSolution, solve
from .polytope import NSProgram, max_hardy_probability, max_pH_2xn, solve_ns
from .protocol import SVParams, certify, h_bound, run_protocol
from .quantum import P_STAR, THETA_STAR, hardy_box, mes_box

__version__ = "0.1.0"
