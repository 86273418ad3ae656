"""Small dense conic (LP/SDP) modeling layer and interior-point solver."""

from .ipm import StandardForm, solve_standard
from .program import (
    Block,
    ConicProgram,
    ConicSolution,
    Constraint,
    KktResiduals,
    Lmi,
    ProgramBuilder,
    dump_program,
    kkt_residuals,
    load_program,
    lower,
    solve,
)

__all__ = [
    "Block",
    "ConicProgram",
    "ConicSolution",
    "Constraint",
    "KktResiduals",
    "Lmi",
    "ProgramBuilder",
    "StandardForm",
    "dump_program",
    "kkt_residuals",
    "load_program",
    "lower",
    "solve",
    "solve_standard",
]
