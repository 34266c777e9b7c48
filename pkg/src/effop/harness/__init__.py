"""Supporting engineering: file I/O, seeded generators, the invariant
battery and the command-line interface."""

from .generate import KINDS, PRNG_ID, ProblemSpec, commuting_partners, gap_separated, generate
from .matio import (
    read_decoupling_map,
    read_matrix,
    read_observable,
    write_decoupling_map,
    write_effective,
    write_matrix,
    write_observable,
)
from .report import CheckResult, Report
from .verify import run_verification

__all__ = [
    "KINDS",
    "PRNG_ID",
    "ProblemSpec",
    "generate",
    "gap_separated",
    "commuting_partners",
    "read_matrix",
    "write_matrix",
    "read_observable",
    "write_observable",
    "read_decoupling_map",
    "write_decoupling_map",
    "write_effective",
    "CheckResult",
    "Report",
    "run_verification",
]
