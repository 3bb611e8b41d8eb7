"""LMI assembly, gain recovery and attenuation-level minimization."""

from .design import (
    BisectionStep,
    SynthesisResult,
    is_monotone,
    minimize_gamma,
    recover_gains,
    synthesize,
)
from .theorems import (
    THEOREMS,
    LmiFamily,
    SubsystemLayout,
    SynthesisOptions,
    assemble,
    assemble_theorem1,
    assemble_theorem2,
    expected_counts,
    interconnection_bound,
    interconnection_table,
    variable_tally,
)

__all__ = [
    "BisectionStep",
    "LmiFamily",
    "SubsystemLayout",
    "SynthesisOptions",
    "SynthesisResult",
    "THEOREMS",
    "assemble",
    "assemble_theorem1",
    "assemble_theorem2",
    "expected_counts",
    "interconnection_bound",
    "interconnection_table",
    "is_monotone",
    "minimize_gamma",
    "recover_gains",
    "synthesize",
    "variable_tally",
]
