"""State-box gridding and footprint-of-uncertainty partitioning."""

from .fou import (
    EnvelopeAudit,
    FouPartition,
    InterpWeights,
    PartitionBuilder,
    StateBox,
    active_subfou,
    audit_envelope,
    build_partition,
    interp_weights,
    load_partition,
    reconstruct_bounds,
    save_partition,
)

__all__ = [
    "EnvelopeAudit",
    "FouPartition",
    "InterpWeights",
    "PartitionBuilder",
    "StateBox",
    "active_subfou",
    "audit_envelope",
    "build_partition",
    "interp_weights",
    "load_partition",
    "reconstruct_bounds",
    "save_partition",
]
