"""Extended dissipativity criteria and trajectory certification."""

from .dissipativity import (
    PRESETS,
    Assumption1Report,
    AssumptionCheck,
    CertificationReport,
    PerformanceSpec,
    certify,
    jensen_bound,
    preset,
    storage_rho,
    supply_rate,
    validate_assumption1,
    young_bound,
)

__all__ = [
    "PRESETS",
    "Assumption1Report",
    "AssumptionCheck",
    "CertificationReport",
    "PerformanceSpec",
    "certify",
    "jensen_bound",
    "preset",
    "storage_rho",
    "supply_rate",
    "validate_assumption1",
    "young_bound",
]
