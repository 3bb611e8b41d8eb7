"""
it2synth
========

Controller synthesis and verification for interval type-2 Takagi-Sugeno
fuzzy large-scale systems: membership-function-dependent LMI assembly,
decentralized state-feedback gain recovery, closed-loop simulation and
extended-dissipativity certification.
"""

__version__ = "0.3.0"
__author__ = "it2synth developers"
