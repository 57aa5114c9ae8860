"""Simulation and verification toolkit for two-sex branching chains and
their jump-diffusion scaling limits."""

from .measures import (
    JumpMeasure,
    JointJumpMeasure,
    TruncationFunction,
    default_truncation,
    combine_nu,
    check_F0,
    check_first_moment,
    check_F6,
    check_F6_sum,
    ConditionVerdict,
    Status,
)

__version__ = "0.1.0"
