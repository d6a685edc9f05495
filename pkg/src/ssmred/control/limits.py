"""Slew-rate limiting followed by saturation."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SafetyLimits:
    v_min: float = 0.0
    v_max: float = 5.0
    dv_max: float = 0.02

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")
        if not self.dv_max > 0:
            raise ValueError("dv_max must be positive")

    def violates(self, prev_applied: float, candidate: float) -> bool:
        """Whether ``candidate`` would be changed by either limit."""
        return (
            candidate < self.v_min
            or candidate > self.v_max
            or abs(candidate - prev_applied) > self.dv_max
        )


def rate_limit(prev_applied: float, candidate: float, dv_max: float) -> float:
    return min(max(candidate, prev_applied - dv_max), prev_applied + dv_max)


def saturate(value: float, v_min: float, v_max: float) -> float:
    return min(max(value, v_min), v_max)


def apply_limits(prev_applied: float, candidate: float, limits: SafetyLimits) -> float:
    """``sat(rl(candidate))``: the slew bound first, then the voltage range."""
    return saturate(rate_limit(prev_applied, candidate, limits.dv_max), limits.v_min, limits.v_max)
