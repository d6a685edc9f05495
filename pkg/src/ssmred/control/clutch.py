"""Side-switching state machine for the antagonistic clutched joint.

A switch releases the engaged clutch, engages the target clutch with both
voltages at zero for ``tau_eng``, ramps the active voltage over
``tau_ramp`` and then blocks further switches for ``tau_cool``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from ..plants.joint import Side


class Mode(str, Enum):
    FF_ONLY = "FfOnly"
    FB_ONLY = "FbOnly"
    FF_FB = "FfFb"

    @property
    def uses_ff(self) -> bool:
        return self is not Mode.FB_ONLY

    @property
    def uses_fb(self) -> bool:
        return self is not Mode.FF_ONLY


class Phase(str, Enum):
    IDLE = "Idle"
    ENGAGEMENT_WAIT = "EngagementWait"
    RAMPING = "Ramping"
    COOLDOWN = "Cooldown"


@dataclass(frozen=True)
class ClutchConfig:
    dead_zone_eps: float = 0.05
    tau_eng: float = 0.05
    tau_ramp: float = 0.1
    tau_cool: float = 0.2

    def __post_init__(self):
        if self.dead_zone_eps < 0 or self.tau_cool < 0:
            raise ValueError("dead zone and cooldown must be non-negative")
        if not (self.tau_eng > 0 and self.tau_ramp > 0):
            raise ValueError("tau_eng and tau_ramp must be positive")


@dataclass(frozen=True)
class ClutchState:
    """``engaged_side`` is the side transmitting torque; ``target`` the side being switched to."""

    engaged_side: Side = Side.NONE
    phase: Phase = Phase.IDLE
    steps: int = 0
    target: Side = Side.NONE

    def elapsed(self, T_s: float) -> float:
        return self.steps * T_s


def _samples(tau: float, T_s: float) -> int:
    return max(1, int(round(tau / T_s)))


def requested_side(command: float, mode: Mode, eps: float) -> Side:
    """Side asked for by the scheduling signal; NONE inside the dead zone.

    In feedforward modes the signal is the feedforward voltage and must leave
    ``[-eps, eps]``; in feedback-only mode it is the desired angle and any
    strict sign counts.
    """
    band = 0.0 if mode is Mode.FB_ONLY else eps
    if command > band:
        return Side.RIGHT
    if command < -band:
        return Side.LEFT
    return Side.NONE


def clutch_step(
    state: ClutchState,
    desired_signed_command: float,
    mode: Mode,
    config: ClutchConfig,
    T_s: float,
) -> tuple[ClutchState, bool, bool, float]:
    """Advance one sample; returns ``(state, left_on, right_on, voltage_scale)``."""
    phase = state.phase
    if phase is Phase.IDLE:
        want = requested_side(desired_signed_command, mode, config.dead_zone_eps)
        if want is not Side.NONE and want != state.engaged_side:
            state = ClutchState(Side.NONE, Phase.ENGAGEMENT_WAIT, 1, want)
    elif phase is Phase.ENGAGEMENT_WAIT:
        if state.steps >= _samples(config.tau_eng, T_s):
            state = ClutchState(state.target, Phase.RAMPING, 1, state.target)
        else:
            state = replace(state, steps=state.steps + 1)
    elif phase is Phase.RAMPING:
        if state.steps >= _samples(config.tau_ramp, T_s):
            n_cool = int(round(config.tau_cool / T_s))
            state = replace(state, phase=Phase.COOLDOWN if n_cool else Phase.IDLE, steps=1 if n_cool else 0)
        else:
            state = replace(state, steps=state.steps + 1)
    elif phase is Phase.COOLDOWN:
        if state.steps >= int(round(config.tau_cool / T_s)):
            state = replace(state, phase=Phase.IDLE, steps=0)
        else:
            state = replace(state, steps=state.steps + 1)
    return state, *outputs(state, config, T_s)


def outputs(state: ClutchState, config: ClutchConfig, T_s: float) -> tuple[bool, bool, float]:
    """Clutch lines and active-voltage scale implied by ``state``."""
    phase = state.phase
    line = state.target if phase is Phase.ENGAGEMENT_WAIT else state.engaged_side
    left, right = line == Side.LEFT, line == Side.RIGHT
    if phase is Phase.ENGAGEMENT_WAIT:
        return left, right, 0.0
    if phase is Phase.RAMPING:
        return left, right, min(1.0, state.steps / _samples(config.tau_ramp, T_s))
    return left, right, 1.0 if line != Side.NONE else 0.0
