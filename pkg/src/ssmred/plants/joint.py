"""Synthetic antagonistic joint: two SDOF muscles pulling a lever through clutches.

Only the clutched side transmits its muscle tension ``k x + alpha x^3`` as
torque; the right side drives positive angles.  Muscles on the free side
receive zero voltage and relax on their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .base import Plant
from .sdof import SdofParams


class Side(IntEnum):
    LEFT = -1
    NONE = 0
    RIGHT = 1


def side_of(u: float) -> Side:
    return Side.RIGHT if u > 0 else Side.LEFT if u < 0 else Side.NONE


def _default_muscle() -> SdofParams:
    return SdofParams(m=1e-3, k=1.0, c_tilde=0.1, alpha=0.1, beta=1e-3, gamma=0.2, u_max=5.0)


@dataclass(frozen=True)
class JointParams:
    J: float = 2.93e-3
    b: float = 0.0328
    k_theta: float = 0.1875
    r: float = 0.05
    left: SdofParams = field(default_factory=_default_muscle)
    right: SdofParams = field(default_factory=_default_muscle)
    efficiency: float = 0.9

    def __post_init__(self):
        if not (self.J > 0 and self.b > 0 and self.r > 0):
            raise ValueError("J, b and r must be positive")
        if self.k_theta < 0:
            raise ValueError("k_theta must be non-negative")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")

    @property
    def u_max(self) -> float:
        return min(self.left.u_max, self.right.u_max)


def _muscle_terms(x, v, u, p: SdofParams):
    tension = p.k * x + p.alpha * x * x * x
    acc = (p.gamma * u * u - (p.c_tilde - p.beta * u * u) * v - tension) / p.m
    return tension, acc


def joint_rhs(state, u_signed: float, clutch: Side, params: JointParams) -> np.ndarray:
    """State layout ``(theta, omega, x_left, v_left, x_right, v_right)``."""
    theta, omega, xl, vl, xr, vr = state
    mag = abs(u_signed)
    ul = mag if clutch == Side.LEFT else 0.0
    ur = mag if clutch == Side.RIGHT else 0.0
    tl, al = _muscle_terms(xl, vl, ul, params.left)
    tr, ar = _muscle_terms(xr, vr, ur, params.right)
    gain = params.r * params.efficiency
    torque = 0.0
    if clutch == Side.RIGHT:
        torque = gain * tr
    elif clutch == Side.LEFT:
        torque = -gain * tl
    alpha = (torque - params.b * omega - params.k_theta * theta) / params.J
    return np.array([omega, alpha, vl, al, vr, ar])


class JointPlant(Plant):
    """Open-loop input is the signed voltage; its sign selects the clutch."""

    name = "joint"
    state_names = ("theta", "omega", "x_left", "v_left", "x_right", "v_right")

    def __init__(self, params: JointParams | None = None):
        self.params = params or JointParams()

    def rhs(self, state, u):
        return joint_rhs(state, u, side_of(u), self.params)

    def rhs_clutched(self, state, u, clutch: Side):
        return joint_rhs(state, u, clutch, self.params)

    def observable(self, state):
        return state[..., 0]

    def check_input(self, u):
        if abs(u) > self.params.u_max:
            raise ValueError(f"|u|={abs(u)} exceeds the muscle input range {self.params.u_max}")

    def static_angle(self, u_signed: float) -> float:
        side = side_of(u_signed)
        if side == Side.NONE or self.params.k_theta == 0:
            return 0.0
        muscle = self.params.right if side == Side.RIGHT else self.params.left
        x = muscle.equilibrium(abs(u_signed))
        tension = muscle.k * x + muscle.alpha * x**3
        return float(side * tension * self.params.r * self.params.efficiency / self.params.k_theta)

    def equilibrium_guess(self, u):
        side = side_of(u)
        mag = abs(u)
        xl = self.params.left.equilibrium(mag) if side == Side.LEFT else 0.0
        xr = self.params.right.equilibrium(mag) if side == Side.RIGHT else 0.0
        return np.array([self.static_angle(u), 0.0, xl, 0.0, xr, 0.0])

    def time_scale(self):
        return self.params.b / max(self.params.k_theta, 1e-12)
