"""Single-degree-of-freedom phenomenological HASEL model.

    m x'' + (c_tilde - beta u^2) x' + k x + alpha x^3 = gamma u^2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Plant


@dataclass(frozen=True)
class SdofParams:
    m: float = 0.022
    k: float = 1.0
    c_tilde: float = 0.3
    alpha: float = 0.7
    beta: float = 5e-3
    gamma: float = 0.5
    u_max: float = 3.0

    def __post_init__(self):
        if not (self.m > 0 and self.k > 0 and self.c_tilde > 0):
            raise ValueError("m, k and c_tilde must be positive")
        if self.damping(self.u_max) <= 0:
            raise ValueError(
                f"effective damping c_tilde - beta*u^2 is not positive at u_max={self.u_max}"
            )

    def damping(self, u: float) -> float:
        return self.c_tilde - self.beta * u * u

    def equilibrium(self, u: float) -> float:
        """Static stroke solving k x + alpha x^3 = gamma u^2 (Newton, cubic is monotone)."""
        rhs = self.gamma * u * u
        x = rhs / self.k
        if self.alpha > 0:
            x = min(x, np.cbrt(rhs / self.alpha))
        for _ in range(100):
            f = self.k * x + self.alpha * x**3 - rhs
            step = f / (self.k + 3 * self.alpha * x * x)
            x -= step
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                break
        return float(x)


def sdof_rhs(state, u: float, params: SdofParams) -> np.ndarray:
    x, v = state[0], state[1]
    acc = (
        params.gamma * u * u - params.damping(u) * v - params.k * x - params.alpha * x**3
    ) / params.m
    return np.array([v, acc])


class SdofPlant(Plant):
    name = "sdof"
    state_names = ("x", "v")

    def __init__(self, params: SdofParams | None = None):
        self.params = params or SdofParams()

    def rhs(self, state, u):
        return sdof_rhs(state, u, self.params)

    def observable(self, state):
        return state[..., 0]

    def check_input(self, u):
        if self.params.damping(u) <= 0:
            raise ValueError(f"input {u} makes the effective damping non-positive")

    def equilibrium_guess(self, u):
        return np.array([self.params.equilibrium(u), 0.0])

    def state_scale(self):
        return np.array([1.0, 1.0])

    def time_scale(self):
        return 1.0
