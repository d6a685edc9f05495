"""PI feedback with trapezoidal integration, and the measurement low-pass."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PiConfig:
    """Gains in volts per degree (and per degree-second); ``T_s`` in seconds."""

    k_p: float = 0.0
    k_i: float = 0.0
    T_s: float = 1e-3
    ema_alpha: float = 0.1

    def __post_init__(self):
        if not self.T_s > 0:
            raise ValueError("T_s must be positive")
        if self.k_p < 0 or self.k_i < 0:
            raise ValueError("gains must be non-negative")
        if not 0 < self.ema_alpha <= 1:
            raise ValueError("ema_alpha must lie in (0, 1]")


@dataclass(frozen=True)
class PiState:
    integral: float = 0.0
    prev_error: float | None = None


def ema_step(prev_filtered: float, raw_meas: float, ema_alpha: float) -> float:
    return ema_alpha * raw_meas + (1.0 - ema_alpha) * prev_filtered


def pi_step(state: PiState, e: float, config: PiConfig, tentative_would_clamp: bool) -> tuple[float, PiState]:
    """One PI update; the integral is frozen while ``tentative_would_clamp`` holds.

    The first call has no previous error and integrates half of ``e``'s
    trapezoid (the previous error is taken as 0).
    """
    prev = 0.0 if state.prev_error is None else state.prev_error
    integral = state.integral
    if not tentative_would_clamp:
        integral = integral + config.T_s * (e + prev) / 2.0
    v_fb = config.k_p * e + config.k_i * integral
    return v_fb, PiState(integral, e)
