"""Closed-loop tracking on the clutched joint plant."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..plants.base import SimulationFault
from ..plants.joint import JointPlant
from ..reduction.slow_manifold import SlowManifoldModel, invert_sm
from ..signals import TimeSeries
from .clutch import ClutchConfig, ClutchState, Mode, Phase, clutch_step
from .limits import SafetyLimits, apply_limits
from .pi import PiConfig, PiState, ema_step, pi_step

PHASE_CODES = {phase: i for i, phase in enumerate(Phase)}


@dataclass
class ControlLog:
    """Per-sample record of a closed-loop run; angles in degrees, voltages in volts.

    ``V_applied`` is signed by the engaged side (positive on the right).
    """

    t: np.ndarray
    theta_d: np.ndarray
    theta_meas: np.ndarray
    theta_filtered: np.ndarray
    e: np.ndarray
    V_ff: np.ndarray
    V_fb: np.ndarray
    V_total_pre_limits: np.ndarray
    V_applied: np.ndarray
    engaged_side: np.ndarray
    integrator_state: np.ndarray
    integrator_frozen: np.ndarray
    left_clutch: np.ndarray
    right_clutch: np.ndarray
    phase: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "ControlLog":
        ints = {"engaged_side", "integrator_frozen", "left_clutch", "right_clutch", "phase"}
        return cls(**{f.name: np.zeros(n, dtype=int if f.name in ints else float) for f in fields(cls)})

    @property
    def columns(self) -> list[str]:
        return [f.name for f in fields(self)]

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path) -> None:
        cols = [getattr(self, name) for name in self.columns]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in zip(*cols):
                writer.writerow([f"{v:.17g}" if isinstance(v, float) else str(v) for v in map(_py, row)])

    @classmethod
    def from_csv(cls, path) -> "ControlLog":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float).T
        log = cls.empty(body.shape[1])
        for name, col in zip(header, body):
            current = getattr(log, name)
            setattr(log, name, col.astype(current.dtype))
        return log

    def equals(self, other: "ControlLog") -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in self.columns)


def _py(v):
    return v.item() if hasattr(v, "item") else v


def _joint_derivs(y, u, side, P):
    theta, omega, xl, vl, xr, vr = y
    L, R = P.left, P.right
    ul = u if side < 0 else 0.0
    ur = u if side > 0 else 0.0
    tl = L.k * xl + L.alpha * xl * xl * xl
    tr = R.k * xr + R.alpha * xr * xr * xr
    al = (L.gamma * ul * ul - (L.c_tilde - L.beta * ul * ul) * vl - tl) / L.m
    ar = (R.gamma * ur * ur - (R.c_tilde - R.beta * ur * ur) * vr - tr) / R.m
    torque = side * P.r * P.efficiency * (tr if side > 0 else tl if side < 0 else 0.0)
    acc = (torque - P.b * omega - P.k_theta * theta) / P.J
    return (omega, acc, vl, al, vr, ar)


def joint_step(y, u: float, side: int, params, h: float) -> tuple:
    """One RK4 step of the clutched joint with the voltage held, in plain floats."""
    f = _joint_derivs
    k1 = f(y, u, side, params)
    hh = 0.5 * h
    k2 = f([a + hh * b for a, b in zip(y, k1)], u, side, params)
    k3 = f([a + hh * b for a, b in zip(y, k2)], u, side, params)
    k4 = f([a + h * b for a, b in zip(y, k3)], u, side, params)
    h6 = h / 6.0
    return [a + h6 * (b1 + 2.0 * (b2 + b3) + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]


def ff_command(sm: SlowManifoldModel, theta_d: float) -> float:
    return invert_sm(sm, theta_d)


def run_closed_loop(
    plant: JointPlant,
    mode: Mode | str,
    sm: SlowManifoldModel | None,
    pi: PiConfig,
    limits: SafetyLimits,
    clutch: ClutchConfig,
    reference: TimeSeries,
    seed: int,
    *,
    noise_std_deg: float = 0.05,
    n_sub: int = 1,
    initial_state=None,
) -> ControlLog:
    """Track ``reference`` (degrees) with one of the three controller realizations.

    Each sample: measure (with seeded Gaussian noise), filter, form the error,
    compute feedforward and feedback terms, schedule the clutches, project the
    total onto the engaged side, apply the voltage limits and advance the plant
    over one period with the voltage held.
    """
    mode = Mode(mode)
    if not isinstance(plant, JointPlant):
        raise TypeError("closed-loop runs need the clutched joint plant")
    if not np.isclose(reference.dt, pi.T_s, rtol=1e-9):
        raise ValueError(f"reference sample period {reference.dt} differs from T_s={pi.T_s}")
    if mode.uses_ff and sm is None:
        raise ValueError(f"mode {mode.value} needs a slow-manifold model")
    if limits.v_min < 0:
        raise ValueError("active-side voltage magnitudes cannot be negative")

    rng = np.random.default_rng(seed)
    theta_ref = reference.scalar()
    n = len(theta_ref)
    noise = rng.normal(0.0, noise_std_deg, n) if noise_std_deg > 0 else np.zeros(n)
    log = ControlLog.empty(n)
    log.t[:] = reference.times

    T_s = pi.T_s
    h = T_s / n_sub
    y0 = np.zeros(plant.n_state) if initial_state is None else np.asarray(initial_state, dtype=float)
    y = [float(v) for v in y0]
    params = plant.params
    deg = 180.0 / np.pi
    state = ClutchState()
    pi_state = PiState()
    applied = 0.0
    filtered = None

    # the feedforward is a memoryless map of the reference, so look it up in one pass
    v_ff_all = np.atleast_1d(invert_sm(sm, theta_ref)).tolist() if mode.uses_ff else [0.0] * n

    for k in range(n):
        theta_d = float(theta_ref[k])
        meas = y[0] * deg + float(noise[k])
        filtered = meas if filtered is None else ema_step(filtered, meas, pi.ema_alpha)
        e = theta_d - filtered

        v_ff = v_ff_all[k]
        schedule = v_ff if mode.uses_ff else theta_d
        prev_state = state
        state, left_on, right_on, scale = clutch_step(state, schedule, mode, clutch, T_s)
        if state.phase is Phase.ENGAGEMENT_WAIT and prev_state.phase is not Phase.ENGAGEMENT_WAIT:
            pi_state = PiState(0.0, pi_state.prev_error)
        side = int(state.engaged_side)

        if mode.uses_fb:
            tentative = scale * side * (v_ff + pi.k_p * e + pi.k_i * pi_state.integral)
            frozen = side == 0 or scale < 1.0 or limits.violates(applied, tentative)
            v_fb, pi_state = pi_step(pi_state, e, pi, frozen)
        else:
            frozen, v_fb = False, 0.0
        v_tot = v_ff + v_fb

        if side == 0:
            magnitude = 0.0
        else:
            magnitude = apply_limits(applied, max(0.0, scale * side * v_tot), limits)
        applied = magnitude

        log.theta_d[k] = theta_d
        log.theta_meas[k] = meas
        log.theta_filtered[k] = filtered
        log.e[k] = e
        log.V_ff[k] = v_ff
        log.V_fb[k] = v_fb
        log.V_total_pre_limits[k] = v_tot
        log.V_applied[k] = side * magnitude
        log.engaged_side[k] = side
        log.integrator_state[k] = pi_state.integral
        log.integrator_frozen[k] = int(frozen)
        log.left_clutch[k] = int(left_on)
        log.right_clutch[k] = int(right_on)
        log.phase[k] = PHASE_CODES[state.phase]

        if k + 1 < n:
            for _ in range(n_sub):
                y = joint_step(y, magnitude, side, params, h)
            if not all(map(math.isfinite, y)):
                raise SimulationFault(f"non-finite joint state at t={log.t[k + 1]:g}")
    return log
