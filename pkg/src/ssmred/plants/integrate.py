"""Fixed-step RK4 simulation and equilibrium solving."""

from __future__ import annotations

import logging

import numpy as np

from ..signals import TimeSeries
from .base import Plant, SimulationFault

log = logging.getLogger(__name__)


class SteadyStateError(RuntimeError):
    pass


def substeps(sample_dt: float, dt_integration: float | None) -> int:
    """Number of integration steps per sample; ``dt_integration`` must divide ``sample_dt``."""
    if dt_integration is None:
        return 1
    n = int(round(sample_dt / dt_integration))
    if n < 1 or abs(n * dt_integration - sample_dt) > 1e-9 * sample_dt:
        raise ValueError(
            f"dt_integration={dt_integration:g} does not divide the sample period {sample_dt:g}"
        )
    return n


def rk4_step(f, y, u0, u_half, u1, h):
    k1 = f(y, u0)
    k2 = f(y + 0.5 * h * k1, u_half)
    k3 = f(y + 0.5 * h * k2, u_half)
    k4 = f(y + h * k3, u1)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate(
    plant: Plant,
    u: TimeSeries,
    initial,
    dt_integration: float | None = None,
) -> TimeSeries:
    """Integrate ``plant`` under input ``u`` from ``initial``.

    The input is interpolated linearly between samples and the state is
    recorded at the input sample times.  The returned series holds the full
    state followed by the plant observable in the last column.
    """
    uu = u.scalar()
    n_sub = substeps(u.dt, dt_integration)
    h = u.dt / n_sub
    y = np.array(initial, dtype=float)
    if y.shape != (plant.n_state,):
        raise ValueError(f"initial state must have shape ({plant.n_state},)")
    plant.check_state(y)
    limit = plant.max_step(y)
    if h > limit:
        raise SimulationFault(
            f"integration step {h:g} exceeds the stiffness guard {limit:g} for {plant.name}"
        )
    for val in (uu.min(), uu.max()):
        plant.check_input(val)

    out = np.empty((len(uu), plant.n_state))
    out[0] = y
    f = plant.rhs
    fracs = np.arange(n_sub + 1) / n_sub
    for j in range(len(uu) - 1):
        ua, ub = uu[j], uu[j + 1]
        du = ub - ua
        for i in range(n_sub):
            y = rk4_step(
                f, y, ua + du * fracs[i], ua + du * 0.5 * (fracs[i] + fracs[i + 1]),
                ua + du * fracs[i + 1], h,
            )
        if not np.all(np.isfinite(y)):
            raise SimulationFault(f"non-finite state at t={u.t0 + (j + 1) * u.dt:g}")
        plant.check_state(y)
        out[j + 1] = y
    obs = plant.observable(out)
    return TimeSeries(
        u.t0, u.dt, np.column_stack([out, obs]),
        names=tuple(plant.state_names) + ("observable",),
    )


def _jacobian(fun, y, scale):
    f0 = fun(y)
    jac = np.empty((len(f0), len(y)))
    for i in range(len(y)):
        step = 1e-7 * scale[i]
        yp = y.copy()
        yp[i] += step
        ym = y.copy()
        ym[i] -= step
        jac[:, i] = (fun(yp) - fun(ym)) / (2 * step)
    return f0, jac


def steady_state(
    plant: Plant,
    u_const: float,
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """Equilibrium of ``plant`` at constant input ``u_const``.

    Damped Newton iteration on the vector field from the plant's own guess;
    falls back to simulating until settled and polishing with Newton again.
    """
    plant.check_input(u_const)
    scale = plant.state_scale()
    tscale = plant.time_scale()

    def fun(y):
        return np.asarray(plant.rhs(y, u_const)) * tscale / scale

    def newton(y):
        res = np.max(np.abs(fun(y)))
        for _ in range(max_iter):
            if res < tol:
                return y, res
            f0, jac = _jacobian(fun, y, scale)
            try:
                step = np.linalg.solve(jac, -f0)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            while lam > 1e-6:
                trial = y + lam * step
                try:
                    plant.check_state(trial)
                    r_trial = np.max(np.abs(fun(trial)))
                except SimulationFault:
                    r_trial = np.inf
                if r_trial < res:
                    y, res = trial, r_trial
                    break
                lam *= 0.5
            else:
                break
        return y, res

    y, res = newton(np.array(plant.equilibrium_guess(u_const), dtype=float))
    if res < tol:
        return y
    log.debug("Newton stalled at residual %.3g, falling back to settling simulation", res)
    horizon = 100 * tscale
    n = 2001
    dt = horizon / (n - 1)
    limit = plant.max_step(y)
    dt_int = dt / int(np.ceil(dt / min(limit, dt)))
    traj = simulate(plant, TimeSeries(0.0, dt, np.full(n, float(u_const))), y, dt_int)
    y, res = newton(traj.values[-1, : plant.n_state].copy())
    if res < tol:
        return y
    raise SteadyStateError(f"no equilibrium found at u={u_const:g} (residual {res:.3g})")
