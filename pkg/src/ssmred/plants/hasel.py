"""Analytic N-pouch HASEL actuator.

Each pouch is a pair of inextensible films holding a fixed fluid area.  As
the electrodes zip over a length ``l_e`` the unzipped arc ``l_p`` shortens and
its half-angle grows from ``alpha0`` towards pi/2, shortening the pouch.

Per pouch, with stroke ``x`` and electrode charge ``Q``::

    m x'' + c x' + k x = m g + Q^2 C_x / (2 C^2)
    Q' = (u - Q / C) / R

The electrostatic force acts towards increasing capacitance (zipping).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .base import Plant, SimulationFault

EPS0 = 8.8541878128e-12
N_TABLE = 2048
ALPHA_FULL = np.pi / 2


@dataclass(frozen=True)
class PouchParams:
    L_p: float = 0.02
    w: float = 0.02
    t_film: float = 18e-6
    alpha0: float = 0.6
    eps_r: float = 2.7
    m: float = 0.002
    c: float = 1.5
    k: float = 30.0
    R: float = 2e8
    g_accel: float = 9.81
    u_threshold: float = 0.0
    N_pouches: int = 15
    u_max: float = 8000.0

    def __post_init__(self):
        if not 0 < self.alpha0 < ALPHA_FULL:
            raise ValueError("alpha0 must lie in (0, pi/2)")
        positive = ("L_p", "w", "t_film", "eps_r", "m", "c", "k", "R", "g_accel", "u_max")
        bad = [f for f in positive if not getattr(self, f) > 0]
        if bad:
            raise ValueError(f"parameters must be positive: {', '.join(bad)}")
        if self.u_threshold < 0:
            raise ValueError("u_threshold must be non-negative")
        if int(self.N_pouches) != self.N_pouches or self.N_pouches < 1:
            raise ValueError("N_pouches must be an integer >= 1")

    @property
    def area(self) -> float:
        return segment_area(self.L_p, self.alpha0)

    @property
    def height(self) -> float:
        """Undeformed pouch length h = L_p sin(alpha0) / alpha0."""
        return self.L_p * np.sin(self.alpha0) / self.alpha0

    @property
    def capacitance_per_length(self) -> float:
        return self.eps_r * EPS0 * self.w / (2.0 * self.t_film)


@dataclass(frozen=True)
class PouchGeometry:
    alpha: float
    area: float
    l_p: float
    l_e: float
    stroke: float
    capacitance: float
    dC_dx: float


def _shape(alpha):
    return (alpha - np.sin(alpha) * np.cos(alpha)) / alpha**2


def segment_area(arc: float, alpha):
    """Fluid area enclosed by two circular arcs of length ``arc`` and half-angle ``alpha``."""
    return 0.5 * arc**2 * _shape(alpha)


def _closed_forms(alpha, p: PouchParams):
    l_p = np.sqrt(2.0 * p.area / _shape(alpha))
    l_e = p.L_p - l_p
    stroke = p.height - (l_p * np.sin(alpha) / alpha + l_e)
    cap = p.capacitance_per_length * l_e
    return l_p, l_e, stroke, cap


class _CapacitanceTable:
    """Monotone tabulation of capacitance against stroke over the zipping range."""

    def __init__(self, p: PouchParams):
        alpha = np.linspace(p.alpha0, ALPHA_FULL, N_TABLE)
        _, _, stroke, cap = _closed_forms(alpha, p)
        stroke[0] = 0.0
        cap[0] = 0.0
        self.stroke = stroke
        self.cap = cap
        self.x_max = float(stroke[-1])
        self.C = PchipInterpolator(stroke, cap, extrapolate=True)
        self.dC = self.C.derivative()
        _, _, _, c_floor = _closed_forms(p.alpha0 + 1e-6, p)
        self.c_floor = float(c_floor)

    def effective(self, x):
        c = self.C(x)
        return np.sqrt(c * c + self.c_floor**2)


def pouch_geometry(alpha: float, params: PouchParams) -> PouchGeometry:
    """All geometric quantities of a pouch at half-angle ``alpha`` in [alpha0, pi/2]."""
    if not params.alpha0 <= alpha <= ALPHA_FULL:
        raise ValueError(f"alpha={alpha} outside the zipping range [{params.alpha0}, pi/2]")
    l_p, l_e, stroke, cap = _closed_forms(alpha, params)
    if alpha == params.alpha0:
        l_p, l_e, stroke, cap = params.L_p, 0.0, 0.0, 0.0
    table = _table_for(params)
    return PouchGeometry(
        alpha=float(alpha), area=params.area, l_p=float(l_p), l_e=float(l_e),
        stroke=float(stroke), capacitance=float(cap), dC_dx=float(table.dC(stroke)),
    )


_TABLES: dict[PouchParams, _CapacitanceTable] = {}


def _table_for(params: PouchParams) -> _CapacitanceTable:
    if params not in _TABLES:
        _TABLES[params] = _CapacitanceTable(params)
    return _TABLES[params]


class HaselPlant(Plant):
    """N uncoupled pouches in series; the observable is the total stroke."""

    name = "hasel"

    def __init__(self, params: PouchParams | None = None):
        self.params = params or PouchParams()
        self.table = _table_for(self.params)
        n = self.params.N_pouches
        self.state_names = (
            tuple(f"x{i}" for i in range(n))
            + tuple(f"v{i}" for i in range(n))
            + tuple(f"Q{i}" for i in range(n))
        )
        self.x_rest = self.params.m * self.params.g_accel / self.params.k

    def _drive(self, u):
        return u if u >= self.params.u_threshold else 0.0

    def rhs(self, state, u):
        p = self.params
        n = p.N_pouches
        x, v, q = state[:n], state[n : 2 * n], state[2 * n :]
        cap = self.table.effective(x)
        force = p.m * p.g_accel + 0.5 * q * q * self.table.dC(x) / (cap * cap)
        acc = (force - p.c * v - p.k * x) / p.m
        qdot = (self._drive(u) - q / cap) / p.R
        return np.concatenate([v, acc, qdot])

    def observable(self, state):
        return np.sum(state[..., : self.params.N_pouches], axis=-1)

    def check_state(self, state):
        x = state[: self.params.N_pouches]
        if np.any(x < 0) or np.any(x >= self.table.x_max):
            raise SimulationFault(
                f"pouch stroke left the geometric range [0, {self.table.x_max:.4g}) m: "
                f"min {x.min():.4g}, max {x.max():.4g}"
            )

    def check_input(self, u):
        if u < 0 or u > self.params.u_max:
            raise ValueError(f"voltage {u} outside [0, {self.params.u_max}]")

    def max_step(self, initial):
        x_low = min(self.x_rest, float(np.min(initial[: self.params.N_pouches])))
        return float(self.params.R * self.table.effective(max(x_low, 0.0)) / 10.0)

    def static_stroke(self, u: float) -> float:
        """Per-pouch equilibrium stroke: k x = m g + u^2 C_x(x) / 2."""
        p = self.params
        ue = self._drive(u)

        def balance(x):
            return p.k * x - p.m * p.g_accel - 0.5 * ue * ue * self.table.dC(x)

        hi = self.table.x_max * (1 - 1e-9)
        if balance(hi) < 0:
            raise SimulationFault(f"voltage {u} zips the pouch completely")
        return float(brentq(balance, 0.0, hi, xtol=1e-16, rtol=1e-15))

    def equilibrium_guess(self, u):
        n = self.params.N_pouches
        x = self.static_stroke(u)
        q = self.table.effective(x) * self._drive(u)
        return np.concatenate([np.full(n, x), np.zeros(n), np.full(n, q)])

    def state_scale(self):
        n = self.params.N_pouches
        xs = self.table.x_max
        qs = self.table.cap[-1] * self.params.u_max
        return np.concatenate([np.full(n, xs), np.full(n, xs / self.time_scale()), np.full(n, qs)])

    def time_scale(self):
        return self.params.c / self.params.k
