"""Local spectral submanifolds at frozen input and their adiabatic family."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy.interpolate import PchipInterpolator, make_interp_spline

from ..signals import SETTLE_FRACTION, TimeSeries
from .embedding import delay_embed
from .polynomial import PolynomialMap, fit_polynomial, monomials, multi_indices


class SsmFitError(RuntimeError):
    pass


class PredictionDiverged(RuntimeError):
    """Reduced state became non-finite during integration."""


@dataclass(frozen=True)
class Embedding:
    p: int = 5
    delay: int = 1

    @property
    def window(self) -> int:
        """Samples spanned by one delay vector."""
        return (self.p - 1) * self.delay + 1


@dataclass
class LocalSsmModel:
    """SSM of the fixed point reached at input ``u_bar``, in delay coordinates.

    ``h0`` maps reduced coordinates to the shift from ``x0``; ``r`` gives their
    time derivative.
    """

    u_bar: float
    x0: np.ndarray
    V: np.ndarray
    h0: PolynomialMap
    r: PolynomialMap
    embedding: Embedding
    dt: float
    eta_range: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    def reduce(self, x: np.ndarray) -> np.ndarray:
        """Reduced coordinates of embedded points ``x`` (columns)."""
        return self.V.T @ (np.asarray(x).reshape(len(self.x0), -1) - self.x0[:, None])

    def lift(self, eta: np.ndarray) -> np.ndarray:
        return self.x0[:, None] + self.h0(np.asarray(eta).reshape(self.dim, -1))


def _moving_average(a: np.ndarray, width: int = 5) -> np.ndarray:
    kernel = np.ones(width) / width
    return np.stack([np.convolve(row, kernel, mode="valid") for row in np.atleast_2d(a)])


def _check_settled(s: np.ndarray, s0: float, tail: int):
    dev = np.abs(s - s0)
    peak = dev.max()
    if peak == 0:
        raise SsmFitError("decay trajectory is constant")
    if dev[-tail:].max() > SETTLE_FRACTION * peak:
        raise SsmFitError(
            f"decay has not settled: tail deviation {dev[-tail:].max():.3g} > "
            f"{SETTLE_FRACTION:g} x peak deviation {peak:.3g}"
        )


def _align_signs(V: np.ndarray) -> np.ndarray:
    signs = np.sign(V.sum(axis=0))
    signs[signs == 0] = 1.0
    return V * signs


def fit_local_ssm(
    decays: list[TimeSeries],
    u_bar: float,
    embedding: Embedding = Embedding(),
    d: int = 1,
    m_order: int = 3,
    r_order: int = 3,
    *,
    transient: float = 0.0,
    tail_fraction: float = 0.05,
) -> LocalSsmModel:
    """Fit an SSM parametrization and reduced dynamics from decays at frozen input.

    Parameters
    ----------
    decays : list of TimeSeries
        Scalar observable trajectories converging to the fixed point at ``u_bar``.
    transient : float
        Initial time (seconds) of every decay excluded from the tangent and
        regression fits, to let fast modes die out first.
    tail_fraction : float
        Fraction of final samples averaged to estimate the fixed point.
    """
    p, delay = embedding.p, embedding.delay
    if d > p:
        raise ValueError("reduced dimension cannot exceed the embedding dimension")
    dt = decays[0].dt
    if any(not np.isclose(s.dt, dt) for s in decays):
        raise ValueError("all decays must share the sample period")

    embedded = [delay_embed(s, p, delay) for s in decays]
    tails = [X[:, -max(1, int(round(tail_fraction * X.shape[1]))):] for X in embedded]
    x0 = np.concatenate(tails, axis=1).mean(axis=1)
    for s, tail in zip(decays, tails):
        _check_settled(s.scalar(), x0[0], tail.shape[1])

    skip = int(round(transient / dt))
    xis = [X[:, skip:] - x0[:, None] for X in embedded]
    if any(xi.shape[1] < 10 for xi in xis):
        raise SsmFitError("transient removal leaves too few samples")
    stacked = np.concatenate(xis, axis=1)
    U, sv, _ = np.linalg.svd(stacked, full_matrices=False)
    V = _align_signs(U[:, :d])

    etas = [V.T @ xi for xi in xis]
    eta_all = np.concatenate(etas, axis=1)

    # parametrization: tangent part fixed to V, nonlinear terms fitted on the normal residual
    h_exps = multi_indices(d, 1, m_order)
    h_coeffs = np.zeros((p, len(h_exps)))
    h_coeffs[:, :d] = V
    cond_h = 1.0
    if m_order >= 2:
        normal = stacked - V @ eta_all
        h_nl, cond_h = fit_polynomial(eta_all, normal, 2, m_order)
        h_coeffs[:, d:] = h_nl.coeffs
    h0 = PolynomialMap(h_exps, h_coeffs)

    eta_s, deta_s, weights = [], [], []
    for eta in etas:
        sm = _moving_average(eta)
        eta_s.append(sm)
        deta_s.append(np.gradient(sm, dt, axis=1))
        w = np.ones(sm.shape[1])
        w[[0, -1]] = 0.1
        weights.append(w)
    eta_s = np.concatenate(eta_s, axis=1)
    deta_s = np.concatenate(deta_s, axis=1)
    r, cond_r = fit_polynomial(eta_s, deta_s, 1, r_order, weights=np.concatenate(weights))

    param_res = np.linalg.norm(stacked - h0(eta_all)) / max(np.linalg.norm(stacked), 1e-300)
    dyn_res = np.linalg.norm(deta_s - r(eta_s)) / max(np.linalg.norm(deta_s), 1e-300)
    return LocalSsmModel(
        u_bar=float(u_bar), x0=x0, V=V, h0=h0, r=r, embedding=embedding, dt=dt,
        eta_range=np.column_stack([eta_all.min(axis=1), eta_all.max(axis=1)]),
        diagnostics={
            "singular_values": sv.tolist(),
            "parametrization_residual": float(param_res),
            "dynamics_residual": float(dyn_res),
            "condition_parametrization": float(cond_h),
            "condition_dynamics": float(cond_r),
        },
    )


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle (radians) between the column spaces of two orthonormal bases."""
    # the sine form keeps full precision for nearly aligned subspaces, where arccos does not
    s = np.linalg.svd(B - A @ (A.T @ B), compute_uv=False)
    return float(np.arcsin(np.clip(s.max(), 0.0, 1.0)))


def _sample_box(eta_range: np.ndarray, n: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, n) for lo, hi in eta_range]
    return np.array(list(product(*axes))).T


def reexpress(local: LocalSsmModel, V_shared: np.ndarray) -> LocalSsmModel:
    """Rewrite ``local`` in reduced coordinates ``V_shared^T (x - x0)``.

    The local model is sampled over its training range and the parametrization
    (as a graph over V_shared) and the reduced dynamics refitted at the same orders.
    """
    d = local.dim
    eta = _sample_box(local.eta_range, 401 if d == 1 else max(3, int(round(4000 ** (1 / d)))))
    xi = local.h0(eta)
    eta_new = V_shared.T @ xi
    rates = np.stack([(local.h0.jacobian(e) @ local.r(e[:, None]))[:, 0] for e in eta.T], axis=1)
    rates_new = V_shared.T @ rates
    m_order, r_order = local.h0.max_order, local.r.max_order
    normal, _ = fit_polynomial(eta_new, xi - V_shared @ eta_new, 1, m_order)
    coeffs = normal.coeffs.copy()
    coeffs[:, :d] += V_shared
    h0 = PolynomialMap(normal.exponents, coeffs)
    r, _ = fit_polynomial(eta_new, rates_new, 1, r_order)
    return replace(
        local, V=V_shared.copy(), h0=h0, r=r,
        eta_range=np.column_stack([eta_new.min(axis=1), eta_new.max(axis=1)]),
        diagnostics={**local.diagnostics, "reexpressed": True},
    )


@dataclass
class AdiabaticSsmModel:
    """Family of local SSMs interpolated across the input."""

    locals: list[LocalSsmModel]
    shared_tangent: bool = False
    rule: str = "pchip"

    def __post_init__(self):
        u = self.u_grid
        self._x0 = self._interp(np.stack([m.x0 for m in self.locals]))
        self._V = self._interp(np.stack([m.V for m in self.locals]))
        self._h = self._interp(np.stack([m.h0.coeffs for m in self.locals]))
        self._r = self._interp(np.stack([m.r.coeffs for m in self.locals]))
        self._dx0 = self._x0.derivative()
        self.h_exponents = self.locals[0].h0.exponents
        self.r_exponents = self.locals[0].r.exponents
        self.u_range = (float(u[0]), float(u[-1]))

    def _interp(self, values):
        u = self.u_grid
        if self.rule == "pchip":
            return PchipInterpolator(u, values, axis=0, extrapolate=False)
        if self.rule == "linear":
            return make_interp_spline(u, values, k=1, axis=0)
        raise ValueError(f"unknown interpolation rule {self.rule!r}")

    @property
    def u_grid(self) -> np.ndarray:
        return np.array([m.u_bar for m in self.locals])

    @property
    def embedding(self) -> Embedding:
        return self.locals[0].embedding

    @property
    def dim(self) -> int:
        return self.locals[0].dim

    @property
    def dt(self) -> float:
        return self.locals[0].dt

    def check_range(self, u) -> None:
        lo, hi = self.u_range
        tol = 1e-9 * max(1.0, hi - lo)
        u = np.asarray(u)
        if u.min() < lo - tol or u.max() > hi + tol:
            raise ValueError(f"input range [{u.min():.4g}, {u.max():.4g}] leaves the grid [{lo:.4g}, {hi:.4g}]")

    def _eval(self, interp, u):
        u = np.clip(np.asarray(u, dtype=float), *self.u_range)
        return interp(u)

    def x0(self, u):
        return self._eval(self._x0, u)

    def V(self, u):
        return self._eval(self._V, u)

    def dx0_du(self, u):
        return self._eval(self._dx0, u)

    def local_at(self, u: float) -> LocalSsmModel:
        """Local model at input ``u``; grid nodes are returned unchanged."""
        self.check_range(u)
        grid = self.u_grid
        hit = np.nonzero(grid == u)[0]
        if hit.size:
            return self.locals[int(hit[0])]
        ref = self.locals[0]
        return replace(
            ref, u_bar=float(u), x0=self.x0(u), V=self.V(u),
            h0=PolynomialMap(self.h_exponents, self._eval(self._h, u)),
            r=PolynomialMap(self.r_exponents, self._eval(self._r, u)),
            diagnostics={"interpolated": True},
        )


def build_assm(
    locals_: list[LocalSsmModel],
    shared_tangent: bool = False,
    rule: str = "pchip",
    max_angle_deg: float = 30.0,
) -> AdiabaticSsmModel:
    """Assemble local SSMs (sorted by input) into an interpolated adiabatic family."""
    if len(locals_) < 2:
        raise ValueError("an adiabatic family needs at least two local models")
    models = sorted(locals_, key=lambda m: m.u_bar)
    us = [m.u_bar for m in models]
    if len(set(us)) != len(us):
        raise ValueError("local models must have distinct u_bar")
    ref = models[0]
    for m in models[1:]:
        same = (
            m.embedding == ref.embedding and m.dim == ref.dim and np.isclose(m.dt, ref.dt)
            and np.array_equal(m.h0.exponents, ref.h0.exponents)
            and np.array_equal(m.r.exponents, ref.r.exponents)
        )
        if not same:
            raise ValueError("local models differ in embedding, dimension, sample period or orders")
    if shared_tangent:
        V_s = models[len(models) // 2].V
        for m in models:
            angle = np.degrees(principal_angle(V_s, m.V))
            if angle >= max_angle_deg:
                raise SsmFitError(
                    f"shared tangent not transverse enough at u={m.u_bar:g}: angle {angle:.1f} deg"
                )
        models = [m if m.V is V_s else reexpress(m, V_s) for m in models]
    return AdiabaticSsmModel(models, shared_tangent=shared_tangent, rule=rule)


def _stage_inputs(u: np.ndarray, n_sub: int) -> np.ndarray:
    """Input at every RK4 stage time (multiples of half a step), piecewise linear."""
    frac = np.arange(2 * n_sub) / (2 * n_sub)
    seg = u[:-1, None] + (u[1:] - u[:-1])[:, None] * frac[None, :]
    return np.concatenate([seg.ravel(), u[-1:]])


def predict_assm(
    model: AdiabaticSsmModel,
    u: TimeSeries,
    initial_window: TimeSeries,
    *,
    drift: bool = True,
    n_sub: int = 1,
) -> TimeSeries:
    """Predict the observable under input ``u`` with the adiabatic SSM.

    The state is started from the first delay vector of ``initial_window``
    (observable samples from ``u.t0`` on).  With ``drift`` the reduced state
    also feels the motion of the fixed point, ``-V^T dx0/du * du/dt``, so it
    lags behind the slow manifold; without it the prediction relaxes onto the
    slow manifold.
    """
    uu = u.scalar()
    model.check_range(uu)
    emb = model.embedding
    d = model.dim
    x_init = delay_embed(initial_window, emb.p, emb.delay)[:, 0]
    stage_u = _stage_inputs(uu, n_sub)
    h = u.dt / n_sub

    R = model._eval(model._r, stage_u)
    if drift:
        rate = np.repeat((uu[1:] - uu[:-1]) / u.dt, 2 * n_sub)
        rate = np.concatenate([rate, rate[-1:]])
        V_st = model.V(stage_u)
        push = -np.einsum("spd,sp->sd", V_st, model.dx0_du(stage_u)) * rate[:, None]
    else:
        push = np.zeros((len(stage_u), d))
    exps = model.r_exponents

    def f(eta, s):
        return R[s] @ monomials(eta[:, None], exps)[:, 0] + push[s]

    eta = model.V(uu[0]).T @ (x_init - model.x0(uu[0]))
    etas = np.empty((len(uu), d))
    etas[0] = eta
    s = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(len(uu) - 1):
            for _ in range(n_sub):
                k1 = f(eta, s)
                k2 = f(eta + 0.5 * h * k1, s + 1)
                k3 = f(eta + 0.5 * h * k2, s + 1)
                k4 = f(eta + h * k3, s + 2)
                eta = eta + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                s += 2
            if not np.all(np.isfinite(eta)):
                raise PredictionDiverged(f"reduced state diverged at t={u.t0 + (j + 1) * u.dt:.6g}")
            etas[j + 1] = eta
    H = model._eval(model._h, uu)
    feats = monomials(etas.T, model.h_exponents)
    obs = model.x0(uu)[:, 0] + np.einsum("nk,kn->n", H[:, 0, :], feats)
    return TimeSeries(u.t0, u.dt, obs, names=("observable",))
