"""Direct polynomial fit of the input-to-observable slow manifold and its inverse."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..signals import TimeSeries
from .polynomial import PolynomialMap, fit_polynomial

M_INV = 4096


class NonMonotoneError(RuntimeError):
    pass


@dataclass
class SlowManifoldModel:
    """Memoryless map ``g(u) = sum_i S_i u^i`` calibrated on ``[u_lo, u_hi]``."""

    forward: PolynomialMap
    u_lo: float
    u_hi: float
    table_u: np.ndarray = field(repr=False, default=None)
    table_g: np.ndarray = field(repr=False, default=None)
    monotone: bool = True
    increasing: bool = True
    roundtrip_bound: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.table_u is None:
            self._build_table()

    @property
    def order(self) -> int:
        return self.forward.max_order

    @property
    def coefficients(self) -> np.ndarray:
        """Power coefficients ``S_0 .. S_n``."""
        S = np.zeros(self.order + 1)
        S[self.forward.exponents[:, 0]] = self.forward.coeffs[0]
        return S

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.forward(u.ravel())[0].reshape(u.shape)

    def derivative(self, u) -> np.ndarray:
        S = self.coefficients
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        for i in range(self.order, 0, -1):
            out = out * u + i * S[i]
        return out

    @property
    def image(self) -> tuple[float, float]:
        return float(self.table_g.min()), float(self.table_g.max())

    def _build_table(self):
        dense = np.linspace(self.u_lo, self.u_hi, 4 * M_INV)
        slope = self.derivative(dense)
        diffs = np.diff(self(dense))
        self.monotone = bool(np.all(diffs > 0) or np.all(diffs < 0)) and not np.any(slope == 0)
        self.increasing = bool(diffs.sum() > 0)
        self.table_u = np.linspace(self.u_lo, self.u_hi, M_INV)
        self.table_g = self(self.table_u)
        if self.monotone:
            abs_slope = np.abs(slope)
            span = abs(self.table_g[-1] - self.table_g[0])
            self.roundtrip_bound = float(span / (M_INV - 1) * abs_slope.max() / abs_slope.min())
        else:
            self.roundtrip_bound = float("inf")


def fit_slow_manifold(
    forced: list[tuple[TimeSeries, TimeSeries]],
    order: int,
) -> SlowManifoldModel:
    """Least-squares fit of the observable against ``u^0 .. u^order`` over pooled samples."""
    if order < 1:
        raise ValueError("order must be >= 1")
    u = np.concatenate([np.asarray(ui.scalar(), dtype=float) for ui, _ in forced])
    y = np.concatenate([np.asarray(yi.scalar(), dtype=float) for _, yi in forced])
    if len(u) != len(y):
        raise ValueError("input and observable sample counts differ")
    if np.ptp(u) == 0:
        raise ValueError("pooled input has zero range")
    forward, cond = fit_polynomial(u[None, :], y[None, :], 0, order)
    model = SlowManifoldModel(forward, float(u.min()), float(u.max()))
    model.diagnostics = {
        "condition": cond,
        "rms_residual": float(np.sqrt(np.mean((model(u) - y) ** 2))),
        "n_samples": int(len(u)),
    }
    return model


def predict_sm(model: SlowManifoldModel, u: TimeSeries) -> tuple[TimeSeries, int]:
    """Evaluate the slow manifold along ``u``; returns the prediction and the clip count."""
    raw = u.scalar()
    clipped = np.clip(raw, model.u_lo, model.u_hi)
    n_clipped = int(np.count_nonzero(clipped != raw))
    return TimeSeries(u.t0, u.dt, model(clipped), names=("observable",)), n_clipped


def invert_sm(model: SlowManifoldModel, theta_d):
    """Input producing observable ``theta_d``, clipped to the calibrated image."""
    if not model.monotone:
        raise NonMonotoneError("slow manifold is not monotone on its calibrated range")
    g, uu = model.table_g, model.table_u
    if not model.increasing:
        g, uu = g[::-1], uu[::-1]
    theta = np.clip(np.asarray(theta_d, dtype=float), g[0], g[-1])
    out = np.interp(theta, g, uu)
    return float(out) if out.ndim == 0 else out
