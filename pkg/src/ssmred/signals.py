"""Uniformly sampled signals, error/slowness metrics and slow random inputs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtr

# a decay counts as settled once it stays below this fraction of its peak
SETTLE_FRACTION = 1e-3


class MetricError(ValueError):
    """Raised when a metric is undefined for the given signals."""


class GenerationError(RuntimeError):
    """Raised when a slow input with the requested slowness cannot be built."""


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled vector signal.

    ``values`` has shape ``(N, k)``; scalar signals are stored as ``k = 1``.
    Sample ``j`` sits at time ``t0 + j * dt``.
    """

    t0: float
    dt: float
    values: np.ndarray
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValueError("values must be 1-D or 2-D")
        if vals.shape[0] < 2:
            raise ValueError("a TimeSeries needs at least two samples")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        names = tuple(self.names) if self.names else tuple(f"x{i}" for i in range(vals.shape[1]))
        if len(names) != vals.shape[1]:
            raise ValueError("one name per column required")
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def duration(self) -> float:
        return self.dt * (len(self) - 1)

    def scalar(self) -> np.ndarray:
        """Return the single column of a scalar series as a 1-D array."""
        if self.dim != 1:
            raise ValueError(f"expected a scalar series, got dimension {self.dim}")
        return self.values[:, 0]

    def column(self, name: str) -> "TimeSeries":
        i = self.names.index(name)
        return TimeSeries(self.t0, self.dt, self.values[:, i], names=(name,))

    def scaled(self, c: float) -> "TimeSeries":
        return TimeSeries(self.t0, self.dt, c * self.values, names=self.names)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("t",) + self.names)
            for t, row in zip(self.times, self.values):
                writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[0] != "t" or len(header) < 2:
            raise ValueError(f"{path}: header must start with 't' followed by signal names")
        data = np.array([[float(v) for v in r] for r in body])
        t = data[:, 0]
        dt = (t[-1] - t[0]) / (len(t) - 1)
        if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
            raise ValueError(f"{path}: samples are not uniformly spaced")
        return cls(t[0], dt, data[:, 1:], names=tuple(header[1:]))


@dataclass(frozen=True)
class LinearDecay:
    """Decay reference of a linear system, ``s(t) = s0 * exp(lam * t)``."""

    lam: float

    def __post_init__(self):
        if not self.lam < 0:
            raise ValueError("LinearDecay needs a negative rate")


def _l2(x: np.ndarray, dt: float) -> float:
    return float(np.sqrt(np.trapezoid(x * x, dx=dt)))


def _settled_window(s: np.ndarray) -> int:
    """Number of leading samples kept for the decay integrals."""
    peak = np.max(np.abs(s))
    if peak == 0:
        raise MetricError("decay reference is identically zero")
    above = np.nonzero(np.abs(s) >= SETTLE_FRACTION * peak)[0]
    if abs(s[-1]) > SETTLE_FRACTION * peak:
        raise MetricError(
            f"decay reference has not settled: |s_end| = {abs(s[-1]):.3g} > "
            f"{SETTLE_FRACTION:g} * peak {peak:.3g}"
        )
    return min(len(s), above[-1] + 2)


def decay_derivative_norm(decay: TimeSeries | LinearDecay) -> float:
    """L2 norm of the derivative of the unit-energy decay reference."""
    if isinstance(decay, LinearDecay):
        return abs(decay.lam)
    s = decay.scalar()
    s = s[: _settled_window(s)]
    s_tilde = s / _l2(s, decay.dt)
    return _l2(np.gradient(s_tilde, decay.dt), decay.dt)


def slowness_rho(decay: TimeSeries | LinearDecay, forced: TimeSeries) -> float:
    """Ratio of forced-signal to autonomous-decay derivative energies.

    Both signals are first normalised to unit L2 energy, so the result is
    independent of the forcing amplitude.  Small values (``rho << 1``) mean
    the forcing is slow compared to the intrinsic transients.
    """
    g = forced.scalar()
    energy = _l2(g, forced.dt)
    if energy == 0:
        raise MetricError("forced signal has zero energy")
    num = _l2(np.gradient(g / energy, forced.dt), forced.dt)
    return num / decay_derivative_norm(decay)


def nmte(truth: TimeSeries, prediction: TimeSeries) -> float:
    """Normalised mean trajectory error.

    Mean per-sample Euclidean deviation divided by the peak Euclidean norm of
    the true trajectory.
    """
    x, xh = truth.values, prediction.values
    if x.shape != xh.shape:
        raise MetricError(f"shape mismatch: {x.shape} vs {xh.shape}")
    if not np.isclose(truth.dt, prediction.dt, rtol=1e-12, atol=0):
        raise MetricError("sample periods differ")
    scale = np.max(np.abs(x))
    if scale == 0:
        raise MetricError("NMTE undefined for an all-zero truth signal")
    # rescale first so tiny or huge signals do not underflow or overflow in the squares
    peak = np.max(np.linalg.norm(x / scale, axis=1))
    return float(np.mean(np.linalg.norm((x - xh) / scale, axis=1)) / peak)


def _smoothed_levels(levels: np.ndarray, tau: np.ndarray, width: float) -> np.ndarray:
    """Level-hold signal (level j on [j, j+1)) convolved with a Gaussian."""
    reach = int(np.ceil(0.5 + 9.0 * width)) + 1
    padded = np.concatenate([np.full(reach, levels[0]), levels, np.full(reach, levels[-1])])
    base = np.floor(tau).astype(int)
    num = np.zeros_like(tau)
    den = np.zeros_like(tau)
    for k in range(-reach, reach + 1):
        j = base + k
        w = ndtr((tau - j) / width) - ndtr((tau - j - 1) / width)
        num += w * padded[np.clip(j + reach, 0, len(padded) - 1)]
        den += w
    # normalising keeps the result a convex combination of the levels
    return num / den


def gen_slow_input(
    seed: int,
    duration: float,
    dt: float,
    amplitude_range: Sequence[float],
    target_rho: float,
    decay: TimeSeries | LinearDecay,
    *,
    width: float = 0.15,
    rtol: float = 1e-3,
    name: str = "u",
) -> TimeSeries:
    """Random smooth input whose slowness against ``decay`` is ``target_rho``.

    Random levels drawn uniformly from ``amplitude_range`` are held for one
    unit of an internal time axis and Gaussian-smoothed; the internal axis is
    then stretched (bisection in log-stretch) until the slowness matches.
    """
    u_min, u_max = map(float, amplitude_range)
    if not u_min < u_max:
        raise ValueError("amplitude_range must satisfy u_min < u_max")
    if not target_rho > 0:
        raise ValueError("target_rho must be positive")
    n = int(round(duration / dt)) + 1
    t = dt * np.arange(n)
    lam = decay_derivative_norm(decay)
    min_hold = 4.0 * dt
    rng = np.random.default_rng(seed)
    levels = rng.uniform(u_min, u_max, size=int(np.ceil(duration / min_hold)) + 2)

    def build(log_s):
        return _smoothed_levels(levels, t / np.exp(log_s), width)

    def rho_of(log_s):
        sig = build(log_s)
        e = _l2(sig, dt)
        return _l2(np.gradient(sig / e, dt), dt) / lam

    lo, hi = np.log(min_hold), np.log(duration)
    r_lo, r_hi = rho_of(lo), rho_of(hi)
    if not (r_lo >= target_rho >= r_hi):
        raise GenerationError(
            f"target rho {target_rho:g} outside achievable range [{r_hi:.3g}, {r_lo:.3g}]"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        r_mid = rho_of(mid)
        if abs(r_mid / target_rho - 1.0) < rtol:
            return TimeSeries(0.0, dt, build(mid), names=(name,))
        if r_mid > target_rho:
            lo = mid
        else:
            hi = mid
    raise GenerationError(f"bisection did not reach rho={target_rho:g} within 60 iterations")


def gen_step_reference(
    seed: int,
    duration: float,
    dt: float,
    amplitude_range: Sequence[float],
    target_rho: float,
    decay: TimeSeries | LinearDecay,
    *,
    n_steps: int = 3,
    start: float = 0.0,
    rtol: float = 1e-3,
    name: str = "theta_d",
) -> TimeSeries:
    """Sum of ``n_steps`` Gaussian-smoothed random steps with slowness ``target_rho``.

    The signal starts at ``start`` and moves to levels drawn uniformly from
    ``amplitude_range`` at switching times drawn from the middle 80% of the
    record.  All steps share one smoothing width, found by bisection in
    log-width until the slowness matches.
    """
    u_min, u_max = map(float, amplitude_range)
    if not u_min <= start <= u_max or not u_min < u_max:
        raise ValueError("amplitude_range must satisfy u_min <= start <= u_max, u_min < u_max")
    if not target_rho > 0:
        raise ValueError("target_rho must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    n = int(round(duration / dt)) + 1
    t = dt * np.arange(n)
    lam = decay_derivative_norm(decay)
    rng = np.random.default_rng(seed)
    levels = np.concatenate([[start], rng.uniform(u_min, u_max, size=n_steps)])
    times = np.sort(rng.uniform(0.1, 0.9, size=n_steps)) * duration
    jumps = np.diff(levels)

    def build(log_w):
        w = np.exp(log_w)
        return start + sum(a * ndtr((t - tj) / w) for a, tj in zip(jumps, times))

    def rho_of(log_w):
        sig = build(log_w)
        e = _l2(sig, dt)
        if e == 0:
            raise GenerationError("reference has zero energy")
        return _l2(np.gradient(sig / e, dt), dt) / lam

    lo, hi = np.log(dt), np.log(duration)
    r_lo, r_hi = rho_of(lo), rho_of(hi)
    if not (r_lo >= target_rho >= r_hi):
        raise GenerationError(
            f"target rho {target_rho:g} outside achievable range [{r_hi:.3g}, {r_lo:.3g}]"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        r_mid = rho_of(mid)
        if abs(r_mid / target_rho - 1.0) < rtol:
            return TimeSeries(0.0, dt, build(mid), names=(name,))
        if r_mid > target_rho:
            lo = mid
        else:
            hi = mid
    raise GenerationError(f"bisection did not reach rho={target_rho:g} within 60 iterations")
