"""Three-way controller benchmark and per-mode PI gain tuning."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..signals import TimeSeries
from .clutch import ClutchConfig, Mode
from .limits import SafetyLimits
from .loop import ControlLog, run_closed_loop
from .pi import PiConfig


@dataclass
class ModeReport:
    rms_error_deg: float
    max_abs_error_deg: float
    effort_mean_v: float
    effort_rms_v: float
    ff_share_mean: float
    ff_mean_abs_v: float
    ff_rms_v: float
    fb_mean_abs_v: float
    fb_rms_v: float
    k_p: float
    k_i: float
    reference_sha256: str

    @classmethod
    def from_log(cls, log: ControlLog, pi: PiConfig) -> "ModeReport":
        effort = np.abs(log.V_applied)
        ff_mean = float(np.mean(np.abs(log.V_ff)))
        fb_mean = float(np.mean(np.abs(log.V_fb)))
        total = ff_mean + fb_mean
        return cls(
            rms_error_deg=float(np.sqrt(np.mean(log.e**2))),
            max_abs_error_deg=float(np.max(np.abs(log.e))),
            effort_mean_v=float(np.mean(effort)),
            effort_rms_v=float(np.sqrt(np.mean(effort**2))),
            ff_share_mean=ff_mean / total if total > 0 else 0.0,
            ff_mean_abs_v=ff_mean,
            ff_rms_v=float(np.sqrt(np.mean(log.V_ff**2))),
            fb_mean_abs_v=fb_mean,
            fb_rms_v=float(np.sqrt(np.mean(log.V_fb**2))),
            k_p=pi.k_p,
            k_i=pi.k_i,
            reference_sha256=reference_hash(log.theta_d),
        )


@dataclass
class BenchmarkReport:
    modes: dict[str, ModeReport]
    logs: dict[str, ControlLog] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {name: vars(rep).copy() for name, rep in self.modes.items()}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def reference_hash(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype=np.float64).tobytes()).hexdigest()


def benchmark(
    plant,
    sm,
    gains: dict,
    limits: SafetyLimits,
    clutch: ClutchConfig,
    reference: TimeSeries,
    seed: int,
    *,
    base_pi: PiConfig | None = None,
    max_workers: int = 1,
    **loop_kwargs,
) -> BenchmarkReport:
    """Run all three modes on the same reference, limits and scheduler.

    ``gains`` maps mode names to ``(k_p, k_i)``; feedforward-only ignores gains.
    """
    base_pi = base_pi or PiConfig(T_s=reference.dt)
    configs = {}
    for mode in Mode:
        k_p, k_i = gains.get(mode.value, (0.0, 0.0)) if mode.uses_fb else (0.0, 0.0)
        configs[mode] = replace(base_pi, k_p=float(k_p), k_i=float(k_i))

    def one(mode):
        return mode, run_closed_loop(
            plant, mode, sm, configs[mode], limits, clutch, reference, seed, **loop_kwargs
        )

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = dict(pool.map(one, list(Mode)))
    reports = {mode.value: ModeReport.from_log(results[mode], configs[mode]) for mode in Mode}
    hashes = {rep.reference_sha256 for rep in reports.values()}
    if len(hashes) != 1:
        raise RuntimeError("modes did not receive identical references")
    return BenchmarkReport(reports, {mode.value: results[mode] for mode in Mode})


def tune_gains(
    plant,
    mode: Mode | str,
    sm,
    limits: SafetyLimits,
    clutch: ClutchConfig,
    reference: TimeSeries,
    seed: int,
    *,
    kp_grid=None,
    ki_grid=None,
    base_pi: PiConfig | None = None,
    max_rounds: int = 4,
    **loop_kwargs,
) -> tuple[tuple[float, float], float]:
    """Coordinate descent over log grids of ``k_p`` and ``k_i`` minimizing RMS error.

    Starts from the grid midpoints and alternates full sweeps of each gain
    until a round changes neither.  Returns the best gains and their RMS error.
    """
    mode = Mode(mode)
    if not mode.uses_fb:
        raise ValueError("feedforward-only mode has no gains to tune")
    kp_grid = np.asarray(kp_grid if kp_grid is not None else np.logspace(-3, 0, 10))
    ki_grid = np.asarray(ki_grid if ki_grid is not None else np.logspace(-2, 1, 10))
    base_pi = base_pi or PiConfig(T_s=reference.dt)
    cache: dict[tuple[int, int], float] = {}

    def cost(i, j):
        if (i, j) not in cache:
            pi = replace(base_pi, k_p=float(kp_grid[i]), k_i=float(ki_grid[j]))
            try:
                log = run_closed_loop(plant, mode, sm, pi, limits, clutch, reference, seed, **loop_kwargs)
                cache[(i, j)] = float(np.sqrt(np.mean(log.e**2)))
            except (ArithmeticError, RuntimeError):
                cache[(i, j)] = float("inf")
        return cache[(i, j)]

    i, j = len(kp_grid) // 2, len(ki_grid) // 2
    for _ in range(max_rounds):
        start = (i, j)
        i = min(range(len(kp_grid)), key=lambda a: (cost(a, j), a))
        j = min(range(len(ki_grid)), key=lambda b: (cost(i, b), b))
        if (i, j) == start:
            break
    return (float(kp_grid[i]), float(ki_grid[j])), cost(i, j)
