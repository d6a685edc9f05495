"""End-to-end recipes: data collection, model identification, slowness sweeps and the control benchmark.

The setup dataclasses carry the default experiment parameters for each plant;
the command-line interface and the acceptance tests both start from them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .control import (
    BenchmarkReport,
    ClutchConfig,
    Mode,
    PiConfig,
    SafetyLimits,
    benchmark,
    tune_gains,
)
from .plants import HaselPlant, JointPlant, Plant, SdofPlant, simulate, steady_state
from .reduction import (
    AdiabaticSsmModel,
    Embedding,
    PredictionDiverged,
    SlowManifoldModel,
    build_assm,
    fit_local_ssm,
    fit_slow_manifold,
    predict_assm,
    predict_sm,
)
from .signals import TimeSeries, gen_slow_input, gen_step_reference, nmte, slowness_rho


def constant_input(u: float, duration: float, dt: float) -> TimeSeries:
    return TimeSeries(0.0, dt, np.full(int(round(duration / dt)) + 1, float(u)), names=("u",))


def observe(plant: Plant, traj: TimeSeries) -> TimeSeries:
    """Scalar observable of a simulated trajectory; joint angles are reported in degrees."""
    col = traj.column("observable")
    if isinstance(plant, JointPlant):
        return TimeSeries(col.t0, col.dt, np.degrees(col.scalar()), names=("theta_deg",))
    return col


class StaticMapPlant(Plant):
    """Memoryless synthetic plant whose observable is a polynomial in the input."""

    name = "static_map"
    state_names = ()

    def __init__(self, coefficients):
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.ndim != 1 or self.coefficients.size == 0:
            raise ValueError("static map needs a non-empty coefficient list")

    def respond(self, u: TimeSeries) -> TimeSeries:
        vals = np.polynomial.polynomial.polyval(u.scalar(), self.coefficients)
        return TimeSeries(u.t0, u.dt, vals, names=("observable",))


def rest_state(plant: Plant, u: float) -> np.ndarray:
    return steady_state(plant, float(u))


def forced_response(plant: Plant, u: TimeSeries, dt_integration=None, initial=None) -> TimeSeries:
    """Observable response to ``u`` starting from rest at its first value."""
    if isinstance(plant, StaticMapPlant):
        return plant.respond(u)
    x0 = rest_state(plant, u.scalar()[0]) if initial is None else initial
    return observe(plant, simulate(plant, u, x0, dt_integration=dt_integration))


def release_decay(
    plant: Plant, u_from: float, duration: float, dt: float, dt_integration=None, u_to: float = 0.0
) -> TimeSeries:
    """Decay after the input jumps from ``u_from`` to ``u_to``, shifted to vanish at the end."""
    s = forced_response(
        plant, constant_input(u_to, duration, dt), dt_integration, rest_state(plant, u_from)
    )
    vals = s.scalar()
    return TimeSeries(0.0, dt, vals - vals[-1], names=s.names)


def _pool_map(fn, items, max_workers: int):
    if max_workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def jump_decays(
    plant: Plant, u_grid, duration: float, dt: float, dt_integration=None, max_workers: int = 1
) -> dict[float, list[TimeSeries]]:
    """For every grid value, the decays into it after jumps from every other grid value."""
    grid = [float(u) for u in u_grid]
    rests = dict(zip(grid, _pool_map(lambda u: rest_state(plant, u), grid, max_workers)))
    pairs = [(ub, ua) for ub in grid for ua in grid if ua != ub]

    def one(pair):
        ub, ua = pair
        return forced_response(plant, constant_input(ub, duration, dt), dt_integration, rests[ua])

    runs = _pool_map(one, pairs, max_workers)
    out: dict[float, list[TimeSeries]] = {u: [] for u in grid}
    for (ub, _), s in zip(pairs, runs):
        out[ub].append(s)
    return out


@dataclass(frozen=True)
class AssmSetup:
    u_range: tuple[float, float]
    grid_size: int
    jump_duration: float
    transient: float
    d: int = 1
    m_order: int = 3
    r_order: int = 3
    embedding: Embedding = Embedding()
    interpolation: str = "pchip"
    shared_tangent: bool = False

    @property
    def u_grid(self) -> np.ndarray:
        return np.linspace(self.u_range[0], self.u_range[1], self.grid_size)


def identify_assm(
    plant: Plant, setup: AssmSetup, dt: float, dt_integration=None, max_workers: int = 1
) -> AdiabaticSsmModel:
    decays = jump_decays(plant, setup.u_grid, setup.jump_duration, dt, dt_integration, max_workers)
    locals_ = [
        fit_local_ssm(
            decays[ub], ub, setup.embedding, setup.d, setup.m_order, setup.r_order,
            transient=setup.transient,
        )
        for ub in decays
    ]
    return build_assm(locals_, shared_tangent=setup.shared_tangent, rule=setup.interpolation)


@dataclass(frozen=True)
class SmSetup:
    u_range: tuple[float, float]
    order: int
    rho: float
    duration: float
    seeds: tuple[int, ...] = (1,)


def training_inputs(setup: SmSetup, dt: float, decay) -> list[TimeSeries]:
    return [gen_slow_input(s, setup.duration, dt, setup.u_range, setup.rho, decay) for s in setup.seeds]


def identify_sm(
    plant: Plant, setup: SmSetup, dt: float, decay, dt_integration=None, max_workers: int = 1
) -> SlowManifoldModel:
    inputs = training_inputs(setup, dt, decay)
    outputs = _pool_map(lambda u: forced_response(plant, u, dt_integration), inputs, max_workers)
    return fit_slow_manifold(list(zip(inputs, outputs)), setup.order)


@dataclass(frozen=True)
class SweepSetup:
    """Everything needed to compare SM and aSSM predictions at several slowness values."""

    plant: str
    dt: float
    dt_integration: float | None
    decay_from: float
    decay_duration: float
    assm: AssmSetup
    sm: SmSetup
    test_range: tuple[float, float]
    test_duration: float
    test_seed: int
    rhos: tuple[float, ...]
    drift: bool = True


SDOF_SWEEP = SweepSetup(
    plant="sdof",
    dt=0.005,
    dt_integration=None,
    decay_from=1.0,
    decay_duration=4.0,
    assm=AssmSetup(u_range=(0.0, 1.2), grid_size=13, jump_duration=4.0, transient=0.3),
    sm=SmSetup(u_range=(0.0, 1.2), order=3, rho=0.05, duration=60.0),
    test_range=(0.0, 1.2),
    test_duration=20.0,
    test_seed=7,
    rhos=(0.1, 0.5, 1.2),
)

HASEL_CHECK = SweepSetup(
    plant="hasel",
    dt=1e-3,
    dt_integration=2e-4,
    decay_from=8000.0,
    decay_duration=0.6,
    assm=AssmSetup(u_range=(2000.0, 8000.0), grid_size=9, jump_duration=0.6, transient=0.02),
    sm=SmSetup(u_range=(2000.0, 8000.0), order=3, rho=0.05, duration=20.0),
    test_range=(2000.0, 8000.0),
    test_duration=10.0,
    test_seed=7,
    rhos=(0.13,),
)


@dataclass
class SweepRow:
    rho_target: float
    rho: float
    nmte_sm: float
    nmte_assm: float
    assm_diverged: bool
    input: TimeSeries = field(repr=False)
    truth: TimeSeries = field(repr=False)
    pred_sm: TimeSeries = field(repr=False)
    pred_assm: TimeSeries | None = field(repr=False)


def rho_sweep(
    plant: Plant,
    setup: SweepSetup,
    sm: SlowManifoldModel,
    assm: AdiabaticSsmModel,
    decay: TimeSeries,
    max_workers: int = 1,
) -> list[SweepRow]:
    """Predict fresh random inputs at each target slowness with both models.

    A diverged aSSM prediction is reported with an infinite error rather
    than aborting the sweep.
    """

    def one(rho):
        u = gen_slow_input(setup.test_seed, setup.test_duration, setup.dt, setup.test_range, rho, decay)
        truth = forced_response(plant, u, setup.dt_integration)
        psm, _ = predict_sm(sm, u)
        window = TimeSeries(0.0, setup.dt, truth.scalar()[: assm.embedding.window])
        try:
            pa = predict_assm(assm, u, window, drift=setup.drift)
            e_a, diverged = nmte(truth, pa), False
        except PredictionDiverged:
            pa, e_a, diverged = None, math.inf, True
        return SweepRow(rho, slowness_rho(decay, u), nmte(truth, psm), e_a, diverged, u, truth, psm, pa)

    return _pool_map(one, list(setup.rhos), max_workers)


def make_setup_plant(setup: SweepSetup) -> Plant:
    return {"sdof": SdofPlant, "hasel": HaselPlant, "joint": JointPlant}[setup.plant]()


def run_sweep(setup: SweepSetup, plant: Plant | None = None, max_workers: int = 1):
    """Identify both models per ``setup`` and sweep; returns ``(rows, sm, assm, decay)``."""
    plant = plant or make_setup_plant(setup)
    decay = release_decay(plant, setup.decay_from, setup.decay_duration, setup.dt, setup.dt_integration)
    assm = identify_assm(plant, setup.assm, setup.dt, setup.dt_integration, max_workers)
    sm = identify_sm(plant, setup.sm, setup.dt, decay, setup.dt_integration, max_workers)
    return rho_sweep(plant, setup, sm, assm, decay, max_workers), sm, assm, decay


@dataclass(frozen=True)
class BenchSetup:
    """Standard joint tracking benchmark."""

    dt: float = 1e-3
    decay_from: float = 3.0
    decay_duration: float = 3.0
    sm: SmSetup = SmSetup(u_range=(-5.0, 5.0), order=7, rho=0.05, duration=40.0, seeds=(1, 2, 3))
    reference_range: tuple[float, float] = (-45.0, 45.0)
    reference_rho: float = 0.2
    reference_duration: float = 20.0
    n_steps: int = 3
    seed: int = 42
    calibration_seed: int = 43
    noise_std_deg: float = 0.05
    kp_grid: tuple[float, float, int] = (1e-3, 1.0, 10)
    ki_grid: tuple[float, float, int] = (1e-2, 10.0, 10)
    limits: SafetyLimits = SafetyLimits()
    clutch: ClutchConfig = ClutchConfig()
    ema_alpha: float = 0.1


JOINT_BENCH = BenchSetup()


def log_grid(spec) -> np.ndarray:
    lo, hi, n = spec
    return np.logspace(np.log10(lo), np.log10(hi), int(n))


def joint_decay(plant: JointPlant, setup: BenchSetup) -> TimeSeries:
    return release_decay(plant, setup.decay_from, setup.decay_duration, setup.dt)


def bench_reference(setup: BenchSetup, decay: TimeSeries, seed: int) -> TimeSeries:
    return gen_step_reference(
        seed, setup.reference_duration, setup.dt, setup.reference_range, setup.reference_rho,
        decay, n_steps=setup.n_steps,
    )


def tune_all(plant, sm, setup: BenchSetup, calibration: TimeSeries, base_pi: PiConfig) -> dict:
    gains = {}
    for mode in (Mode.FB_ONLY, Mode.FF_FB):
        gains[mode.value], _ = tune_gains(
            plant, mode, sm, setup.limits, setup.clutch, calibration, setup.seed,
            kp_grid=log_grid(setup.kp_grid), ki_grid=log_grid(setup.ki_grid),
            base_pi=base_pi, noise_std_deg=setup.noise_std_deg,
        )
    return gains


def run_bench(
    setup: BenchSetup = JOINT_BENCH,
    plant: JointPlant | None = None,
    sm: SlowManifoldModel | None = None,
    gains: dict | None = None,
    max_workers: int = 1,
) -> tuple[BenchmarkReport, dict, SlowManifoldModel, TimeSeries]:
    """Train the joint SM if needed, tune gains if needed and benchmark all modes.

    Returns ``(report, gains, sm, reference)``.
    """
    plant = plant or JointPlant()
    decay = joint_decay(plant, setup)
    if sm is None:
        sm = identify_sm(plant, setup.sm, setup.dt, decay, max_workers=max_workers)
    reference = bench_reference(setup, decay, setup.seed)
    base_pi = PiConfig(T_s=setup.dt, ema_alpha=setup.ema_alpha)
    if gains is None:
        gains = tune_all(plant, sm, setup, bench_reference(setup, decay, setup.calibration_seed), base_pi)
    report = benchmark(
        plant, sm, gains, setup.limits, setup.clutch, reference, setup.seed,
        base_pi=base_pi, max_workers=max_workers, noise_std_deg=setup.noise_std_deg,
    )
    return report, gains, sm, reference
