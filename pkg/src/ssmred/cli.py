"""Command-line entry point: ``ssmred <command> --config <path> [--out <dir>]``.

Exit codes: 0 success, 2 configuration error, 3 simulation fault, 4 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import workflows as wf
from .control import ClutchConfig, PiConfig, SafetyLimits, benchmark
from .plants import SimulationFault, SteadyStateError, make_plant, simulate
from .reduction import (
    AdiabaticSsmModel,
    Embedding,
    ModelFormatError,
    NonMonotoneError,
    RegressionError,
    SlowManifoldModel,
    SsmFitError,
    load_model,
    save_model,
)
from .signals import GenerationError, LinearDecay, MetricError, TimeSeries, gen_slow_input
from .svg import write_line_chart

log = logging.getLogger("ssmred")

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION, EXIT_FIT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer"}
_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_GRID = {"type": "array", "prefixItems": [_POS, _POS, {"type": "integer", "minimum": 1}], "minItems": 3, "maxItems": 3}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


PLANT = _obj(
    {
        "name": {"enum": ["sdof", "hasel", "joint", "static_map"]},
        "params": {"type": "object"},
        "coefficients": {"type": "array", "items": _NUM, "minItems": 1},
    },
    ["name"],
)
DECAY = {
    "oneOf": [
        _obj({"lambda": {"type": "number", "exclusiveMaximum": 0}}, ["lambda"]),
        _obj({"release_from": _NUM, "duration": _POS}, ["release_from", "duration"]),
    ]
}
SM_SPEC = _obj(
    {
        "u_range": _RANGE,
        "order": {"type": "integer", "minimum": 0},
        "rho": _POS,
        "duration": _POS,
        "seeds": {"type": "array", "items": _INT, "minItems": 1},
    }
)
ASSM_SPEC = _obj(
    {
        "u_range": _RANGE,
        "grid_size": {"type": "integer", "minimum": 2},
        "jump_duration": _POS,
        "transient": {"type": "number", "minimum": 0},
        "d": {"type": "integer", "minimum": 1},
        "m_order": {"type": "integer", "minimum": 1},
        "r_order": {"type": "integer", "minimum": 1},
        "embedding": _obj({"p": {"type": "integer", "minimum": 1}, "delay": {"type": "integer", "minimum": 1}}),
        "interpolation": {"enum": ["pchip", "linear"]},
        "shared_tangent": {"type": "boolean"},
    }
)
_COMMON = {"plant": PLANT, "out": {"type": "string"}, "dt": _POS, "dt_integration": _POS}

SCHEMAS = {
    "simulate": _obj(
        {
            **_COMMON,
            "duration": _POS,
            "input": {
                "oneOf": [
                    _obj({"kind": {"const": "constant"}, "value": _NUM}, ["kind", "value"]),
                    _obj(
                        {
                            "kind": {"const": "slow"},
                            "seed": _INT,
                            "range": _RANGE,
                            "rho": _POS,
                            "decay": DECAY,
                        },
                        ["kind", "seed", "range", "rho", "decay"],
                    ),
                    _obj({"kind": {"const": "csv"}, "path": {"type": "string"}}, ["kind", "path"]),
                ]
            },
            "initial": {
                "oneOf": [
                    _obj({"rest_at": _NUM}, ["rest_at"]),
                    _obj({"state": {"type": "array", "items": _NUM}}, ["state"]),
                ]
            },
        },
        ["plant", "dt", "duration", "input", "initial"],
    ),
    "identify": _obj(
        {**_COMMON, "kind": {"enum": ["sm", "assm"]}, "decay": DECAY, "sm": SM_SPEC, "assm": ASSM_SPEC},
        ["plant", "kind"],
    ),
    "rho-sweep": _obj(
        {
            **_COMMON,
            "decay": DECAY,
            "sm": SM_SPEC,
            "assm": ASSM_SPEC,
            "rhos": {"type": "array", "items": _POS, "minItems": 1},
            "test": _obj({"range": _RANGE, "duration": _POS, "seed": _INT}),
            "drift": {"type": "boolean"},
            "sm_model": {"type": "string"},
            "assm_model": {"type": "string"},
        },
        ["plant", "rhos"],
    ),
    "control-bench": _obj(
        {
            **_COMMON,
            "sm_model": {"type": "string"},
            "decay": DECAY,
            "reference": _obj(
                {
                    "range": _RANGE,
                    "rho": _POS,
                    "duration": _POS,
                    "n_steps": {"type": "integer", "minimum": 1},
                    "seed": _INT,
                    "calibration_seed": _INT,
                }
            ),
            "gains": _obj(
                {m: {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2, "maxItems": 2}
                 for m in ("FbOnly", "FfFb")}
            ),
            "tuning": _obj({"kp_grid": _GRID, "ki_grid": _GRID}),
            "limits": _obj({"v_min": _NUM, "v_max": _NUM, "dv_max": _POS}),
            "clutch": _obj({"dead_zone_eps": _NUM, "tau_eng": _NUM, "tau_ramp": _NUM, "tau_cool": _NUM}),
            "ema_alpha": _POS,
            "noise_std_deg": {"type": "number", "minimum": 0},
        },
        ["plant", "sm_model"],
    ),
}


# ---------------------------------------------------------------- config helpers


class Context:
    """Validated config plus path resolution relative to the config file."""

    def __init__(self, command: str, config_path: Path, out: str | None):
        self.command = command
        try:
            self.doc = json.loads(config_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        try:
            jsonschema.Draft202012Validator(SCHEMAS[command]).validate(self.doc)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config error at {where}: {exc.message}") from exc
        self.base = config_path.resolve().parent
        self.out = Path(out).resolve() if out else self.resolve(self.doc.get("out", "out"))

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else (self.base / path).resolve()

    def existing(self, key: str) -> Path:
        path = self.resolve(self.doc[key])
        if not path.is_file():
            raise ConfigError(f"{key}: no such file {path}")
        return path

    def output(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name


def build_plant(spec: dict):
    if spec["name"] == "static_map":
        if "coefficients" not in spec:
            raise ConfigError("plant: static_map needs 'coefficients'")
        return wf.StaticMapPlant(spec["coefficients"])
    if "coefficients" in spec:
        raise ConfigError("plant: 'coefficients' only applies to static_map")
    try:
        return make_plant(spec["name"], spec.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"plant: {exc}") from exc


def _override(base, values: dict, **conv):
    """Replace dataclass fields of ``base`` by ``values`` (lists become tuples)."""
    kw = {}
    for key, val in values.items():
        if key in conv:
            val = conv[key](val)
        elif isinstance(val, list):
            val = tuple(val)
        kw[key] = val
    try:
        return dataclasses.replace(base, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _embedding(doc: dict) -> Embedding:
    return Embedding(**doc)


SWEEP_PRESETS = {"sdof": wf.SDOF_SWEEP, "hasel": wf.HASEL_CHECK}


def sweep_setup(ctx: Context) -> wf.SweepSetup:
    name = ctx.doc["plant"]["name"]
    if name not in SWEEP_PRESETS:
        raise ConfigError(f"no sweep defaults for plant {name!r}; use sdof or hasel")
    base = SWEEP_PRESETS[name]
    d = ctx.doc
    kw = {}
    for key in ("dt", "dt_integration", "drift"):
        if key in d:
            kw[key] = d[key]
    if "sm" in d:
        kw["sm"] = _override(base.sm, d["sm"])
    if "assm" in d:
        kw["assm"] = _override(base.assm, d["assm"], embedding=_embedding)
    if "rhos" in d:
        kw["rhos"] = tuple(d["rhos"])
    test = d.get("test", {})
    for src, dst in (("range", "test_range"), ("duration", "test_duration"), ("seed", "test_seed")):
        if src in test:
            kw[dst] = tuple(test[src]) if src == "range" else test[src]
    if "release_from" in d.get("decay", {}):
        kw["decay_from"] = d["decay"]["release_from"]
        kw["decay_duration"] = d["decay"]["duration"]
    return _override(base, kw)


def decay_from_spec(spec: dict | None, plant, dt, dt_integration, default):
    if spec is None:
        if default is None:
            raise ConfigError("'decay' is required for this plant")
        return wf.release_decay(plant, default[0], default[1], dt, dt_integration)
    if "lambda" in spec:
        return LinearDecay(float(spec["lambda"]))
    return wf.release_decay(plant, spec["release_from"], spec["duration"], dt, dt_integration)


def worker_count() -> int:
    raw = os.environ.get("SSMRED_THREADS")
    cpus = os.cpu_count() or 1
    if raw is None:
        return cpus
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"SSMRED_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("SSMRED_THREADS must be at least 1")
    return min(n, cpus)


# ---------------------------------------------------------------- commands


def cmd_simulate(ctx: Context) -> None:
    d = ctx.doc
    plant = build_plant(d["plant"])
    if isinstance(plant, wf.StaticMapPlant):
        raise ConfigError("simulate needs a dynamic plant")
    dt, dti = d["dt"], d.get("dt_integration")
    spec = d["input"]
    if spec["kind"] == "constant":
        u = wf.constant_input(spec["value"], d["duration"], dt)
    elif spec["kind"] == "slow":
        decay = decay_from_spec(spec["decay"], plant, dt, dti, None)
        u = gen_slow_input(spec["seed"], d["duration"], dt, spec["range"], spec["rho"], decay)
    else:
        path = ctx.resolve(spec["path"])
        try:
            u = TimeSeries.from_csv(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"input: {exc}") from exc
        if not np.isclose(u.dt, dt, rtol=1e-9):
            raise ConfigError(f"input: CSV sample period {u.dt:g} differs from dt {dt:g}")
    init = d["initial"]
    if "rest_at" in init:
        x0 = wf.rest_state(plant, init["rest_at"])
    else:
        x0 = np.array(init["state"], dtype=float)
        if x0.shape != (plant.n_state,):
            raise ConfigError(f"initial.state must have {plant.n_state} entries")
    traj = simulate(plant, u, x0, dt_integration=dti)
    table = TimeSeries(traj.t0, traj.dt, np.column_stack([u.values, traj.values]), names=("u",) + traj.names)
    table.to_csv(ctx.output("trajectory.csv"))
    obs = wf.observe(plant, traj)
    write_line_chart(
        ctx.output("trajectory.svg"), [(obs.names[0], obs.times, obs.scalar())],
        title=f"{plant.name} response", xlabel="t [s]", ylabel=obs.names[0],
    )


def _fit_report(model) -> dict:
    if isinstance(model, SlowManifoldModel):
        return {
            "kind": "sm",
            "coefficients": model.coefficients.tolist(),
            "monotone": model.monotone,
            "image": list(model.image),
            "roundtrip_bound": model.roundtrip_bound,
            **model.diagnostics,
        }
    return {
        "kind": "assm",
        "u_grid": model.u_grid.tolist(),
        "locals": [{"u_bar": m.u_bar, **m.diagnostics} for m in model.locals],
    }


def _identify_defaults(name: str):
    """Default (dt, dt_integration, sm setup, assm setup, decay) per plant."""
    if name in SWEEP_PRESETS:
        s = SWEEP_PRESETS[name]
        return s.dt, s.dt_integration, s.sm, s.assm, (s.decay_from, s.decay_duration)
    if name == "joint":
        b = wf.JOINT_BENCH
        return b.dt, None, b.sm, None, (b.decay_from, b.decay_duration)
    return None, None, None, None, None


def cmd_identify(ctx: Context) -> None:
    d = ctx.doc
    plant = build_plant(d["plant"])
    dt0, dti0, sm0, assm0, decay0 = _identify_defaults(d["plant"]["name"])
    dt = d.get("dt", dt0)
    dti = d.get("dt_integration", dti0)
    if dt is None:
        raise ConfigError("'dt' is required for this plant")
    if d["kind"] == "sm":
        if sm0 is None and "sm" not in d:
            raise ConfigError("'sm' is required for this plant")
        setup = _override(sm0, d.get("sm", {})) if sm0 else _sm_from_doc(d["sm"])
        if isinstance(plant, wf.StaticMapPlant) and "decay" not in d:
            raise ConfigError("'decay' is required for a static map")
        decay = decay_from_spec(d.get("decay"), plant, dt, dti, decay0)
        model = wf.identify_sm(plant, setup, dt, decay, dti, worker_count())
    else:
        if isinstance(plant, wf.StaticMapPlant):
            raise ConfigError("assm identification needs a dynamic plant")
        if assm0 is None and "assm" not in d:
            raise ConfigError("'assm' is required for this plant")
        doc = d.get("assm", {})
        setup = (
            _override(assm0, doc, embedding=_embedding) if assm0 else _assm_from_doc(doc)
        )
        model = wf.identify_assm(plant, setup, dt, dti, worker_count())
    save_model(model, ctx.output("model.json"))
    ctx.output("fit_report.json").write_text(json.dumps(_fit_report(model), indent=2))


def _sm_from_doc(doc: dict) -> wf.SmSetup:
    missing = {"u_range", "order", "rho", "duration"} - set(doc)
    if missing:
        raise ConfigError(f"sm: missing keys {sorted(missing)}")
    return wf.SmSetup(tuple(doc["u_range"]), doc["order"], doc["rho"], doc["duration"], tuple(doc.get("seeds", [1])))


def _assm_from_doc(doc: dict) -> wf.AssmSetup:
    missing = {"u_range", "grid_size", "jump_duration", "transient"} - set(doc)
    if missing:
        raise ConfigError(f"assm: missing keys {sorted(missing)}")
    doc = dict(doc)
    if "embedding" in doc:
        doc["embedding"] = _embedding(doc["embedding"])
    doc["u_range"] = tuple(doc["u_range"])
    return wf.AssmSetup(**doc)


def _load(ctx: Context, key: str, kind):
    path = ctx.existing(key)
    try:
        model = load_model(path)
    except (ModelFormatError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if not isinstance(model, kind):
        raise ConfigError(f"{key}: wrong model type {type(model).__name__}")
    return model


def cmd_rho_sweep(ctx: Context) -> None:
    setup = sweep_setup(ctx)
    plant = build_plant(ctx.doc["plant"])
    sm = _load(ctx, "sm_model", SlowManifoldModel) if "sm_model" in ctx.doc else None
    assm = _load(ctx, "assm_model", AdiabaticSsmModel) if "assm_model" in ctx.doc else None
    workers = worker_count()
    decay = decay_from_spec(
        ctx.doc.get("decay"), plant, setup.dt, setup.dt_integration,
        (setup.decay_from, setup.decay_duration),
    )
    if assm is None:
        assm = wf.identify_assm(plant, setup.assm, setup.dt, setup.dt_integration, workers)
    if sm is None:
        sm = wf.identify_sm(plant, setup.sm, setup.dt, decay, setup.dt_integration, workers)
    rows = wf.rho_sweep(plant, setup, sm, assm, decay, workers)
    with open(ctx.output("nmte.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho_target", "rho", "nmte_sm", "nmte_assm", "assm_diverged"])
        for r in rows:
            w.writerow([f"{r.rho_target:.17g}", f"{r.rho:.17g}", f"{r.nmte_sm:.17g}", f"{r.nmte_assm:.17g}", int(r.assm_diverged)])
    for r in rows:
        tag = f"rho_{r.rho_target:g}"
        cols = [r.input.scalar(), r.truth.scalar(), r.pred_sm.scalar()]
        names = ["u", "truth", "sm"]
        series = [("truth", r.truth.times, r.truth.scalar()), ("SM", r.truth.times, r.pred_sm.scalar())]
        if r.pred_assm is not None:
            cols.append(r.pred_assm.scalar())
            names.append("assm")
            series.append(("aSSM", r.truth.times, r.pred_assm.scalar()))
        TimeSeries(0.0, setup.dt, np.column_stack(cols), names=tuple(names)).to_csv(ctx.output(f"{tag}.csv"))
        write_line_chart(
            ctx.output(f"{tag}.svg"), series,
            title=f"rho = {r.rho:.3g}: NMTE SM {100 * r.nmte_sm:.2f}%, aSSM {100 * r.nmte_assm:.2f}%",
            xlabel="t [s]", ylabel="observable",
        )


def bench_setup(ctx: Context) -> wf.BenchSetup:
    d = ctx.doc
    base = wf.JOINT_BENCH
    kw = {}
    if "dt" in d:
        kw["dt"] = d["dt"]
    ref = d.get("reference", {})
    for src, dst in (
        ("range", "reference_range"), ("rho", "reference_rho"), ("duration", "reference_duration"),
        ("n_steps", "n_steps"), ("seed", "seed"), ("calibration_seed", "calibration_seed"),
    ):
        if src in ref:
            kw[dst] = tuple(ref[src]) if src == "range" else ref[src]
    if "release_from" in d.get("decay", {}):
        kw["decay_from"] = d["decay"]["release_from"]
        kw["decay_duration"] = d["decay"]["duration"]
    for key in ("kp_grid", "ki_grid"):
        if key in d.get("tuning", {}):
            kw[key] = tuple(d["tuning"][key])
    for key in ("ema_alpha", "noise_std_deg"):
        if key in d:
            kw[key] = d[key]
    try:
        if "limits" in d:
            kw["limits"] = SafetyLimits(**{**dataclasses.asdict(base.limits), **d["limits"]})
        if "clutch" in d:
            kw["clutch"] = ClutchConfig(**{**dataclasses.asdict(base.clutch), **d["clutch"]})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return _override(base, kw)


def cmd_control_bench(ctx: Context) -> None:
    d = ctx.doc
    if d["plant"]["name"] != "joint":
        raise ConfigError("control-bench needs the joint plant")
    plant = build_plant(d["plant"])
    sm = _load(ctx, "sm_model", SlowManifoldModel)
    setup = bench_setup(ctx)
    if "lambda" in d.get("decay", {}):
        raise ConfigError("control-bench needs a simulated decay (release_from, duration)")
    try:
        base_pi = PiConfig(T_s=setup.dt, ema_alpha=setup.ema_alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    gains = {k: tuple(v) for k, v in d["gains"].items()} if "gains" in d else None
    if gains is not None and set(gains) != {"FbOnly", "FfFb"}:
        raise ConfigError("gains: both FbOnly and FfFb are required")
    decay = wf.joint_decay(plant, setup)
    reference = wf.bench_reference(setup, decay, setup.seed)
    if gains is None:
        calibration = wf.bench_reference(setup, decay, setup.calibration_seed)
        gains = wf.tune_all(plant, sm, setup, calibration, base_pi)
    report = benchmark(
        plant, sm, gains, setup.limits, setup.clutch, reference, setup.seed,
        base_pi=base_pi, max_workers=min(3, worker_count()), noise_std_deg=setup.noise_std_deg,
    )
    report.to_json(ctx.output("report.json"))
    for mode, lg in report.logs.items():
        lg.to_csv(ctx.output(f"log_{mode}.csv"))
    t = reference.times
    series = [("theta_d", t, reference.scalar())]
    series += [(mode, t, lg.theta_meas) for mode, lg in report.logs.items()]
    write_line_chart(
        ctx.output("tracking.svg"), series, title="joint tracking", xlabel="t [s]", ylabel="angle [deg]"
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "rho-sweep": cmd_rho_sweep,
    "control-bench": cmd_control_bench,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ssmred", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        ctx = Context(args.command, args.config, args.out)
        COMMANDS[args.command](ctx)
    except ConfigError as exc:
        print(f"ssmred: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationError as exc:
        print(f"ssmred: input generation failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationFault, SteadyStateError) as exc:
        print(f"ssmred: simulation fault: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except (SsmFitError, RegressionError, NonMonotoneError) as exc:
        print(f"ssmred: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (MetricError, ValueError) as exc:
        print(f"ssmred: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
