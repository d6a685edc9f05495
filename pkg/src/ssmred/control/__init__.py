from .bench import BenchmarkReport, ModeReport, benchmark, reference_hash, tune_gains
from .clutch import ClutchConfig, ClutchState, Mode, Phase, clutch_step, requested_side
from .limits import SafetyLimits, apply_limits, rate_limit, saturate
from .loop import ControlLog, ff_command, joint_step, run_closed_loop
from .pi import PiConfig, PiState, ema_step, pi_step

__all__ = [
    "BenchmarkReport", "ClutchConfig", "ClutchState", "ControlLog", "Mode", "ModeReport",
    "Phase", "PiConfig", "PiState", "SafetyLimits", "apply_limits", "benchmark", "clutch_step",
    "ema_step", "ff_command", "joint_step", "pi_step", "rate_limit", "reference_hash",
    "requested_side", "run_closed_loop", "saturate", "tune_gains",
]
