"""Flat ``section.key = value`` run configuration.

Resolution order is defaults, then an optional file, then command-line
overrides. Every value is parsed and range-checked as soon as it is set,
and cross-key consistency (grid vs pulse) is checked once all layers are
merged. Errors carry the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, RamanSimError
from .optimizer import FreePhaseSpace, GAConfig, ParametricSpace
from .pulse import MIN_SAMPLES, DoubleBlobSpec, GridSpec, make_double_blob
from .solver import SimConfig, SolverGrid

TWO_PI = 2 * math.pi


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text):
    if isinstance(text, bool):
        raise ValueError("expected an integer")
    if isinstance(text, int):
        return text
    return int(str(text).strip(), 0)


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {text!r}")
    return v


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _pow2(v):
    return v >= MIN_SAMPLES and v & (v - 1) == 0


def _fixed_list(text):
    names = [s.strip() for s in str(text).split(",") if s.strip()]
    allowed = {"blob_width", "separation", "phase_offset", "amplitude_ratio"}
    bad = [n for n in names if n not in allowed]
    if bad:
        raise ValueError(f"unknown parameter(s) {bad}")
    return ",".join(names)


@dataclass(frozen=True)
class Option:
    parse: object
    default: object
    check: object = None
    rule: str = ""
    help: str = ""


OPTIONS = {
    "run.seed": Option(_int, 20020101, lambda v: 0 <= v < 2**64, "0 <= seed < 2^64", "master RNG seed"),
    "run.threads": Option(_int, 1, lambda v: v >= 1, ">= 1", "worker threads for trials"),
    "pulse.n_samples": Option(_int, 1024, _pow2, f"power of two >= {MIN_SAMPLES}", "time/frequency samples"),
    "pulse.dt": Option(_float, 0.01, _positive, "> 0", "time step (ps)"),
    "pulse.center_frequency": Option(_float, 0.0, None, "", "rotating-frame label (THz)"),
    "pulse.blob_width": Option(_float, 0.5, _positive, "> 0", "blob intensity FWHM (THz)"),
    "pulse.separation": Option(_float, 3.3, _nonneg, ">= 0", "blob separation (THz)"),
    "pulse.phase_offset": Option(_float, 0.0, None, "", "upper-blob phase (rad)"),
    "pulse.amplitude_ratio": Option(_float, 1.0, _nonneg, ">= 0", "upper/lower blob amplitude"),
    "solver.n_x": Option(_int, SolverGrid().n_x, lambda v: v >= 2, ">= 2", "x nodes"),
    "solver.x_max": Option(_float, SolverGrid().x_max, _positive, "> 0", "interaction length"),
    "sim.alpha": Option(_float, 0.0, _nonneg, ">= 0", "pump-pump Raman coupling"),
    "sim.suppress_q3": Option(_bool, True, None, "", "drop the excited-state coherence"),
    "sim.w1": Option(_float, -1.0, None, "", "inversion of mode 1"),
    "sim.w2": Option(_float, -1.0, None, "", "inversion of mode 2"),
    "sim.delta": Option(_float, 0.0, None, "", "residual detuning (rad/ps)"),
    "sim.pump_scale": Option(_float, SimConfig().pump_scale, _positive, "> 0", "pump amplitude factor"),
    "sim.calibrate": Option(_bool, True, None, "", "auto-set pump_scale below saturation"),
    "sim.calibration_trials": Option(_int, 32, lambda v: v >= 1, ">= 1", "pilot ensemble size"),
    "sim.noise_sigma": Option(_float, SimConfig().noise_sigma, _positive, "> 0", "seed coherence std"),
    "sim.spatial_noise": Option(_bool, False, None, "", "independent seeds per x node"),
    "scan.phi_points": Option(_int, 17, lambda v: v >= 1, ">= 1", "phase points"),
    "scan.phi_max": Option(_float, TWO_PI, _positive, "> 0", "end of the phase range (rad)"),
    "scan.endpoint": Option(_bool, False, None, "", "include phi_max itself"),
    "scan.n_trials": Option(_int, 200, lambda v: v >= 1, ">= 1", "trials per phase"),
    "scan.max_fail_fraction": Option(_float, 0.0, lambda v: 0 <= v <= 1, "in [0, 1]", "tolerated diverging trials"),
    "trial.index": Option(_int, 0, _nonneg, ">= 0", "trial substream for the trial command"),
    "trial.snapshots": Option(str, "", None, "", "comma-separated x node indices to dump"),
    "tf.sigma_t": Option(_float, 0.25, _positive, "> 0", "Husimi time smoothing (ps)"),
    "tf.stride": Option(_int, 4, lambda v: v >= 1, ">= 1", "downsampling of distribution dumps"),
    "ga.space": Option(str, "parametric", lambda v: v in ("parametric", "free_phase"), "parametric|free_phase", "search space"),
    "ga.fixed": Option(_fixed_list, "amplitude_ratio", None, "", "parametric genes held at the pulse.* values"),
    "ga.n_bins": Option(_int, 8, lambda v: v >= 2 and v % 2 == 0, "even, >= 2", "free-phase bins"),
    "ga.population_size": Option(_int, 16, lambda v: v >= 2, ">= 2", ""),
    "ga.n_generations": Option(_int, 20, lambda v: v >= 1, ">= 1", ""),
    "ga.elite_count": Option(_int, 2, _nonneg, ">= 0", ""),
    "ga.mutation_sigma": Option(_float, 0.1, _nonneg, ">= 0", "in normalised gene units"),
    "ga.crossover_rate": Option(_float, 0.7, lambda v: 0 <= v <= 1, "in [0, 1]", ""),
    "ga.tournament_size": Option(_int, 3, lambda v: v >= 1, ">= 1", ""),
    "ga.trials_per_eval": Option(_int, 32, lambda v: v >= 1, ">= 1", ""),
    "ga.objective_sign": Option(_int, 1, lambda v: v in (1, -1), "+1 or -1", "+1 favours mode 1"),
}


def defaults():
    return {k: o.default for k, o in OPTIONS.items()}


def parse_value(key, raw):
    """Parse and range-check one value; raises :class:`ConfigError` naming ``key``."""
    if key not in OPTIONS:
        raise ConfigError(key, "unknown configuration key")
    opt = OPTIONS[key]
    try:
        v = opt.parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None
    if opt.check is not None and not opt.check(v):
        raise ConfigError(key, f"value {v!r} out of range ({opt.rule})")
    return v


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError("--config", f"no such file: {path}")
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path.name}:{n}", "expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = parse_value(k, v)
    return out


def parse_assignments(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(item, "expected key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        out[k] = parse_value(k, v)
    return out


def resolve(file_path=None, overrides=None):
    """Merge defaults, file and overrides, then check cross-key consistency."""
    cfg = defaults()
    if file_path is not None:
        cfg.update(read_config_file(file_path))
    for k, v in (overrides or {}).items():
        cfg[k] = parse_value(k, v)
    check(cfg)
    return cfg


def check(cfg):
    """Build every derived object once so inconsistencies surface early."""
    try:
        grid = grid_spec(cfg)
    except RamanSimError as exc:
        key = "pulse.n_samples" if "n_samples" in str(exc) else "pulse.dt"
        raise ConfigError(key, str(exc)) from None
    try:
        make_double_blob(blob_spec(cfg), grid)
    except RamanSimError as exc:
        raise ConfigError("pulse.blob_width" if "window" in str(exc) else "pulse.separation", str(exc)) from None
    if cfg["ga.elite_count"] >= cfg["ga.population_size"]:
        raise ConfigError("ga.elite_count", "must be smaller than ga.population_size")
    sim_config(cfg)
    ga_config(cfg)
    search_space(cfg)


def grid_spec(cfg):
    return GridSpec(cfg["pulse.n_samples"], cfg["pulse.dt"], cfg["pulse.center_frequency"])


def blob_spec(cfg):
    return DoubleBlobSpec(
        cfg["pulse.blob_width"], cfg["pulse.separation"], cfg["pulse.phase_offset"], cfg["pulse.amplitude_ratio"]
    )


def sim_config(cfg, pump_scale=None):
    return SimConfig(
        alpha=cfg["sim.alpha"],
        suppress_q3=cfg["sim.suppress_q3"],
        w1=cfg["sim.w1"],
        w2=cfg["sim.w2"],
        delta=cfg["sim.delta"],
        pump_scale=cfg["sim.pump_scale"] if pump_scale is None else pump_scale,
        grid=SolverGrid(cfg["solver.n_x"], cfg["solver.x_max"]),
        noise_sigma=cfg["sim.noise_sigma"],
        rng_seed=cfg["run.seed"],
        spatial_noise=cfg["sim.spatial_noise"],
    )


def ga_config(cfg):
    return GAConfig(
        population_size=cfg["ga.population_size"],
        n_generations=cfg["ga.n_generations"],
        elite_count=cfg["ga.elite_count"],
        mutation_sigma=cfg["ga.mutation_sigma"],
        crossover_rate=cfg["ga.crossover_rate"],
        tournament_size=cfg["ga.tournament_size"],
        trials_per_eval=cfg["ga.trials_per_eval"],
        objective_sign=cfg["ga.objective_sign"],
        rng_seed=cfg["run.seed"],
    )


def search_space(cfg):
    if cfg["ga.space"] == "free_phase":
        return FreePhaseSpace(cfg["ga.n_bins"], blob_spec(cfg))
    names = [n for n in cfg["ga.fixed"].split(",") if n]
    blob = blob_spec(cfg)
    fixed = {n: getattr(blob, n) for n in names}
    bounds = {k: v for k, v in ParametricSpace().bounds.items() if k not in fixed}
    return ParametricSpace(bounds=bounds, fixed=fixed)


def format_config(cfg):
    """Canonical ``key = value`` text, one line per key in schema order."""
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in OPTIONS)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
