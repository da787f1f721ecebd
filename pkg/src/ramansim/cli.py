"""Command-line entry point ``raman-sim``.

Every command writes its files into ``--out`` (default ``$RAMAN_SIM_OUT``
or ``./raman_out``) together with ``manifest.json``. ``replay`` reruns a
manifest and compares the output hashes.

Exit status: 0 success, 1 validation or physics failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from .errors import ConfigError, DivergenceError, GridMismatchError, ParameterError, RamanSimError
from .experiments import (
    calibrate_pump_scale,
    draw_seed,
    phase_scan,
    run_trial,
    write_scan_csv,
)
from .optimizer import genome_dict, optimize, write_history
from .pulse import dump_envelope_csv, make_double_blob, to_time
from .solver import dump_snapshots, snapshot_two_mode
from .timefreq import dump_distribution, husimi, lobe_peaks, wigner

log = logging.getLogger("ramansim")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MANIFEST = "manifest.json"
RULE = "=" * 60


class UsageError(RamanSimError):
    pass


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _section(title):
    print(RULE)
    print(f"== {title}")
    print(RULE)


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return Path(path)


def _resolve_scale(cfg, pump, threads):
    sim = C.sim_config(cfg)
    if not cfg["sim.calibrate"]:
        return sim
    scale = calibrate_pump_scale(pump, sim, n_pilot=cfg["sim.calibration_trials"], threads=threads)
    log.info("calibrated pump_scale = %.6g", scale)
    return sim.with_(pump_scale=scale)


# ------------------------------------------------------------------ commands


def cmd_pulse(cfg, out, plots):
    grid = C.grid_spec(cfg)
    blob = C.blob_spec(cfg)
    spec = make_double_blob(blob, grid)
    env = to_time(spec)
    files = [dump_envelope_csv(env, out / "pulse_time.csv"), dump_envelope_csv(spec, out / "pulse_freq.csv")]
    w = wigner(env)
    h = husimi(env, cfg["tf.sigma_t"])
    extra = {"phase_offset": blob.phase_offset, "sigma_t": cfg["tf.sigma_t"]}
    files += dump_distribution(w, out / "wigner.csv", cfg["tf.stride"], extra)
    files += dump_distribution(h, out / "husimi.csv", cfg["tf.stride"], extra)
    _section("pulse")
    print(f"phase_offset,{blob.phase_offset!r}")
    print("lobe,peak,t_ps,f_thz")
    for name, (v, t, f) in zip(("lower", "upper"), lobe_peaks(h)):
        print(f"husimi_{name},{v:.6g},{t:.4g},{f:.4g}")
    print(f"wigner_at_origin,{w.values[grid.n_samples // 2, grid.n_samples // 2]:.6g}")
    if plots:
        from . import plotting

        files.append(plotting.plot_pulse(env, spec, out / "pulse.png"))
        files.append(plotting.plot_distribution(w, out / "wigner.png"))
        files.append(plotting.plot_distribution(h, out / "husimi.png"))
    return EXIT_OK, files, {}


def cmd_trial(cfg, out, plots):
    grid = C.grid_spec(cfg)
    pump = to_time(make_double_blob(C.blob_spec(cfg), grid))
    sim = _resolve_scale(cfg, pump, cfg["run.threads"])
    seed = draw_seed(sim, cfg["trial.index"])
    res = run_trial(pump, seed, sim)
    doc = asdict(res)
    doc.update(q1_0=[seed.q1_0.real, seed.q1_0.imag], q2_0=[seed.q2_0.real, seed.q2_0.imag],
               phi_S1=seed.phi_S1, phi_S2=seed.phi_S2, pump_scale=sim.pump_scale)
    files = [_dump_json(doc, out / "trial.json")]
    if cfg["trial.snapshots"]:
        try:
            idx = [int(s) for s in cfg["trial.snapshots"].split(",") if s.strip()]
        except ValueError:
            raise ConfigError("trial.snapshots", "expected comma-separated integers") from None
        if any(i < 0 or i >= sim.grid.n_x for i in idx):
            raise ConfigError("trial.snapshots", f"indices must lie in [0, {sim.grid.n_x})")
        seeds = seed.spatial if seed.spatial is not None else (seed.q1_0, seed.q2_0)
        snaps = snapshot_two_mode(pump, seeds, sim, idx)
        files.append(dump_snapshots(snaps, out / "snapshots.csv"))
    _section("trial")
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK, files, {"pump_scale": sim.pump_scale}


def _phases(cfg):
    return np.linspace(0.0, cfg["scan.phi_max"], cfg["scan.phi_points"], endpoint=cfg["scan.endpoint"])


def cmd_scan(cfg, out, plots):
    grid = C.grid_spec(cfg)
    blob = C.blob_spec(cfg)
    threads = cfg["run.threads"]
    sim = _resolve_scale(cfg, to_time(make_double_blob(blob.with_phase(0.0), grid)), threads)
    scan = phase_scan(
        blob, _phases(cfg), cfg["scan.n_trials"], sim, grid=grid, threads=threads,
        max_fail_fraction=cfg["scan.max_fail_fraction"],
    )
    files = [write_scan_csv(scan, out / "scan.csv")]
    _section(f"scan alpha={sim.alpha:g}")
    print(Path(files[0]).read_text(), end="")
    print(f"dropped,{int(scan.n_dropped.sum())}")
    if plots:
        from . import plotting

        files.append(plotting.plot_scan(scan, out / "scan.png", label=f"alpha={sim.alpha:g}"))
    return EXIT_OK, files, {"pump_scale": sim.pump_scale}


def cmd_optimize(cfg, out, plots):
    grid = C.grid_spec(cfg)
    threads = cfg["run.threads"]
    sim = _resolve_scale(cfg, to_time(make_double_blob(C.blob_spec(cfg).with_phase(0.0), grid)), threads)
    res = optimize(C.ga_config(cfg), sim, C.search_space(cfg), grid, threads=threads)
    files = list(write_history(res, out / "ga_history.csv", out / "ga_best.json"))
    _section("optimize")
    print(Path(files[0]).read_text(), end="")
    print("best," + json.dumps(genome_dict(res.best), sort_keys=True))
    if plots:
        from . import plotting

        files.append(plotting.plot_history(res, out / "ga_history.png"))
    return EXIT_OK, files, {"pump_scale": sim.pump_scale}


def cmd_validate(cfg, out, plots):
    from .validation import run_all

    checks = run_all(C.grid_spec(cfg), C.sim_config(cfg), seed=cfg["run.seed"] % 2**32)
    _section("validate")
    print(f"{'check':34s} {'value':>12s} {'tolerance':>10s}  result")
    for c in checks:
        print(f"{c.name:34s} {c.value:12.3e} {c.tolerance:10.1e}  {'PASS' if c.passed else 'FAIL'}  {c.detail}")
    doc = [asdict(c) for c in checks]
    files = [_dump_json(doc, out / "validate.json")]
    ok = all(c.passed for c in checks)
    return (EXIT_OK if ok else EXIT_FAIL), files, {}


COMMANDS = {
    "pulse": (cmd_pulse, "synthesise the double-blob pump and its Wigner/Husimi maps"),
    "trial": (cmd_trial, "run one seeded trial and print its result as JSON"),
    "scan": (cmd_scan, "ensemble asymmetry versus phase offset"),
    "optimize": (cmd_optimize, "genetic search over pump shapes"),
    "validate": (cmd_validate, "run the numerical self-checks"),
}


# ------------------------------------------------------------------ plumbing


def _common(p):
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--seed", type=str, help="master RNG seed (run.seed)")
    p.add_argument("--threads", type=str, help="worker threads (run.threads)")
    p.add_argument("--out", type=Path, help="output directory (default $RAMAN_SIM_OUT or ./raman_out)")
    p.add_argument("--alpha", type=str, help="sim.alpha")
    p.add_argument("--phi-points", type=str, help="scan.phi_points")
    p.add_argument("--n-trials", type=str, help="scan.n_trials")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any key")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="raman-sim", description="Two-mode transient stimulated Raman scattering simulator."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        _common(sub.add_parser(name, help=text, description=text))
    rp = sub.add_parser("replay", help="rerun a manifest and compare outputs", description="rerun a manifest and compare outputs")
    rp.add_argument("manifest", type=Path)
    rp.add_argument("--out", type=Path, help="directory for the rerun (default: <manifest dir>/replay)")
    rp.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def overrides_from_args(args):
    ov = {}
    for flag, key in (("seed", "run.seed"), ("threads", "run.threads"), ("alpha", "sim.alpha"),
                      ("phi_points", "scan.phi_points"), ("n_trials", "scan.n_trials")):
        v = getattr(args, flag, None)
        if v is not None:
            ov[key] = v
    # --set is applied after the named flags
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ConfigError(item, "expected KEY=VALUE")
        k, v = (s.strip() for s in item.split("=", 1))
        ov[k] = v
    return ov


def _out_dir(args):
    out = args.out or Path(os.environ.get("RAMAN_SIM_OUT", "raman_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def execute(command, cfg, out, plots):
    """Run one command and write its manifest; returns ``(status, manifest)``."""
    fn = COMMANDS[command][0]
    t0 = time.perf_counter()
    status, files, resolved = fn(cfg, out, plots)
    files = [Path(f) for f in files]
    manifest = {
        "tool": "raman-sim",
        "version": __version__,
        "command": command,
        "plots": plots,
        "seed": cfg["run.seed"],
        "config": {k: cfg[k] for k in C.OPTIONS},
        "resolved": resolved,
        "status": status,
        "duration_s": round(time.perf_counter() - t0, 3),
        "outputs": [{"path": f.name, "sha256": _sha256(f)} for f in files],
    }
    (out / "config.txt").write_text(C.format_config(cfg))
    _dump_json(manifest, out / MANIFEST)
    return status, manifest


def replay(manifest_path, out=None):
    """Rerun a manifest; returns the list of outputs whose hashes differ."""
    manifest = json.loads(Path(manifest_path).read_text())
    if manifest.get("command") not in COMMANDS:
        raise ConfigError("command", f"manifest names unknown command {manifest.get('command')!r}")
    cfg = C.resolve(overrides=manifest["config"])
    out = Path(out) if out else Path(manifest_path).parent / "replay"
    out.mkdir(parents=True, exist_ok=True)
    _, new = execute(manifest["command"], cfg, out, manifest.get("plots", True))
    old = {o["path"]: o["sha256"] for o in manifest["outputs"]}
    fresh = {o["path"]: o["sha256"] for o in new["outputs"]}
    return sorted(p for p in set(old) | set(fresh) if old.get(p) != fresh.get(p))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        if args.command == "replay":
            diff = replay(args.manifest, args.out)
            _section("replay")
            if diff:
                for p in diff:
                    print(f"MISMATCH,{p}")
                return EXIT_FAIL
            print("identical")
            return EXIT_OK
        cfg = C.resolve(args.config, overrides_from_args(args))
        status, _ = execute(args.command, cfg, _out_dir(args), not args.no_plots)
        return status
    except (ConfigError, UsageError, ParameterError, GridMismatchError) as exc:
        print(f"raman-sim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, FloatingPointError) as exc:
        print(f"raman-sim: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"raman-sim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
