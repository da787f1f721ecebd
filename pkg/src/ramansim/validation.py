"""Numerical self-checks behind ``raman-sim validate``.

Each check compares a computed quantity with an independent reference and
reports the residual next to its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import iv

from .experiments import draw_seed, run_trial
from .pulse import (
    TIME,
    ComplexEnvelope,
    DoubleBlobSpec,
    GridSpec,
    make_double_blob,
    to_frequency,
    to_time,
)
from .solver import (
    SimConfig,
    SolverGrid,
    bessel_growth,
    conservation_residual,
    input_state,
    integrate_single_mode,
    integrate_two_mode,
)
from .timefreq import husimi, wigner


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


def _le(name, value, tol, detail=""):
    return CheckResult(name, float(value), tol, bool(value <= tol), detail)


def _ge(name, value, tol, detail=""):
    return CheckResult(name, float(value), tol, bool(value >= tol), detail)


def random_envelope(grid, rng, width=0.6):
    """Band-limited random time envelope: random spectrum under a Gaussian."""
    f = grid.frequency_axis()
    env = np.exp(-((f / (2 * width)) ** 2)) * (rng.normal(size=f.size) + 1j * rng.normal(size=f.size))
    t = to_time(ComplexEnvelope(grid, env, "frequency"))
    return t.scaled(1 / math.sqrt(np.sum(t.intensity()) * grid.dt))


def random_blob(rng):
    return DoubleBlobSpec(
        rng.uniform(0.3, 1.2), rng.uniform(2.0, 5.0), rng.uniform(0, 2 * math.pi), rng.uniform(0.5, 1.5)
    )


def check_round_trip(grid, rng, n=20):
    worst = 0.0
    for _ in range(n):
        x = rng.normal(size=grid.n_samples) + 1j * rng.normal(size=grid.n_samples)
        e = ComplexEnvelope(grid, x, TIME)
        back = to_time(to_frequency(e)).samples
        worst = max(worst, np.max(np.abs(back - x)) / np.max(np.abs(x)))
    return _le("fft round trip", worst, 1e-12)


def wigner_marginal_errors(env):
    """Relative errors of the Wigner time and frequency marginals."""
    g = env.grid
    w = wigner(env)
    it = env.intensity()
    e_t = np.max(np.abs(w.time_marginal() - it)) / np.max(it)
    spec = to_frequency(env).intensity()
    n = g.n_samples
    # Wigner bins with even offset from the centre fall on the spectral grid
    fm = w.frequency_marginal()[n // 2 % 2 :: 2]
    ref = spec[n // 4 : n // 4 + fm.size]
    e_f = np.max(np.abs(fm - ref)) / np.max(spec)
    return e_t, e_f


def check_wigner(grid, rng, n=5):
    worst_t = worst_f = 0.0
    for _ in range(n):
        e_t, e_f = wigner_marginal_errors(random_envelope(grid, rng))
        worst_t, worst_f = max(worst_t, e_t), max(worst_f, e_f)
    return [_le("wigner time marginal", worst_t, 1e-8), _le("wigner frequency marginal", worst_f, 1e-8)]


def check_husimi(grid, rng, n=10, sigma_t=0.25):
    worst = math.inf
    for _ in range(n):
        worst = min(worst, float(np.min(husimi(random_envelope(grid, rng), sigma_t).values)))
    return _ge("husimi minimum", worst, -1e-12)


def bessel_case(grid=None, solver_grid=None, amplitude=1.0, q0=1e-8 + 5e-9j):
    """Relative deviation of a constant-pump run from the series solution."""
    grid = grid or GridSpec()
    solver_grid = solver_grid or SolverGrid(512, 3.5)
    pump = ComplexEnvelope(grid, np.full(grid.n_samples, amplitude, dtype=complex), TIME)
    fs, _ = integrate_single_mode(pump, q0, solver_grid)
    tau = np.arange(grid.n_samples) * grid.dt
    ref = bessel_growth(solver_grid.x_max, tau, amplitude, q0)
    return float(np.max(np.abs(fs.eps_S1.samples - ref) / np.abs(ref)))


def series_vs_scipy():
    """Power series against the closed form with ``scipy.special.iv``."""
    x = 3.0
    tau = np.linspace(0.05, 12.0, 200)
    kappa = 0.25
    closed = np.sqrt(x / (kappa * tau)) * iv(1, 2 * np.sqrt(kappa * x * tau))
    series = bessel_growth(x, tau, 1.0, 1.0)
    return float(np.max(np.abs(series - closed) / closed))


def check_bessel():
    return [
        _le("bessel series vs scipy", series_vs_scipy(), 1e-12),
        _le("bessel oracle", bessel_case(), 1e-4),
    ]


def decoupling_error(pump, cfg, q1=1e-6 + 3e-7j):
    cfg = cfg.with_(alpha=0.0, suppress_q3=True)
    fs2, ms2 = integrate_two_mode(pump, (q1, 0.0), cfg)
    fs1, ms1 = integrate_single_mode(pump.scaled(cfg.pump_scale), q1, cfg.grid, gain=-cfg.w1)
    err_s = np.max(np.abs(fs2.eps_S1.samples - fs1.eps_S1.samples)) / np.max(np.abs(fs1.eps_S1.samples))
    err_l = np.max(np.abs(fs2.eps_L.samples - fs1.eps_L.samples)) / np.max(np.abs(fs1.eps_L.samples))
    err_q = np.max(np.abs(ms2.q1 - ms1.q1)) / np.max(np.abs(ms1.q1))
    dark = float(np.max(np.abs(fs2.eps_S2.samples)))
    return max(err_s, err_l, err_q), dark


def check_decoupling(grid, cfg):
    pump = to_time(make_double_blob(DoubleBlobSpec(), grid))
    err, dark = decoupling_error(pump, cfg)
    return [_le("decoupling vs single mode", err, 1e-10), _le("decoupled mode 2 amplitude", dark, 1e-300)]


def conservation_worst(grid, cfg, rng, n):
    worst = 0.0
    for k in range(n):
        pump = to_time(make_double_blob(random_blob(rng), grid))
        worst = max(worst, run_trial(pump, draw_seed(cfg, k), cfg).conservation_residual)
    return worst


def convergence_ratio(grid, cfg, seeds=(2e-4 + 1e-4j, -1e-4 + 2e-4j)):
    """Residual ratio between a run and one on grids refined in x and tau.

    Uses a deliberately strong seed so the residual sits far above rounding.
    """
    blob = DoubleBlobSpec()
    out = []
    for g, sg in ((grid, cfg.grid), (grid.refined(), cfg.grid.refined())):
        pump = to_time(make_double_blob(blob, g))
        fs, _ = integrate_two_mode(pump, seeds, cfg.with_(grid=sg))
        out.append(conservation_residual(input_state(pump.scaled(cfg.pump_scale)), fs))
    return out[0] / out[1], out


def check_conservation(grid, cfg, rng, n=10):
    worst = conservation_worst(grid, cfg, rng, n)
    ratio, (r0, r1) = convergence_ratio(grid, cfg)
    return [
        _le("conservation residual", worst, 1e-6, f"{n} random pumps"),
        _ge("conservation convergence", ratio, 4.0, f"{r0:.3e} -> {r1:.3e}"),
    ]


def run_all(grid=None, cfg=None, seed=0, n_random=10):
    grid = grid or GridSpec()
    cfg = cfg or SimConfig()
    rng = np.random.default_rng(seed)
    out = [check_round_trip(grid, rng)]
    out += check_wigner(grid, rng)
    out.append(check_husimi(grid, rng, n_random))
    out += check_bessel()
    out += check_decoupling(grid, cfg)
    out += check_conservation(grid, cfg, rng, n_random)
    return out
