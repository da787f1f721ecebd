"""Monte Carlo trials, the mode-asymmetry observable and phase-offset scans.

Every trial draws its initial coherences from its own RNG substream, keyed
by ``(rng_seed, trial_index)``, so a trial can be recomputed in isolation and
trials may run in any order or in parallel. Phase scans reuse the same
substreams at every phase offset (common random numbers).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceError, ParameterError, UndefinedAsymmetryError
from .pulse import GridSpec, make_double_blob, pulse_energy, to_time
from .solver import _raise_status, propagate

log = logging.getLogger(__name__)

#: trials whose total Stokes energy falls below this fraction of the pump
#: energy have no meaningful asymmetry and are dropped from ensemble means
DROPOUT_FLOOR = 1e-12

#: default saturation band for the pump-scale calibration (Stokes / pump)
SATURATION_BAND = (1e-3, 5e-2)

#: trials per kernel call; bounds memory and sets the thread work unit
BATCH = 64


@dataclass(frozen=True, eq=False)
class TrialSeed:
    """Initial coherences of one trial.

    ``spatial`` is ``None`` for the default impulsive seed (the same pair
    on every x slice) or an ``(n_x, 2)`` array of independent per-slice
    seeds, in which case ``q1_0`` and ``q2_0`` are its first row.
    """

    q1_0: complex
    q2_0: complex
    trial_index: int = 0
    spatial: np.ndarray | None = None

    @property
    def phi_S1(self):
        return math.atan2(self.q1_0.imag, self.q1_0.real)

    @property
    def phi_S2(self):
        return math.atan2(self.q2_0.imag, self.q2_0.real)

    def as_array(self):
        """Seed array in the layout expected by :func:`ramansim.solver.propagate`."""
        if self.spatial is not None:
            return np.asarray(self.spatial, dtype=np.complex128)
        return np.array([[self.q1_0, self.q2_0]], dtype=np.complex128)


@dataclass(frozen=True)
class TrialResult:
    """Output Stokes energies of one trial.

    ``asymmetry`` is ``None`` when the trial is flagged as undefined
    (total Stokes energy below the dropout floor).
    """

    E_S1: float
    E_S2: float
    asymmetry: float | None
    conservation_residual: float
    trial_index: int = 0

    @property
    def flagged(self):
        return self.asymmetry is None


@dataclass(frozen=True, eq=False)
class PhaseScanResult:
    """Ensemble statistics of the asymmetry at each phase offset.

    ``per_trial`` has shape ``(len(phases), n_trials)`` and holds NaN for
    dropped or failed trials; row ``i`` and column ``j`` always refer to the
    same seed substream ``j`` so columns can be paired across phases.
    """

    phases: np.ndarray
    mean_asymmetry: np.ndarray
    stderr_asymmetry: np.ndarray
    n_effective: np.ndarray
    n_trials: int
    n_dropped: np.ndarray
    n_failed: np.ndarray
    per_trial: np.ndarray
    config: dict = field(default_factory=dict)

    def peak_to_peak(self):
        """Modulation depth and its combined standard error."""
        hi = int(np.nanargmax(self.mean_asymmetry))
        lo = int(np.nanargmin(self.mean_asymmetry))
        depth = float(self.mean_asymmetry[hi] - self.mean_asymmetry[lo])
        err = float(math.hypot(self.stderr_asymmetry[hi], self.stderr_asymmetry[lo]))
        return depth, err


@dataclass(frozen=True)
class FresnelParams:
    """Beam area (m^2), Stokes wavelength (m) and cell length (m)."""

    beam_area: float
    stokes_wavelength: float
    cell_length: float


def mode_asymmetry(E1, E2):
    """``(E1 - E2) / (E1 + E2)``, the normalised energy imbalance of the two modes."""
    if E1 < 0 or E2 < 0:
        raise ParameterError(f"energies must be nonnegative, got {E1}, {E2}")
    total = E1 + E2
    if total == 0:
        raise UndefinedAsymmetryError("asymmetry undefined when both modes are dark")
    return (E1 - E2) / total


def fresnel_number(p):
    """Number of transverse Stokes modes, ``A / (lambda_S L)``."""
    for name, v in asdict(p).items():
        if not (v > 0 and math.isfinite(v)):
            raise ParameterError(f"{name} must be positive, got {v}")
    return p.beam_area / (p.stokes_wavelength * p.cell_length)


def _substream(rng_seed, trial_index):
    ss = np.random.SeedSequence(int(rng_seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.PCG64(ss))


def draw_seed(cfg, trial_index):
    """Circular Gaussian coherences of std ``cfg.noise_sigma`` for one trial."""
    if trial_index < 0:
        raise ParameterError(f"trial_index must be >= 0, got {trial_index}")
    rng = _substream(cfg.rng_seed, trial_index)
    n = cfg.grid.n_x if cfg.spatial_noise else 1
    # E|q|^2 = sigma^2, split evenly between the quadratures
    z = rng.normal(scale=cfg.noise_sigma / math.sqrt(2), size=(n, 2, 2))
    q = z[..., 0] + 1j * z[..., 1]
    spatial = q if cfg.spatial_noise else None
    return TrialSeed(complex(q[0, 0]), complex(q[0, 1]), int(trial_index), spatial)


def draw_seeds(cfg, n_trials, start=0):
    return [draw_seed(cfg, start + i) for i in range(n_trials)]


def _result(fields, pump_samples, cfg, dtau, trial_index):
    e1 = float(np.sum(np.abs(fields[1]) ** 2) * dtau)
    e2 = float(np.sum(np.abs(fields[2]) ** 2) * dtau)
    i0 = np.abs(pump_samples * cfg.pump_scale) ** 2
    i1 = np.sum(np.abs(fields) ** 2, axis=0)
    peak = float(np.max(i0))
    resid = float(np.max(np.abs(i1 - i0)) / peak) if peak > 0 else float(np.max(i1))
    pump_e = float(np.sum(i0) * dtau)
    asym = None
    if e1 + e2 > DROPOUT_FLOOR * pump_e:
        asym = mode_asymmetry(e1, e2)
    return TrialResult(e1, e2, asym, resid, int(trial_index))


def _batch(pump_samples, seeds, cfg, dtau):
    arr = np.stack([s.as_array() for s in seeds])
    fields, _, _, _, status = propagate(pump_samples, arr, cfg, dtau)
    return fields, status


def run_trial(pump, seed, cfg):
    """Propagate one seeded trial and reduce it to Stokes energies."""
    results = run_trials(pump, [seed], cfg)
    return results[0]


def run_trials(pump, seeds, cfg, threads=1, on_error="raise"):
    """Run many trials on the same pump.

    Parameters
    ----------
    pump : ComplexEnvelope
        Unit-scale time-domain pump.
    seeds : sequence of TrialSeed
    cfg : SimConfig
    threads : int
        Worker threads; kernels release the GIL.
    on_error : {"raise", "skip"}
        With ``"skip"`` a diverging trial yields ``None`` in its slot.

    Returns
    -------
    list
        One :class:`TrialResult` (or ``None``) per seed, in seed order.
    """
    samples = np.asarray(pump.samples)
    dtau = pump.grid.dt
    chunks = [seeds[i : i + BATCH] for i in range(0, len(seeds), BATCH)]

    def work(chunk):
        return _batch(samples, chunk, cfg, dtau)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(work, chunks))
    else:
        outs = [work(c) for c in chunks]

    results = []
    for chunk, (fields, status) in zip(chunks, outs):
        for i, seed in enumerate(chunk):
            if status[i, 0] != 0:
                if on_error == "raise":
                    try:
                        _raise_status(status[i : i + 1], cfg.grid)
                    except DivergenceError as exc:
                        exc.trial_index = seed.trial_index
                        exc.args = (f"trial {seed.trial_index}: {exc.args[0]}",)
                        raise
                results.append(None)
                continue
            results.append(_result(fields[i], samples, cfg, dtau, seed.trial_index))
    return results


def ensemble_stats(asymmetries):
    """Mean, standard error and count of the finite entries."""
    a = np.asarray(asymmetries, dtype=float)
    a = a[np.isfinite(a)]
    n = a.size
    if n == 0:
        return math.nan, math.nan, 0
    mean = float(np.mean(a))
    stderr = float(np.std(a, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return mean, stderr, n


def phase_scan(blob, phases, n_trials, cfg, grid=None, threads=1, max_fail_fraction=0.0):
    """Ensemble-mean asymmetry versus the phase offset of a double-blob pump.

    The pump at each phase is ``blob`` with ``phase_offset`` replaced and is
    normalised to unit energy before ``cfg.pump_scale`` is applied. Trial
    ``j`` uses the same seed at every phase.

    Raises
    ------
    DivergenceError
        When more than ``max_fail_fraction`` of the trials at any phase fail.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise ParameterError("phases must be nonempty")
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials}")
    grid = grid or GridSpec()
    seeds = draw_seeds(cfg, n_trials)
    per = np.full((phases.size, n_trials), np.nan)
    mean = np.empty(phases.size)
    err = np.empty(phases.size)
    n_eff = np.zeros(phases.size, dtype=int)
    dropped = np.zeros(phases.size, dtype=int)
    failed = np.zeros(phases.size, dtype=int)
    for i, phi in enumerate(phases):
        pump = to_time(make_double_blob(blob.with_phase(phi), grid))
        mode = "raise" if max_fail_fraction <= 0 else "skip"
        res = run_trials(pump, seeds, cfg, threads=threads, on_error=mode)
        failed[i] = sum(r is None for r in res)
        if failed[i] > max_fail_fraction * n_trials:
            raise DivergenceError(
                f"{failed[i]} of {n_trials} trials diverged at phase {phi:.4g}"
            )
        for j, r in enumerate(res):
            if r is not None and r.asymmetry is not None:
                per[i, j] = r.asymmetry
            elif r is not None:
                dropped[i] += 1
        mean[i], err[i], n_eff[i] = ensemble_stats(per[i])
        log.debug("phi=%.4f mean=%.4g stderr=%.3g n=%d", phi, mean[i], err[i], n_eff[i])
    return PhaseScanResult(
        phases, mean, err, n_eff, int(n_trials), dropped, failed, per,
        {"blob": asdict(blob), "sim": sim_config_dict(cfg), "grid": asdict(grid)},
    )


def sim_config_dict(cfg):
    d = asdict(cfg)
    d["grid"] = asdict(cfg.grid)
    return d


def stokes_fraction(pump, cfg, n_pilot=32, threads=1):
    """Median total Stokes energy over pump energy across a pilot ensemble.

    Diverging pilot trials count as fully saturated.
    """
    res = run_trials(pump, draw_seeds(cfg, n_pilot), cfg, threads=threads, on_error="skip")
    e_pump = pulse_energy(pump) * cfg.pump_scale**2
    fr = [math.inf if r is None else (r.E_S1 + r.E_S2) / e_pump for r in res]
    return float(np.median(fr))


def calibrate_pump_scale(pump, cfg, n_pilot=32, band=SATURATION_BAND, threads=1, max_iter=60):
    """Choose ``pump_scale`` so the pilot median Stokes fraction sits inside ``band``.

    Bisects in log(scale) toward the geometric centre of the band and stops
    at the first scale whose fraction lies within a factor of two of it.
    """
    lo_b, hi_b = band
    if not 0 < lo_b < hi_b < 1:
        raise ParameterError(f"bad saturation band {band}")
    target = math.sqrt(lo_b * hi_b)

    def frac(s):
        return stokes_fraction(pump, cfg.with_(pump_scale=s), n_pilot, threads)

    lo, hi = None, None
    s = cfg.pump_scale
    for _ in range(max_iter):
        f = frac(s)
        log.debug("calibration scale=%.6g fraction=%.4g", s, f)
        if lo_b <= f <= hi_b and abs(math.log(f / target)) < math.log(2):
            return s
        if f < target:
            lo = s
        else:
            hi = s
        if lo is None:
            s = hi / 2
        elif hi is None:
            s = lo * 2
        else:
            s = math.sqrt(lo * hi)
    f = frac(s)
    if not lo_b <= f <= hi_b:
        raise ParameterError(f"pump scale calibration did not reach the band {band}")
    return s


@dataclass(frozen=True)
class ModulationFit:
    """``offset + amplitude * cos(phi - phase)`` with the amplitude's standard error."""

    amplitude: float
    phase: float
    offset: float
    amplitude_err: float

    def resolved(self, k=2.0):
        """True when the amplitude stands ``k`` standard errors above zero."""
        return bool(self.amplitude >= k * self.amplitude_err)


def fit_modulation(phases, values, stderr=None):
    """Weighted least-squares cosine fit of a scan curve.

    Without ``stderr`` all points get unit weight and the amplitude error
    comes from the fit residuals.
    """
    phases = np.asarray(phases, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values)
    if stderr is not None:
        stderr = np.asarray(stderr, dtype=float)
        ok &= np.isfinite(stderr) & (stderr > 0)
    if ok.sum() < 3:
        raise ParameterError("a cosine fit needs at least three finite points")
    m = np.column_stack([np.ones(ok.sum()), np.cos(phases[ok]), np.sin(phases[ok])])
    y = values[ok]
    wgt = 1.0 / stderr[ok] if stderr is not None else np.ones(y.size)
    coef, *_ = np.linalg.lstsq(m * wgt[:, None], y * wgt, rcond=None)
    c, a, b = (float(v) for v in coef)
    cov = np.linalg.pinv((m * wgt[:, None]).T @ (m * wgt[:, None]))
    if stderr is None:
        dof = max(y.size - 3, 1)
        cov = cov * float(np.sum((y - m @ coef) ** 2)) / dof
    amp = math.hypot(a, b)
    if amp > 0:
        var = (a * a * cov[1, 1] + b * b * cov[2, 2] + 2 * a * b * cov[1, 2]) / amp**2
    else:
        var = 0.5 * (cov[1, 1] + cov[2, 2])
    return ModulationFit(amp, math.atan2(b, a), c, math.sqrt(max(var, 0.0)))


def matched_pair_correlation(scan_a, scan_b):
    """Pearson correlation of per-trial asymmetries paired by seed."""
    a = scan_a.ravel() if isinstance(scan_a, np.ndarray) else np.asarray(scan_a, float)
    b = scan_b.ravel() if isinstance(scan_b, np.ndarray) else np.asarray(scan_b, float)
    ok = np.isfinite(a) & np.isfinite(b)
    a, b = a[ok], b[ok]
    if a.size < 2 or np.std(a) == 0 or np.std(b) == 0:
        return math.nan
    return float(np.corrcoef(a, b)[0, 1])


def write_scan_csv(result, path):
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write("phi,mean_asym,stderr,n_effective\n")
        for p, m, s, n in zip(
            result.phases, result.mean_asymmetry, result.stderr_asymmetry, result.n_effective
        ):
            fh.write(f"{float(p)!r},{float(m)!r},{float(s)!r},{int(n)}\n")
    return path


def read_scan_csv(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3].astype(int)
