"""Transient stimulated Raman propagation in reduced coordinates.

The single-mode reference system is

    dL/dx  = -q S
    dS/dx  =  q* L
    dq/dtau = gain * L S*            (gain = 1/4 in the usual scaling)

and the two-mode system adds a second Stokes field, a second ground-state
coherence, the excited-state coherence ``q3`` and the pump-pump Raman
coupling ``alpha |L|^2`` between ``q1`` and ``q2``. The tau axis is the
pump's time grid (ps); x is dimensionless.

Frame convention: the printed two-mode equations are taken to be exact
when the pump blob separation equals the mode spacing. A residual detuning
``delta`` (rad/ps) multiplies the pump-beat terms by ``exp(+i delta tau)``
in the ``q1`` and ``q3`` equations and by ``exp(-i delta tau)`` in the
``q2`` equation. All other products are resonant by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DivergenceError, GridMismatchError, NumericError, ParameterError
from .pulse import TIME, ComplexEnvelope

#: coefficient of Eq. dq/dtau = gain L S* in the single-mode scaling
SINGLE_MODE_GAIN = 0.25


@dataclass(frozen=True)
class SolverGrid:
    """Propagation grid: ``n_x`` nodes spanning ``[0, x_max]``."""

    n_x: int = 256
    x_max: float = 16.0

    def __post_init__(self):
        if isinstance(self.n_x, bool) or not isinstance(self.n_x, (int, np.integer)) or self.n_x < 2:
            raise ParameterError(f"n_x must be an integer >= 2, got {self.n_x!r}")
        if not (self.x_max > 0 and math.isfinite(self.x_max)):
            raise ParameterError(f"x_max must be positive, got {self.x_max}")

    @property
    def dx(self):
        return self.x_max / (self.n_x - 1)

    def x_axis(self):
        return np.linspace(0.0, self.x_max, self.n_x)

    def refined(self):
        """Grid with twice as many nodes."""
        return SolverGrid(2 * self.n_x, self.x_max)


@dataclass(frozen=True)
class SimConfig:
    """Physical and numerical parameters of one propagation."""

    alpha: float = 0.0
    suppress_q3: bool = True
    w1: float = -1.0
    w2: float = -1.0
    delta: float = 0.0
    pump_scale: float = 1.68
    grid: SolverGrid = field(default_factory=SolverGrid)
    noise_sigma: float = 1e-6
    rng_seed: int = 20020101
    spatial_noise: bool = False

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.pump_scale > 0 and math.isfinite(self.pump_scale)):
            raise ParameterError(f"pump_scale must be positive, got {self.pump_scale}")
        if not (self.noise_sigma > 0 and math.isfinite(self.noise_sigma)):
            raise ParameterError(f"noise_sigma must be positive, got {self.noise_sigma}")
        for name in ("w1", "w2", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, (int, np.integer)):
            raise ParameterError(f"rng_seed must be an integer, got {self.rng_seed!r}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ParameterError("rng_seed must fit in 64 unsigned bits")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class FieldState:
    """Pump and Stokes envelopes on the tau grid at one x slice.

    ``eps_S2`` is ``None`` for single-mode runs.
    """

    eps_L: ComplexEnvelope
    eps_S1: ComplexEnvelope
    eps_S2: ComplexEnvelope | None = None

    def channels(self):
        return [e for e in (self.eps_L, self.eps_S1, self.eps_S2) if e is not None]

    def total_intensity(self):
        return sum(e.intensity() for e in self.channels())

    def stokes_energies(self):
        return tuple(float(np.sum(e.intensity()) * e.grid.dt) for e in self.channels()[1:])


@dataclass(frozen=True, eq=False)
class MediumState:
    """Coherences on the tau grid at one x slice plus the fixed inversions."""

    q1: np.ndarray
    q2: np.ndarray | None = None
    q3: np.ndarray | None = None
    w1: float = -1.0
    w2: float = -1.0


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Fields and coherences at one x slice for every tau."""

    x: float
    fields: FieldState
    medium: MediumState


def _tau_pump(pump):
    if pump.domain != TIME:
        raise GridMismatchError("the solver expects a time-domain pump envelope")
    return np.ascontiguousarray(pump.samples, dtype=np.complex128)


def _raise_status(status, grid, trial_offset=0):
    bad = np.nonzero(status[:, 0])[0]
    if bad.size == 0:
        return
    tr = int(bad[0])
    code, j, k = (int(v) for v in status[tr])
    x = j * grid.dx
    where = f"x slice {j} (x={x:.4g}), tau index {k}"
    if code == _kernels.NONFINITE:
        raise NumericError(
            f"non-finite sample at {where}", slice_index=j, tau_index=k,
            trial_index=trial_offset + tr,
        )
    raise DivergenceError(
        f"field exceeded {_kernels.DIVERGENCE_FACTOR:g} x input scale at {where}; "
        "reduce the step sizes or the gain",
        slice_index=j, tau_index=k, trial_index=trial_offset + tr,
    )


def input_state(pump, two_mode=True):
    """Field state entering the medium: the pump alone."""
    zero = ComplexEnvelope(pump.grid, np.zeros(pump.grid.n_samples), TIME)
    return FieldState(pump, zero, zero if two_mode else None)


def integrate_single_mode(pump, q0, grid, gain=SINGLE_MODE_GAIN):
    """Propagate one pump through a single Raman mode.

    Parameters
    ----------
    pump : ComplexEnvelope
        Time-domain pump at x = 0, used as is (no extra scaling).
    q0 : complex
        Coherence at the first tau sample, the same on every x node.
    grid : SolverGrid
    gain : float
        Coefficient of ``L S*`` in the coherence equation.

    Returns
    -------
    (FieldState, MediumState) at ``x = grid.x_max``.
    """
    e = _tau_pump(pump)
    n = e.size
    fields = np.zeros((1, 2, n), np.complex128)
    q = np.zeros((1, n), np.complex128)
    status = np.zeros((1, 3), np.int64)
    _kernels.single_mode(
        e, np.array([complex(q0)]), grid.n_x, grid.dx, pump.grid.dt, float(gain), fields, q, status
    )
    _raise_status(status, grid)
    g = pump.grid
    fs = FieldState(ComplexEnvelope(g, fields[0, 0], TIME), ComplexEnvelope(g, fields[0, 1], TIME))
    return fs, MediumState(q[0].copy(), w1=-4 * gain)


def propagate(pump_samples, seeds, cfg, dtau, snap_idx=None):
    """Low-level batched two-mode propagation.

    ``seeds`` has shape ``(n_trials, n_seed_x, 2)`` with ``n_seed_x`` either
    1 or ``cfg.grid.n_x``. ``pump_samples`` are multiplied by
    ``cfg.pump_scale``. Returns ``(fields, q, snap_fields, snap_q, status)``.
    """
    e = np.ascontiguousarray(pump_samples, dtype=np.complex128) * cfg.pump_scale
    seeds = np.ascontiguousarray(seeds, dtype=np.complex128)
    if seeds.ndim != 3 or seeds.shape[2] != 2 or seeds.shape[1] not in (1, cfg.grid.n_x):
        raise GridMismatchError(f"seed array has shape {seeds.shape}")
    n_tr, n = seeds.shape[0], e.size
    fields = np.zeros((n_tr, 3, n), np.complex128)
    q = np.zeros((n_tr, 3, n), np.complex128)
    snap_idx = np.asarray([] if snap_idx is None else snap_idx, dtype=np.int64)
    snap_f = np.zeros((snap_idx.size, 3, n), np.complex128)
    snap_q = np.zeros((snap_idx.size, 3, n), np.complex128)
    status = np.zeros((n_tr, 3), np.int64)
    _kernels.two_mode(
        e, seeds, cfg.grid.n_x, cfg.grid.dx, float(dtau), float(cfg.alpha), float(cfg.w1),
        float(cfg.w2), float(cfg.delta), not cfg.suppress_q3, fields, q, snap_idx, snap_f,
        snap_q, status,
    )
    return fields, q, snap_f, snap_q, status


def _seed_array(seeds, cfg):
    arr = np.asarray(seeds, dtype=np.complex128)
    if arr.ndim == 1:
        if arr.shape != (2,):
            raise GridMismatchError("seeds must be a (q1, q2) pair")
        return arr.reshape(1, 1, 2)
    if arr.shape != (cfg.grid.n_x, 2):
        raise GridMismatchError(f"spatial seeds need shape ({cfg.grid.n_x}, 2), got {arr.shape}")
    return arr.reshape(1, cfg.grid.n_x, 2)


def _states(pump, fields, q, cfg):
    g = pump.grid
    fs = FieldState(*(ComplexEnvelope(g, fields[c], TIME) for c in range(3)))
    ms = MediumState(q[0].copy(), q[1].copy(), q[2].copy(), cfg.w1, cfg.w2)
    return fs, ms


def integrate_two_mode(pump, seeds, cfg):
    """Propagate the pump through the two coupled Raman modes.

    Parameters
    ----------
    pump : ComplexEnvelope
        Unit-scale time-domain pump; multiplied by ``cfg.pump_scale``.
    seeds : (q1_0, q2_0) pair, or an ``(n_x, 2)`` array of per-slice seeds.
    cfg : SimConfig

    Returns
    -------
    (FieldState, MediumState) at ``x = cfg.grid.x_max``.
    """
    fields, q, _, _, status = propagate(_tau_pump(pump), _seed_array(seeds, cfg), cfg, pump.grid.dt)
    _raise_status(status, cfg.grid)
    return _states(pump, fields[0], q[0], cfg)


def snapshot_two_mode(pump, seeds, cfg, slices):
    """Run :func:`integrate_two_mode` recording the listed x node indices."""
    idx = np.asarray(sorted(set(int(s) for s in slices)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= cfg.grid.n_x):
        raise GridMismatchError(f"snapshot slices must lie in [0, {cfg.grid.n_x})")
    _, _, sf, sq, status = propagate(
        _tau_pump(pump), _seed_array(seeds, cfg), cfg, pump.grid.dt, snap_idx=idx
    )
    _raise_status(status, cfg.grid)
    x = cfg.grid.x_axis()
    return [Snapshot(float(x[j]), *_states(pump, sf[s], sq[s], cfg)) for s, j in enumerate(idx)]


def conservation_residual(initial, final):
    """Worst pointwise drift of ``|L|^2 + |S1|^2 + |S2|^2`` between two slices.

    Normalised by the peak input intensity; 0 when the input is dark.
    """
    i0 = initial.total_intensity()
    i1 = final.total_intensity()
    if i0.shape != i1.shape:
        raise GridMismatchError("field states live on different tau grids")
    peak = float(np.max(i0))
    if peak == 0.0:
        return float(np.max(np.abs(i1)))
    return float(np.max(np.abs(i1 - i0)) / peak)


def dump_snapshots(snapshots, path):
    """CSV with one row per (x, tau): re/im of every field and coherence."""
    path = Path(path)
    cols = ["x", "tau"]
    for name in ("L", "S1", "S2", "q1", "q2", "q3"):
        cols += [f"{name}_re", f"{name}_im"]
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for snap in snapshots:
            g = snap.fields.eps_L.grid
            tau = np.arange(g.n_samples) * g.dt
            chans = [c.samples for c in snap.fields.channels()]
            chans += [snap.medium.q1, snap.medium.q2, snap.medium.q3]
            for k, t in enumerate(tau):
                vals = [snap.x, t]
                for c in chans:
                    vals += [c[k].real, c[k].imag]
                fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    return path


def bessel_growth(x, tau, amplitude, q0, gain=SINGLE_MODE_GAIN, terms=None):
    """Small-signal Stokes field for a constant pump, summed as a power series.

    With kappa = gain |A|^2 the undepleted pair ``dS/dx = A q*``,
    ``dq*/dtau = gain A* S`` with ``q*(x, 0) = q0*`` and ``S(0, tau) = 0``
    is solved by

        S = q0* A x sum_n (kappa x tau)^n / (n! (n+1)!)
          = q0* A sqrt(x / (kappa tau)) I_1(2 sqrt(kappa x tau)).
    """
    x = np.asarray(x, dtype=float)
    tau = np.asarray(tau, dtype=float)
    z = gain * abs(amplitude) ** 2 * x * tau
    zmax = float(np.max(z)) if z.size else 0.0
    if terms is None:
        terms = int(30 + 4 * math.sqrt(zmax) + zmax)
    total = np.zeros(np.broadcast(x, tau).shape)
    term = np.ones_like(total)
    for n in range(terms):
        total = total + term
        term = term * z / ((n + 1) * (n + 2))
    return np.conj(q0) * amplitude * x * total
