"""Pump-pulse envelopes on uniform time/frequency grids.

Envelopes are dimensionless complex samples. Time runs in ps, frequency in
THz, and both axes are centred on zero (frequency is relative to the
rotating frame). The transform pair is scaled like the continuous Fourier
transform, so ``pulse_energy`` gives the same value in either domain:

    E(f) = dt * sum_j e(t_j) exp(-2 pi i f t_j)
    e(t) = df * sum_k E(f_k) exp(+2 pi i f_k t)

With this sign choice a spectral component at +f0 shows up as
``exp(+2 pi i f0 t)`` in time, and an equal-amplitude double blob has
intensity ``1 + cos(2 pi s t + phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, GridMismatchError, ParameterError

TIME = "time"
FREQUENCY = "frequency"

MIN_SAMPLES = 64
#: widest mask the shaper has to represent (THz)
MIN_MASK_BANDWIDTH = 5.0
#: longest pulse the grid must hold (ps)
MAX_PULSE_DURATION = 5.0
#: how many pulse durations must fit into the window
WINDOW_FACTOR = 4.0


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling grid shared by the time and frequency pictures.

    Parameters
    ----------
    n_samples : int
        Number of samples, a power of two and at least 64.
    dt : float
        Time step in ps. The frequency step is ``1 / (n_samples * dt)`` THz.
    center_frequency : float
        Absolute offset (THz) of the rotating frame. Only used for labelling.
    """

    n_samples: int = 1024
    dt: float = 0.01
    center_frequency: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n_samples, (int, np.integer)) or isinstance(self.n_samples, bool):
            raise GridMismatchError(f"n_samples must be an integer, got {self.n_samples!r}")
        if self.n_samples < MIN_SAMPLES or not _is_power_of_two(int(self.n_samples)):
            raise GridMismatchError(
                f"n_samples must be a power of two >= {MIN_SAMPLES}, got {self.n_samples}"
            )
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise GridMismatchError(f"dt must be positive, got {self.dt}")
        if self.nyquist <= MIN_MASK_BANDWIDTH:
            raise GridMismatchError(
                f"Nyquist frequency {self.nyquist:g} THz does not exceed the "
                f"{MIN_MASK_BANDWIDTH:g} THz mask bandwidth (dt={self.dt})"
            )

    @property
    def df(self):
        return 1.0 / (self.n_samples * self.dt)

    @property
    def window(self):
        return self.n_samples * self.dt

    @property
    def nyquist(self):
        return 0.5 / self.dt

    def time_axis(self):
        return (np.arange(self.n_samples) - self.n_samples // 2) * self.dt

    def frequency_axis(self):
        """Frequencies relative to the rotating frame, ascending."""
        return (np.arange(self.n_samples) - self.n_samples // 2) * self.df

    def check_duration(self, duration):
        """Raise if a pulse of ``duration`` ps does not fit the window with margin."""
        if WINDOW_FACTOR * duration > self.window:
            raise GridMismatchError(
                f"window {self.window:g} ps is shorter than {WINDOW_FACTOR:g} x "
                f"pulse duration {duration:g} ps"
            )

    def refined(self):
        """Grid with twice the samples over the same window."""
        return GridSpec(2 * self.n_samples, self.dt / 2, self.center_frequency)


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    """Complex samples on a :class:`GridSpec`, tagged with their domain."""

    grid: GridSpec
    samples: np.ndarray
    domain: str = TIME

    def __post_init__(self):
        if self.domain not in (TIME, FREQUENCY):
            raise DomainError(f"unknown domain tag {self.domain!r}")
        arr = np.array(self.samples, dtype=np.complex128)
        if arr.shape != (self.grid.n_samples,):
            raise GridMismatchError(
                f"expected {self.grid.n_samples} samples, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def axis(self):
        return self.grid.time_axis() if self.domain == TIME else self.grid.frequency_axis()

    @property
    def step(self):
        return self.grid.dt if self.domain == TIME else self.grid.df

    def scaled(self, factor):
        return ComplexEnvelope(self.grid, self.samples * factor, self.domain)

    def intensity(self):
        return np.abs(self.samples) ** 2


@dataclass(frozen=True, eq=False)
class ShaperMask:
    """Per-bin spectral amplitude (in [0, 1]) and phase (rad)."""

    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=float)
        ph = np.array(self.phases, dtype=float)
        if amp.ndim != 1 or amp.shape != ph.shape:
            raise GridMismatchError(
                f"amplitude and phase masks differ in shape: {amp.shape} vs {ph.shape}"
            )
        if np.any(amp < 0) or np.any(amp > 1) or not np.all(np.isfinite(amp)):
            raise ParameterError("mask amplitudes must lie in [0, 1]")
        if not np.all(np.isfinite(ph)):
            raise ParameterError("mask phases must be finite")
        amp.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "phases", ph)

    @classmethod
    def identity(cls, grid):
        return cls(np.ones(grid.n_samples), np.zeros(grid.n_samples))

    @classmethod
    def phase_only(cls, phases):
        phases = np.asarray(phases, dtype=float)
        return cls(np.ones_like(phases), phases)


@dataclass(frozen=True)
class DoubleBlobSpec:
    """Two Gaussian spectral blobs with a relative phase.

    ``blob_width`` is the intensity FWHM of each blob and ``separation`` the
    distance between their centres, both in THz. ``phase_offset`` is the
    phase of the upper-frequency blob relative to the lower one and
    ``amplitude_ratio`` its relative field amplitude.
    """

    blob_width: float = 0.5
    separation: float = 3.3
    phase_offset: float = 0.0
    amplitude_ratio: float = 1.0

    def __post_init__(self):
        if not self.blob_width > 0:
            raise ParameterError(f"blob_width must be positive, got {self.blob_width}")
        if not self.separation >= 0:
            raise ParameterError(f"separation must be non-negative, got {self.separation}")
        if not self.amplitude_ratio >= 0:
            raise ParameterError(f"amplitude_ratio must be >= 0, got {self.amplitude_ratio}")
        if not math.isfinite(self.phase_offset):
            raise ParameterError("phase_offset must be finite")

    def with_phase(self, phase):
        return DoubleBlobSpec(self.blob_width, self.separation, float(phase), self.amplitude_ratio)


def gaussian_fwhm_to_sigma(fwhm):
    """Standard deviation of a Gaussian intensity profile with the given FWHM."""
    return fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def transform_limited_duration(blob_width):
    """Intensity FWHM (ps) of a transform-limited Gaussian of spectral FWHM ``blob_width`` (THz)."""
    return 2.0 * math.log(2.0) / (math.pi * blob_width)


def _blob(f, width):
    # field amplitude whose intensity has FWHM ``width``
    return np.exp(-2.0 * math.log(2.0) * (f / width) ** 2)


# blobs are considered to end this many intensity standard deviations out
_BLOB_EXTENT = 5.0


def make_double_blob(spec, grid):
    """Frequency-domain double-blob envelope normalised to unit energy.

    The lower blob sits at ``-separation/2`` and the upper one at
    ``+separation/2`` carrying ``amplitude_ratio * exp(i phase_offset)``.
    """
    half_extent = spec.separation / 2 + _BLOB_EXTENT * gaussian_fwhm_to_sigma(spec.blob_width)
    if half_extent >= grid.nyquist:
        raise GridMismatchError(
            f"double blob extends to {half_extent:g} THz, beyond the "
            f"{grid.nyquist:g} THz Nyquist limit"
        )
    if spec.separation >= grid.n_samples * grid.df:
        raise GridMismatchError("blob separation exceeds the grid bandwidth")
    grid.check_duration(transform_limited_duration(spec.blob_width))

    f = grid.frequency_axis()
    field_ = _blob(f + spec.separation / 2, spec.blob_width) + (
        spec.amplitude_ratio * np.exp(1j * spec.phase_offset) * _blob(f - spec.separation / 2, spec.blob_width)
    )
    env = ComplexEnvelope(grid, field_, FREQUENCY)
    return env.scaled(1.0 / math.sqrt(pulse_energy(env)))


def gaussian_pulse(grid, fwhm, domain=FREQUENCY, center=0.0):
    """Single transform-limited Gaussian of intensity FWHM ``fwhm``, unit energy.

    ``fwhm`` and ``center`` are in THz for the frequency domain and in ps
    for the time domain.
    """
    axis = grid.frequency_axis() if domain == FREQUENCY else grid.time_axis()
    env = ComplexEnvelope(grid, _blob(axis - center, fwhm), domain)
    return env.scaled(1.0 / math.sqrt(pulse_energy(env)))


def apply_mask(envelope, mask):
    """Multiply each frequency bin by ``amplitude * exp(i phase)``."""
    if envelope.domain != FREQUENCY:
        raise DomainError("masks act on frequency-domain envelopes")
    if mask.amplitudes.shape[0] != envelope.grid.n_samples:
        raise GridMismatchError(
            f"mask has {mask.amplitudes.shape[0]} bins, envelope has {envelope.grid.n_samples}"
        )
    out = envelope.samples * mask.amplitudes * np.exp(1j * mask.phases)
    return ComplexEnvelope(envelope.grid, out, FREQUENCY)


def to_time(envelope):
    if envelope.domain != FREQUENCY:
        raise DomainError("to_time expects a frequency-domain envelope")
    g = envelope.grid
    spec = np.fft.ifftshift(envelope.samples)
    out = np.fft.fftshift(np.fft.ifft(spec)) * (g.n_samples * g.df)
    return ComplexEnvelope(g, out, TIME)


def to_frequency(envelope):
    if envelope.domain != TIME:
        raise DomainError("to_frequency expects a time-domain envelope")
    g = envelope.grid
    out = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(envelope.samples))) * g.dt
    return ComplexEnvelope(g, out, FREQUENCY)


def pulse_energy(envelope):
    """Sum of ``|samples|^2`` times the sample step of the envelope's domain."""
    return float(np.sum(np.abs(envelope.samples) ** 2) * envelope.step)


def rms_width(envelope):
    """Intensity-weighted standard deviation along the envelope's own axis."""
    w = envelope.intensity()
    x = envelope.axis
    total = w.sum()
    mean = (w * x).sum() / total
    return float(math.sqrt((w * (x - mean) ** 2).sum() / total))


def fwhm(envelope):
    """Intensity FWHM by linear interpolation around the main peak."""
    y = envelope.intensity()
    x = envelope.axis
    k = int(np.argmax(y))
    half = y[k] / 2
    lo = k
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = k
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    x_lo = x[lo] + (half - y[lo]) * (x[lo + 1] - x[lo]) / (y[lo + 1] - y[lo])
    x_hi = x[hi - 1] + (half - y[hi - 1]) * (x[hi] - x[hi - 1]) / (y[hi] - y[hi - 1])
    return float(x_hi - x_lo)


def dump_envelope_csv(envelope, path):
    """Write ``index,t_or_f,re,im`` rows behind a one-line grid header."""
    g = envelope.grid
    path = Path(path)
    unit = "ps" if envelope.domain == TIME else "THz"
    with path.open("w", newline="\n") as fh:
        fh.write(
            f"# domain={envelope.domain} unit={unit} n_samples={g.n_samples} "
            f"dt={g.dt!r} df={g.df!r} center_frequency={g.center_frequency!r}\n"
        )
        fh.write("index,t_or_f,re,im\n")
        for i, (x, s) in enumerate(zip(envelope.axis, envelope.samples)):
            fh.write(f"{i},{float(x)!r},{float(s.real)!r},{float(s.imag)!r}\n")
    return path


def load_envelope_csv(path):
    """Inverse of :func:`dump_envelope_csv`."""
    with Path(path).open() as fh:
        header = fh.readline().lstrip("# ").split()
        meta = dict(item.split("=", 1) for item in header)
        fh.readline()
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    grid = GridSpec(int(meta["n_samples"]), float(meta["dt"]), float(meta["center_frequency"]))
    return ComplexEnvelope(grid, rows[:, 2] + 1j * rows[:, 3], meta["domain"])
