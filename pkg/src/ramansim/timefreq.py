"""Wigner and Husimi distributions of pulse envelopes.

Both distributions share one frequency axis with spacing ``df/2`` covering
``[-1/(4 dt), 1/(4 dt))``. Integer lags on the time grid alias everything
outside that band, so envelopes must be band limited well inside it, which
any pulse on the default grid is.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParameterError
from .pulse import TIME

#: imaginary residue tolerated in the Wigner transform, relative to its peak
IMAG_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class TFDistribution:
    """Real distribution sampled on (time, frequency); rows are time."""

    time_axis: np.ndarray
    freq_axis: np.ndarray
    values: np.ndarray
    kind: str = "wigner"

    def __post_init__(self):
        if self.values.shape != (len(self.time_axis), len(self.freq_axis)):
            raise ValueError(
                f"values shape {self.values.shape} does not match axes "
                f"({len(self.time_axis)}, {len(self.freq_axis)})"
            )

    @property
    def dt(self):
        return float(self.time_axis[1] - self.time_axis[0])

    @property
    def df(self):
        return float(self.freq_axis[1] - self.freq_axis[0])

    def time_marginal(self):
        return self.values.sum(axis=1) * self.df

    def frequency_marginal(self):
        return self.values.sum(axis=0) * self.dt

    def total(self):
        return float(self.values.sum() * self.dt * self.df)

    def downsampled(self, stride):
        stride = int(stride)
        if stride < 1:
            raise ParameterError(f"stride must be >= 1, got {stride}")
        return TFDistribution(
            self.time_axis[::stride],
            self.freq_axis[::stride],
            self.values[::stride, ::stride],
            self.kind,
        )


def _tf_frequency_axis(grid):
    n = grid.n_samples
    return (np.arange(n) - n // 2) / (2 * n * grid.dt)


def wigner(envelope):
    """Discrete Wigner distribution of a time-domain envelope.

    For every time sample the lag product ``e(t+m dt) e*(t-m dt)`` is
    transformed over the lag ``s = 2 m dt``. The time marginal reproduces
    ``|e(t)|^2`` exactly and the frequency marginal reproduces ``|E(f)|^2``
    up to aliasing of out-of-band content.
    """
    if envelope.domain != TIME:
        raise DomainError("wigner expects a time-domain envelope")
    g = envelope.grid
    n = g.n_samples
    e = envelope.samples
    padded = np.concatenate([e, np.zeros(n, dtype=complex)])
    # lag m stored at column m mod n, so m runs over [-n/2, n/2)
    m = np.arange(n)
    m = np.where(m < n // 2, m, m - n)
    j = np.arange(n)[:, None]
    plus = j + m[None, :]
    minus = j - m[None, :]
    # out-of-range indices point into the zero padding
    plus = np.where((plus >= 0) & (plus < n), plus, n)
    minus = np.where((minus >= 0) & (minus < n), minus, n)
    lag = padded[plus] * np.conj(padded[minus])
    w = np.fft.fftshift(np.fft.fft(lag, axis=1), axes=1) * (2 * g.dt)
    peak = np.max(np.abs(w)) if w.size else 0.0
    if peak > 0 and np.max(np.abs(w.imag)) > IMAG_TOLERANCE * peak:
        raise ArithmeticError("Wigner transform left a non-negligible imaginary part")
    return TFDistribution(g.time_axis(), _tf_frequency_axis(g), np.ascontiguousarray(w.real), "wigner")


def husimi(envelope, sigma_t=0.25):
    """Husimi distribution: the Wigner function smoothed by a minimum-uncertainty Gaussian.

    The smoothing kernel has standard deviations ``sigma_t`` (ps) and
    ``1/(4 pi sigma_t)`` THz, i.e. ``sigma_t * sigma_omega = 1/2``. That
    kernel is itself the Wigner function of a Gaussian window, so the
    convolution equals the squared modulus of the windowed Fourier
    transform, which is how it is computed here; the result is
    nonnegative by construction and integrates to the pulse energy.
    """
    if envelope.domain != TIME:
        raise DomainError("husimi expects a time-domain envelope")
    if not (sigma_t > 0 and math.isfinite(sigma_t)):
        raise ParameterError(f"sigma_t must be positive, got {sigma_t}")
    g = envelope.grid
    n = g.n_samples
    t = g.time_axis()
    e = envelope.samples
    # window g(t) with |g|^2 a unit-area Gaussian of std sigma_t
    norm = (2 * math.pi * sigma_t**2) ** -0.25
    lags = t[None, :] - t[:, None]
    window = norm * np.exp(-(lags**2) / (4 * sigma_t**2))
    prod = window * e[None, :]
    # zero-pad to 2n so the frequency step matches the Wigner axis (df/2)
    padded = np.zeros((n, 2 * n), dtype=complex)
    padded[:, :n] = prod
    spec = np.fft.fft(padded, axis=1)
    # phase of the first sample, t[0] = -n dt / 2, is irrelevant for |.|^2
    spec = np.fft.fftshift(spec, axes=1)[:, n // 2 : n // 2 + n] * g.dt
    values = np.abs(spec) ** 2
    return TFDistribution(t, _tf_frequency_axis(g), values, "husimi")


def smooth_wigner(dist, sigma_t):
    """Explicit Gaussian convolution of a Wigner map (slow reference path)."""
    sigma_f = 1.0 / (4 * math.pi * sigma_t)
    dt, df = dist.dt, dist.df
    nt, nf = dist.values.shape
    kt = np.fft.fftfreq(nt, dt)
    kf = np.fft.fftfreq(nf, df)
    # Fourier transform of unit-area Gaussians, applied on a periodic grid
    gt = np.exp(-2 * (math.pi * kt * sigma_t) ** 2)
    gf = np.exp(-2 * (math.pi * kf * sigma_f) ** 2)
    spec = np.fft.fft2(dist.values) * gt[:, None] * gf[None, :]
    return TFDistribution(dist.time_axis, dist.freq_axis, np.fft.ifft2(spec).real, "husimi")


def lobe_peaks(dist, split=0.0):
    """Peak value and position of the lobes below and above ``split`` THz."""
    out = []
    for sel in (dist.freq_axis < split, dist.freq_axis >= split):
        sub = dist.values[:, sel]
        i, k = np.unravel_index(int(np.argmax(sub)), sub.shape)
        out.append((float(sub[i, k]), float(dist.time_axis[i]), float(dist.freq_axis[sel][k])))
    return out


def dump_distribution(dist, path, stride=1, extra=None):
    """Write ``t,f,value`` rows plus a JSON sidecar describing the grid.

    Returns the paths of the CSV file and the sidecar.
    """
    dist = dist.downsampled(stride)
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write("t,f,value\n")
        freqs = [repr(float(f)) for f in dist.freq_axis]
        for t, row in zip(dist.time_axis.tolist(), dist.values.tolist()):
            fh.writelines(f"{t!r},{f},{v!r}\n" for f, v in zip(freqs, row))
    meta = {
        "kind": dist.kind,
        "n_time": int(len(dist.time_axis)),
        "n_freq": int(len(dist.freq_axis)),
        "t0": float(dist.time_axis[0]),
        "dt": dist.dt,
        "f0": float(dist.freq_axis[0]),
        "df": dist.df,
        "stride": int(stride),
        "time_unit": "ps",
        "freq_unit": "THz",
    }
    if extra:
        meta.update(extra)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def load_distribution(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    nt, nf = meta["n_time"], meta["n_freq"]
    values = rows[:, 2].reshape(nt, nf)
    return TFDistribution(rows[::nf, 0], rows[:nf, 1], values, meta["kind"])
