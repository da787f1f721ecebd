import math

import numpy as np
import pytest

from ramansim.errors import DomainError, ParameterError
from ramansim.pulse import (
    TIME,
    ComplexEnvelope,
    DoubleBlobSpec,
    GridSpec,
    gaussian_pulse,
    make_double_blob,
    pulse_energy,
    rms_width,
    to_frequency,
    to_time,
)
from ramansim.timefreq import (
    TFDistribution,
    dump_distribution,
    husimi,
    load_distribution,
    lobe_peaks,
    smooth_wigner,
    wigner,
)
from ramansim.validation import random_envelope, wigner_marginal_errors


def _blob(grid, phi):
    return to_time(make_double_blob(DoubleBlobSpec(phase_offset=phi), grid))


def test_wigner_of_gaussian_is_nonnegative_gaussian(grid):
    env = gaussian_pulse(grid, 0.8, TIME)
    w = wigner(env)
    assert w.values.min() >= -1e-12 * w.values.max()
    i, k = np.unravel_index(np.argmax(w.values), w.values.shape)
    assert w.time_axis[i] == pytest.approx(0.0)
    assert w.freq_axis[k] == pytest.approx(0.0)


def test_wigner_rejects_frequency_domain(grid):
    with pytest.raises(DomainError):
        wigner(make_double_blob(DoubleBlobSpec(), grid))
    with pytest.raises(DomainError):
        husimi(make_double_blob(DoubleBlobSpec(), grid))


@pytest.mark.parametrize("phi", [0.0, 1.0, math.pi])
def test_wigner_marginals(grid, phi):
    e_t, e_f = wigner_marginal_errors(_blob(grid, phi))
    assert e_t <= 1e-8
    assert e_f <= 1e-8


def test_wigner_marginals_random(grid, rng):
    for _ in range(10):
        e_t, e_f = wigner_marginal_errors(random_envelope(grid, rng))
        assert e_t <= 1e-8
        assert e_f <= 1e-8


def test_wigner_total_is_energy(grid, rng):
    for env in (_blob(grid, 0.3), random_envelope(grid, rng)):
        assert wigner(env).total() == pytest.approx(pulse_energy(env), rel=1e-8)


def test_wigner_fringe_band_inverts_with_pi(grid):
    w0, w1 = wigner(_blob(grid, 0.0)), wigner(_blob(grid, math.pi))
    mid = int(np.argmin(np.abs(w0.freq_axis)))
    band0, band1 = w0.values[:, mid], w1.values[:, mid]
    assert band0[grid.n_samples // 2] > 0 > band1[grid.n_samples // 2]
    np.testing.assert_allclose(band1, -band0, atol=1e-10 * np.abs(band0).max())
    # the band oscillates along t at the blob separation
    spec = np.abs(np.fft.rfft(band0))
    freqs = np.fft.rfftfreq(band0.size, grid.dt)
    assert freqs[np.argmax(spec)] == pytest.approx(3.3, abs=grid.df)


def test_wigner_pi_offset_has_lobes_and_fringes(grid):
    w = wigner(_blob(grid, math.pi))
    f = w.freq_axis
    lo = w.values[:, f < -0.8].max(axis=0)
    hi = w.values[:, f > 0.8].max(axis=0)
    assert f[f < -0.8][np.argmax(lo)] == pytest.approx(-1.65, abs=0.06)
    assert f[f > 0.8][np.argmax(hi)] == pytest.approx(1.65, abs=0.06)
    mid = int(np.argmin(np.abs(f)))
    assert w.values[:, mid].min() < -0.5 * lo.max()


def test_husimi_nonnegative_random(grid, rng):
    for _ in range(100):
        assert husimi(random_envelope(grid, rng)).values.min() >= -1e-12


def test_husimi_blob_lobes_insensitive_to_phase(grid):
    h0, h1 = husimi(_blob(grid, 0.0)), husimi(_blob(grid, math.pi))
    for (v0, t0, f0), (v1, t1, f1) in zip(lobe_peaks(h0), lobe_peaks(h1)):
        assert (t0, f0) == (t1, f1)
        assert abs(v1 - v0) / v0 <= 0.05


def test_husimi_matches_explicit_smoothing(grid):
    env = _blob(grid, 0.9)
    h = husimi(env, 0.25)
    ref = smooth_wigner(wigner(env), 0.25)
    assert np.max(np.abs(h.values - ref.values)) <= 1e-6 * h.values.max()


def test_husimi_of_gaussian_adds_variances(grid):
    sigma_t = 0.25
    env = gaussian_pulse(grid, 1.0, TIME)
    h = husimi(env, sigma_t)
    st_pulse = rms_width(env)
    sf_pulse = rms_width(to_frequency(env))
    tm, fm = h.time_marginal(), h.frequency_marginal()
    var_t = np.sum(tm * h.time_axis**2) / np.sum(tm)
    var_f = np.sum(fm * h.freq_axis**2) / np.sum(fm)
    assert var_t == pytest.approx(st_pulse**2 + sigma_t**2, rel=1e-6)
    assert var_f == pytest.approx(sf_pulse**2 + (1 / (4 * math.pi * sigma_t)) ** 2, rel=1e-6)


def test_husimi_total_is_energy(grid):
    env = _blob(grid, 2.0)
    assert husimi(env).total() == pytest.approx(1.0, rel=1e-8)


def test_husimi_sigma_validated(grid):
    with pytest.raises(ParameterError):
        husimi(_blob(grid, 0.0), 0.0)


def test_distribution_shape_checked():
    with pytest.raises(ValueError):
        TFDistribution(np.arange(3.0), np.arange(4.0), np.zeros((4, 3)))


def test_dump_round_trip(tmp_path, grid):
    h = husimi(_blob(grid, 0.0))
    csv, side = dump_distribution(h, tmp_path / "h.csv", stride=8, extra={"phase_offset": 0.0})
    assert csv.read_text().splitlines()[0] == "t,f,value"
    back = load_distribution(csv)
    small = h.downsampled(8)
    assert back.kind == "husimi"
    assert np.array_equal(back.values, small.values)
    assert np.array_equal(back.time_axis, small.time_axis)
    assert np.array_equal(back.freq_axis, small.freq_axis)
    assert '"phase_offset": 0.0' in side.read_text()


def test_downsample_validates(grid):
    with pytest.raises(ParameterError):
        husimi(_blob(grid, 0.0)).downsampled(0)
