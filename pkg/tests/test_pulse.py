import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramansim.errors import DomainError, GridMismatchError, ParameterError
from ramansim.pulse import (
    FREQUENCY,
    TIME,
    ComplexEnvelope,
    DoubleBlobSpec,
    GridSpec,
    ShaperMask,
    apply_mask,
    dump_envelope_csv,
    fwhm,
    gaussian_pulse,
    load_envelope_csv,
    make_double_blob,
    pulse_energy,
    to_frequency,
    to_time,
    transform_limited_duration,
)


def test_grid_defaults(grid):
    assert grid.window == pytest.approx(10.24)
    assert grid.nyquist == pytest.approx(50.0)
    assert grid.df == pytest.approx(1 / 10.24)


@pytest.mark.parametrize("n", [1000, 32, 0, 100])
def test_grid_rejects_bad_sample_counts(n):
    with pytest.raises(GridMismatchError, match="n_samples"):
        GridSpec(n_samples=n)


def test_grid_rejects_low_nyquist():
    with pytest.raises(GridMismatchError, match="Nyquist"):
        GridSpec(dt=0.2)


def test_window_must_hold_four_durations(grid):
    grid.check_duration(2.5)
    with pytest.raises(GridMismatchError):
        grid.check_duration(2.6)
    GridSpec(4096, 0.01).check_duration(5.0)


def test_envelope_length_checked(grid):
    with pytest.raises(GridMismatchError):
        ComplexEnvelope(grid, np.zeros(10))
    with pytest.raises(DomainError):
        ComplexEnvelope(grid, np.zeros(grid.n_samples), "space")


def test_envelope_samples_read_only(grid):
    env = ComplexEnvelope(grid, np.zeros(grid.n_samples))
    with pytest.raises(ValueError):
        env.samples[0] = 1.0


def test_double_blob_peaks_and_beat(grid):
    spec = make_double_blob(DoubleBlobSpec(0.5, 3.3, 0.0, 1.0), grid)
    f = grid.frequency_axis()
    a = spec.intensity()
    lo = f[np.argmax(np.where(f < 0, a, 0))]
    hi = f[np.argmax(np.where(f > 0, a, 0))]
    assert lo == pytest.approx(-1.65, abs=grid.df)
    assert hi == pytest.approx(1.65, abs=grid.df)
    assert a[f < 0].max() == pytest.approx(a[f > 0].max(), rel=1e-12)
    # beat period 1/3.3 ps: the intensity envelope is modulated at 3.3 THz
    it = to_time(spec).intensity()
    beat = np.abs(np.fft.rfft(it))
    freqs = np.fft.rfftfreq(it.size, grid.dt)
    k = np.argmax(np.where(freqs > 1.0, beat, 0.0))
    assert freqs[k] == pytest.approx(3.3, abs=grid.df)


def test_double_blob_unit_energy(grid):
    for phi in (0.0, 1.0, math.pi):
        spec = make_double_blob(DoubleBlobSpec(phase_offset=phi), grid)
        assert pulse_energy(spec) == pytest.approx(1.0, abs=1e-12)
        assert pulse_energy(to_time(spec)) == pytest.approx(1.0, abs=1e-12)


def test_single_blob_has_no_beat(grid):
    env = to_time(make_double_blob(DoubleBlobSpec(amplitude_ratio=0.0), grid))
    it = env.intensity()
    t = grid.time_axis()
    # a single Gaussian is monotone on either side of its peak
    left = it[t <= 0]
    right = it[t >= 0]
    assert np.all(np.diff(left) >= -1e-15)
    assert np.all(np.diff(right) <= 1e-15)


def test_pi_offset_shifts_beat_by_half_period(grid):
    e0 = make_double_blob(DoubleBlobSpec(phase_offset=0.0), grid)
    e1 = make_double_blob(DoubleBlobSpec(phase_offset=math.pi), grid)
    # spectra agree up to the overlap of the Gaussian tails (~3e-7 of the peak)
    d = np.abs(np.abs(e0.samples) - np.abs(e1.samples))
    assert d.max() <= 1e-6 * np.abs(e0.samples).max()
    i0, i1 = to_time(e0).intensity(), to_time(e1).intensity()
    t = grid.time_axis()
    # I_phi = env (1 + cos(2 pi s t + phi)), so phi = pi flips the cosine
    keep = (i0 + i1) > 1e-6 * (i0 + i1).max()
    contrast = (i0 - i1)[keep] / (i0 + i1)[keep]
    np.testing.assert_allclose(contrast, np.cos(2 * np.pi * 3.3 * t[keep]), atol=1e-6)
    # equivalently, i1 is i0's modulation delayed by half a beat period
    half = 0.5 / 3.3
    shifted = 1 + np.cos(2 * np.pi * 3.3 * (t[keep] + half))
    np.testing.assert_allclose(2 * i1[keep] / (i0 + i1)[keep], shifted, atol=1e-6)


def test_modulation_phase_recovered(grid):
    s = 3.3
    t = grid.time_axis()
    for phi in (0.0, 0.4, 1.7, 3.0, -2.2):
        it = to_time(make_double_blob(DoubleBlobSpec(0.5, s, phi, 1.0), grid)).intensity()
        env = np.exp(-4 * math.log(2) * (t / transform_limited_duration(0.5)) ** 2)
        # I / env = c (1 + cos(2 pi s t + phi)); project onto cos and sin
        ratio = np.where(env > 1e-3, it / env, 0.0)
        w = np.where(env > 1e-3, 1.0, 0.0)
        m = np.column_stack([w, w * np.cos(2 * np.pi * s * t), w * np.sin(2 * np.pi * s * t)])
        (c, a, b), *_ = np.linalg.lstsq(m, ratio, rcond=None)
        got = math.atan2(-b, a)
        assert abs(math.remainder(got - phi, 2 * math.pi)) < 1e-6


def test_blob_beyond_nyquist_rejected():
    g = GridSpec(1024, 0.09)
    with pytest.raises(GridMismatchError):
        make_double_blob(DoubleBlobSpec(0.5, 9.0), g)


def test_blob_spec_validation():
    with pytest.raises(ParameterError):
        DoubleBlobSpec(blob_width=0.0)
    with pytest.raises(ParameterError):
        DoubleBlobSpec(amplitude_ratio=-1.0)


def test_identity_mask(grid):
    spec = make_double_blob(DoubleBlobSpec(), grid)
    out = apply_mask(spec, ShaperMask.identity(grid))
    assert np.array_equal(out.samples, spec.samples)


def test_zero_mask(grid):
    spec = make_double_blob(DoubleBlobSpec(), grid)
    out = apply_mask(spec, ShaperMask(np.zeros(grid.n_samples), np.zeros(grid.n_samples)))
    assert pulse_energy(out) == 0.0


def test_step_phase_mask_matches_offset(grid):
    phi = 1.234
    base = make_double_blob(DoubleBlobSpec(0.3, 3.3, 0.0), grid)
    mask = ShaperMask.phase_only(np.where(grid.frequency_axis() > 0, phi, 0.0))
    got = apply_mask(base, mask)
    ref = make_double_blob(DoubleBlobSpec(0.3, 3.3, phi), grid)
    assert np.max(np.abs(got.samples - ref.samples)) / np.max(np.abs(ref.samples)) <= 1e-12


def test_mask_checks(grid):
    spec = make_double_blob(DoubleBlobSpec(), grid)
    with pytest.raises(GridMismatchError):
        apply_mask(spec, ShaperMask.phase_only(np.zeros(10)))
    with pytest.raises(DomainError):
        apply_mask(to_time(spec), ShaperMask.identity(grid))
    with pytest.raises(ParameterError):
        ShaperMask(np.full(4, 1.5), np.zeros(4))
    with pytest.raises(GridMismatchError):
        ShaperMask(np.ones(4), np.zeros(5))


def test_delta_spectrum_gives_flat_modulus(grid):
    x = np.zeros(grid.n_samples, complex)
    x[700] = 1.0
    t = to_time(ComplexEnvelope(grid, x, FREQUENCY))
    m = np.abs(t.samples)
    assert np.ptp(m) <= 1e-12 * m.max()


def test_gaussian_duration_duality():
    grid = GridSpec(8192, 0.01)
    g = gaussian_pulse(grid, 0.5, FREQUENCY)
    assert fwhm(g) == pytest.approx(0.5, rel=1e-3)
    t = to_time(g)
    assert fwhm(t) == pytest.approx(2 * math.log(2) / (math.pi * 0.5), rel=1e-3)
    assert fwhm(t) == pytest.approx(0.882, abs=1e-3)


def test_domain_mismatch(grid):
    env = ComplexEnvelope(grid, np.ones(grid.n_samples), TIME)
    with pytest.raises(DomainError):
        to_time(env)
    with pytest.raises(DomainError):
        to_frequency(to_frequency(env))


def test_zero_energy(grid):
    assert pulse_energy(ComplexEnvelope(grid, np.zeros(grid.n_samples))) == 0.0


def test_phase_mask_preserves_energy(grid, rng):
    spec = make_double_blob(DoubleBlobSpec(), grid)
    for _ in range(20):
        out = apply_mask(spec, ShaperMask.phase_only(rng.uniform(-10, 10, grid.n_samples)))
        assert pulse_energy(out) == pytest.approx(1.0, rel=1e-12)


_vals = st.floats(-1e3, 1e3, allow_subnormal=False).filter(lambda v: v == 0 or abs(v) > 1e-100)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(_vals, _vals), min_size=64, max_size=64), st.sampled_from([TIME, FREQUENCY]))
def test_round_trip_and_parseval(pairs, domain):
    g = GridSpec(64, 0.05)
    x = np.array([complex(a, b) for a, b in pairs])
    if not np.any(x):
        x[0] = 1.0
    env = ComplexEnvelope(g, x, domain)
    if domain == TIME:
        other, back = to_frequency(env), to_time(to_frequency(env))
    else:
        other, back = to_time(env), to_frequency(to_time(env))
    scale = np.max(np.abs(x))
    assert np.max(np.abs(back.samples - x)) <= 1e-12 * scale
    assert pulse_energy(other) == pytest.approx(pulse_energy(env), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(0.2, 1.5), st.floats(2.0, 5.0))
def test_spectral_modulus_independent_of_phase(phi, width, sep):
    g = GridSpec()
    a = make_double_blob(DoubleBlobSpec(width, sep, 0.0), g)
    b = make_double_blob(DoubleBlobSpec(width, sep, phi), g)
    # only the overlap of the two Gaussian tails (value at f = 0) can change
    overlap = math.exp(-2 * math.log(2) * (sep / (2 * width)) ** 2)
    peak = np.abs(a.samples).max()
    np.testing.assert_allclose(np.abs(a.samples), np.abs(b.samples), rtol=0, atol=4 * overlap * peak + 1e-15)


def test_csv_round_trip(tmp_path, grid):
    spec = make_double_blob(DoubleBlobSpec(phase_offset=0.7), grid)
    for env in (spec, to_time(spec)):
        p = dump_envelope_csv(env, tmp_path / f"{env.domain}.csv")
        lines = p.read_text().splitlines()
        assert lines[0].startswith(f"# domain={env.domain}")
        assert lines[1] == "index,t_or_f,re,im"
        back = load_envelope_csv(p)
        assert back.domain == env.domain
        assert back.grid == env.grid
        assert np.array_equal(back.samples, env.samples)
