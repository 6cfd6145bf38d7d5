import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radioslam.signal import (
    SPEED_OF_LIGHT,
    AliasingError,
    AmplitudeModel,
    SignalSpec,
    contribution_vector,
    matched_filter_spectrum,
    synthesize_received,
)
from radioslam.engine import strict_local_maxima

ETA = 10 ** -4.2


def test_grid_quantities(spec31):
    assert spec31.M == 31
    assert spec31.T_s == pytest.approx(1 / (31 * 10e6))
    assert spec31.d_max == pytest.approx(SPEED_OF_LIGHT / 10e6)
    assert spec31.cell_width * spec31.M == pytest.approx(spec31.d_max)
    assert np.allclose(spec31.frequencies, -spec31.frequencies[::-1])


@pytest.mark.parametrize("bw,delta", [(305e6, 10e6), (310e6, 10e6), (-10e6, 10e6), (300e6, 0.0)])
def test_invalid_grids_rejected(bw, delta):
    with pytest.raises(ValueError):
        SignalSpec(6e9, bw, delta)


def test_pulse_spectrum_validated():
    with pytest.raises(ValueError):
        SignalSpec(6e9, 20e6, 10e6, pulse_spectrum=[1.0, 1.0])
    with pytest.raises(ValueError):
        SignalSpec(6e9, 20e6, 10e6, pulse_spectrum=[1.0, -1.0, 1.0])


def test_single_bin_grid():
    spec = SignalSpec(6e9, 0.0, 10e6)
    assert spec.M == 1 and spec.frequencies.tolist() == [0.0]


def test_zero_delay_is_all_ones(spec31):
    np.testing.assert_array_equal(contribution_vector(0.0, spec31), np.ones(31))


@given(st.floats(0, 1e-7))
def test_energy_is_delay_independent(t):
    spec = SignalSpec(6e9, 300e6, 10e6, pulse_spectrum=np.linspace(0.5, 1.5, 31))
    h = contribution_vector(t, spec)
    assert np.vdot(h, h).real == pytest.approx(spec.energy, rel=1e-12)


def test_inner_product_is_dirichlet_kernel(spec31, rng):
    for t1, t2 in rng.uniform(0, spec31.M * spec31.T_s, size=(20, 2)):
        direct = sum(np.exp(2j * np.pi * f * (t1 - t2)) for f in spec31.frequencies)
        got = np.vdot(contribution_vector(t1, spec31), contribution_vector(t2, spec31))
        assert got == pytest.approx(direct, abs=1e-9)


def test_vectorised_delays_shape(spec31):
    assert contribution_vector(np.zeros((4, 3)), spec31).shape == (4, 3, 31)


def test_synthesis_noiseless(spec31, rng):
    amp = AmplitudeModel(6e9)
    assert np.all(synthesize_received([], [], spec31, amp, 0.0, rng) == 0)
    z = synthesize_received([3.0], [0.7], spec31, amp, 0.0, rng, phases=[0.3])
    rho = amp.amplitudes([3.0], [0.7], [0.3])[0]
    np.testing.assert_allclose(z, rho * contribution_vector(3.0 / SPEED_OF_LIGHT, spec31), atol=1e-15)
    assert abs(rho) == pytest.approx(0.7 / 3.0)  # unit power at 1 m


def test_noise_variance_monte_carlo(spec31):
    rng = np.random.default_rng(7)
    amp = AmplitudeModel(6e9)
    Z = np.array([synthesize_received([], [], spec31, amp, ETA, rng) for _ in range(100_000 // 31 + 1)])
    assert np.mean(np.abs(Z) ** 2) == pytest.approx(ETA, rel=0.03)


def test_synthesis_is_reproducible(spec31):
    amp = AmplitudeModel(6e9)
    a = synthesize_received([2.0, 5.0], [1, 0.7], spec31, amp, ETA, np.random.default_rng(3))
    b = synthesize_received([2.0, 5.0], [1, 0.7], spec31, amp, ETA, np.random.default_rng(3))
    assert a.tobytes() == b.tobytes()


def test_synthesis_input_checks(spec31, rng):
    amp = AmplitudeModel(6e9)
    with pytest.raises(AliasingError):
        synthesize_received([spec31.d_max + 1], [1.0], spec31, amp, 0.0, rng)
    with pytest.raises(ValueError):
        synthesize_received([1.0], [1.2], spec31, amp, 0.0, rng)
    with pytest.raises(ValueError):
        synthesize_received([1.0], [1.0], spec31, amp, -1.0, rng)


def test_matched_filter_self_correlation(spec31):
    m0 = 7
    z = contribution_vector(spec31.delay_grid[m0], spec31)
    mf = matched_filter_spectrum(z, spec31)
    assert np.argmax(mf) == m0
    assert mf[m0] == pytest.approx(31.0)
    assert np.all(matched_filter_spectrum(np.zeros(31), spec31) == 0)


@given(st.floats(0.5, 29.0))
def test_matched_filter_peak_within_one_cell(d):
    spec = SignalSpec(6e9, 300e6, 10e6)
    amp = AmplitudeModel(6e9)
    z = synthesize_received([d], [1.0], spec, amp, 0.0, np.random.default_rng(0), phases=[0.0])
    m = int(np.argmax(matched_filter_spectrum(z, spec)))
    assert abs(spec.delay_grid[m] - d / SPEED_OF_LIGHT) <= spec.T_s + 1e-15


def test_two_separated_paths_resolved(spec31):
    rng = np.random.default_rng(11)
    bins = (5, 12)
    hits = 0
    for _ in range(100):
        # 30 dB component SNR: |rho|^2 = 1000 eta
        z = sum(np.sqrt(1000 * ETA) * np.exp(2j * np.pi * rng.uniform())
                * contribution_vector(spec31.delay_grid[b], spec31) for b in bins)
        z = z + np.sqrt(ETA / 2) * (rng.standard_normal(31) + 1j * rng.standard_normal(31))
        mf = matched_filter_spectrum(z, spec31)
        peaks = np.flatnonzero(strict_local_maxima(mf))
        top = peaks[np.argsort(mf[peaks])[-2:]]
        hits += set(top.tolist()) == set(bins)
    assert hits >= 99
