import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from irs_factory.channel import (ChannelRealization, RadioConfig, achievable_rate,
                                 combined_channel, complex_gaussian, db_to_linear, draw_realization,
                                 fb_capacity, linear_to_db, noise_power, optimal_phases,
                                 outage_indicator, path_loss_direct, path_loss_indirect, q_function,
                                 q_inverse, received_snr, rician_factor, rician_magnitude_sums,
                                 sample_ru_channel, steering_vector)
from irs_factory.geometry import FactoryLayout, link_geometry, make_deployment

RADIO = RadioConfig()

# frozen oracle values (scipy.stats.norm.isf, hand evaluation)
QINV_1E9 = 5.9978070150076865
K_AT_10M = 4.875284901033862
FBCAP_GAMMA1 = 1.0 - math.sqrt(1 / 200 - 1 / 800) * QINV_1E9 / math.log(2)


def test_db_roundtrip():
    assert db_to_linear(30) == pytest.approx(1000)
    assert linear_to_db(db_to_linear(-12.5)) == pytest.approx(-12.5)


def test_noise_power_hz_and_mhz():
    assert RADIO.noise_power_dbm == pytest.approx(-174 + 9 + 10 * math.log10(400e6))
    assert RADIO.noise_power_dbm == pytest.approx(-78.979, abs=1e-3)
    assert noise_power(9, 400e6) == pytest.approx(RADIO.noise_power_dbm)
    mhz = RadioConfig(bandwidth_unit="MHz")
    assert mhz.noise_power_dbm == pytest.approx(-174 + 9 + 10 * math.log10(400))
    assert RADIO.rho == pytest.approx(10 ** ((30 + 78.97940008672037) / 10), rel=1e-12)


def test_wavelength_and_gains():
    assert RADIO.wavelength_mu == pytest.approx(299_792_458 / 28e9)
    assert RADIO.element_spacing == pytest.approx(RADIO.wavelength_mu / 2)
    assert RADIO.tx_gain_GT == pytest.approx(10**2.4)
    assert RADIO.rx_gain_GR == pytest.approx(10.0)


def test_path_loss_direct_value():
    b = path_loss_direct(10.966, RADIO.tx_gain_GT, RADIO.rx_gain_GR, RADIO.wavelength_mu)
    assert b == pytest.approx(1.5165e-5, rel=1e-3)


def test_path_loss_indirect_scaling():
    args = (RADIO.tx_gain_GT, RADIO.rx_gain_GR, RADIO.wavelength_mu)
    l = RADIO.element_spacing
    b1 = path_loss_indirect(10, 10, 0.0, l, *args)
    assert path_loss_indirect(20, 10, 0.0, l, *args) == pytest.approx(b1 / 4)
    assert path_loss_indirect(10, 10, math.pi / 3, l, *args) == pytest.approx(b1 / 4)
    expected = args[0] * args[1] * l**2 * args[2] ** 2 / (64 * math.pi**3 * 100 * 100)
    assert b1 == pytest.approx(expected)


def test_rician_factor():
    assert rician_factor(10, True) == pytest.approx(K_AT_10M, rel=1e-14)
    assert rician_factor(10, False) == 0
    np.testing.assert_allclose(rician_factor([0, 10], [True, False]), [10**0.734, 0])


def test_steering_vector_shape_and_modulus():
    v = steering_vector(0.3, 0.7, 4, 3, 0.5, 1.0)
    assert v.shape == (12,)
    np.testing.assert_allclose(np.abs(v), 1)
    assert v[0] == pytest.approx(1)
    # element (a=1, b=0) has phase 2 pi l sin(dv) cos(dh) / mu
    assert np.angle(v[3]) == pytest.approx(math.pi * math.sin(0.7) * math.cos(0.3))


def test_steering_broadside_is_all_ones():
    np.testing.assert_allclose(steering_vector(1.1, 0.0, 5, 4, 0.005, 0.01), 1)


def test_sample_ru_channel_limits():
    rng = np.random.default_rng(0)
    los = steering_vector(0.2, 0.4, 4, 4, 0.5, 1.0)
    np.testing.assert_allclose(sample_ru_channel(math.inf, los, rng), los)
    w = sample_ru_channel(0.0, np.ones(200_000), rng)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(w)) < 0.01
    with pytest.raises(ValueError):
        sample_ru_channel(-1.0, los, rng)


def test_complex_gaussian_unit_power():
    z = complex_gaussian(np.random.default_rng(1), 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.01)


@pytest.mark.parametrize("K", [0.0, 1.0, K_AT_10M, 5.4])
def test_rician_magnitude_sum_mean(K):
    # scipy Rice oracle for the per-element mean amplitude
    sigma = math.sqrt(0.5 / (1 + K))
    nu = math.sqrt(K / (1 + K))
    mean_abs = stats.rice(nu / sigma, scale=sigma).mean()
    sums = rician_magnitude_sums(K, 50, 40_000, np.random.default_rng(7))
    assert sums.dtype == np.float64
    se = sums.std() / math.sqrt(sums.size)
    assert abs(sums.mean() - 50 * mean_abs) < 4 * se


def test_rician_magnitude_sums_empty():
    assert rician_magnitude_sums(1.0, 0, 5, np.random.default_rng(0)).tolist() == [0] * 5


def _realization(seed=4, M=4, counts=None):
    layout = FactoryLayout()
    dep = make_deployment(layout, M, 960, 4.0, RADIO.element_spacing)
    geom = link_geometry(layout, dep, (9.0, 21.0, 0.5))
    counts = counts or (1, [0, 2, 0, 1][:M])
    real = draw_realization(geom, dep, RADIO.wavelength_mu, counts, np.random.default_rng(seed))
    return real, dep


def test_optimal_phases_align_paths():
    real, _ = _realization()
    ref = np.angle(real.f_bu)
    for fr, Fb, th in zip(real.f_ru, real.F_br, real.phases_theta):
        terms = fr * np.exp(1j * th) * Fb
        np.testing.assert_allclose(np.angle(terms * np.exp(-1j * ref)), 0, atol=1e-9)


def test_received_snr_matches_complex_sum():
    real, _ = _realization()
    betam = [2e-9, 3e-9, 1e-9, 5e-10]
    power = abs(combined_channel(real, 1.5e-5, betam, 0.01, 0.01)) ** 2
    snr = received_snr(real, RADIO.rho, 1.5e-5, betam, 0.01, 0.01)
    assert snr == pytest.approx(RADIO.rho * power, rel=1e-10)


def test_optimal_phases_beat_random_phases():
    real, _ = _realization(seed=9)
    betam = [2e-9] * 4
    best = abs(combined_channel(real, 1.5e-5, betam, 0.01, 0.01))
    rng = np.random.default_rng(0)
    for _ in range(5):
        real.phases_theta = [rng.uniform(0, 2 * math.pi, fr.size) for fr in real.f_ru]
        assert abs(combined_channel(real, 1.5e-5, betam, 0.01, 0.01)) <= best


def test_optimal_phases_zero_direct():
    th = optimal_phases(0j, [np.array([1j, -1])], [np.array([1, 1j])])
    np.testing.assert_allclose(np.angle(np.array([1j, -1]) * np.exp(1j * th[0]) * [1, 1j]), 0,
                               atol=1e-12)


def test_realization_rician_K_follows_counts():
    real, _ = _realization()
    assert real.rician_K[0] > 0 and real.rician_K[1] == 0
    assert isinstance(real, ChannelRealization)


def test_q_inverse_oracle():
    assert q_inverse(1e-9) == pytest.approx(QINV_1E9, rel=1e-12)
    assert q_inverse(q_function(1.0)) == pytest.approx(1.0, rel=1e-12)
    assert q_inverse(0.05) == pytest.approx(stats.norm.isf(0.05), rel=1e-12)


@given(st.floats(1e-15, 0.49))
def test_q_inverse_roundtrip(eps):
    assert q_function(q_inverse(eps)) == pytest.approx(eps, rel=1e-9)


@pytest.mark.parametrize("eps", [0, 0.5, 1.0, -1e-3])
def test_q_inverse_domain(eps):
    with pytest.raises(ValueError):
        q_inverse(eps)


def test_fb_capacity_value():
    assert fb_capacity(1.0, 200, 1e-9) == pytest.approx(FBCAP_GAMMA1, rel=1e-12)
    assert fb_capacity(1.0, 200, 1e-9) == pytest.approx(0.470113, abs=1e-6)


def test_fb_capacity_zero_snr_and_clip():
    assert fb_capacity(0.0, 200, 1e-9) == 0.0
    assert fb_capacity(0.01, 200, 1e-9) < 0
    assert achievable_rate(0.01, 200, 1e-9) == 0.0


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_fb_capacity_monotone_in_snr(g1, g2):
    lo, hi = sorted((g1, g2))
    assert achievable_rate(lo, 200, 1e-9) <= achievable_rate(hi, 200, 1e-9) + 1e-12


def test_fb_capacity_approaches_shannon():
    g = 100.0
    gap = math.log2(1 + g) - fb_capacity(g, 1e12, 1e-9)
    assert 0 < gap < 1e-4


def test_fb_capacity_validation():
    with pytest.raises(ValueError):
        fb_capacity(-1.0, 200, 1e-9)
    with pytest.raises(ValueError):
        fb_capacity(1.0, 0, 1e-9)


def test_outage_indicator_threshold():
    rho = 1e10
    thr = (2**0.1 - 1) / rho
    assert outage_indicator(thr * 0.999, 0.1, rho)
    assert not outage_indicator(thr, 0.1, rho)
    with pytest.raises(ValueError):
        outage_indicator(1.0, -0.1, rho)


def test_radio_validation():
    with pytest.raises(ValueError):
        RadioConfig(bandwidth_unit="GHz")
