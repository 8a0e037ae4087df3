import numpy as np
import pytest

from mimo_ofdm_im.channel import (
    EPA_TAP_GAINS,
    apply_channel_and_noise,
    corrupt_csi,
    crandn,
    draw_channel,
    power_delay_profile,
    snr_to_noise,
)
from mimo_ofdm_im.config import SystemConfig
from mimo_ofdm_im.exceptions import ConfigError


class TestProfiles:
    def test_uniform(self):
        assert np.allclose(power_delay_profile("uniform", 10), 0.1)

    def test_epa(self):
        p = power_delay_profile("epa", 4)
        g = np.array([0.7594, 0.6486, 0.0, 0.0517])
        assert np.allclose(p, g ** 2 / np.sum(g ** 2))
        assert p[2] == 0 and p.sum() == pytest.approx(1.0)
        assert np.array_equal(EPA_TAP_GAINS, g)

    def test_epa_needs_four_taps(self):
        with pytest.raises(ConfigError):
            power_delay_profile("epa", 5)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            power_delay_profile("tdl", 4)


class TestDraws:
    def test_crandn_moments(self):
        z = crandn(np.random.default_rng(0), (200_000,))
        assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
        assert abs(np.mean(z ** 2)) < 0.01
        assert np.var(z.real) == pytest.approx(0.5, abs=0.01)

    @pytest.mark.parametrize("profile, taps", [("uniform", 10), ("epa", 4), ("uniform", 1)])
    def test_frequency_response_power(self, profile, taps):
        rng = np.random.default_rng(1)
        h = np.stack([draw_channel(2, 2, taps, profile, 64, rng).freq for _ in range(3000)])
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.03)
        # per-entry mean is zero
        assert np.max(np.abs(h.mean(axis=0))) < 0.1

    def test_flat_when_single_tap(self):
        h = draw_channel(2, 3, 1, "uniform", 32, np.random.default_rng(2)).freq
        assert np.allclose(h, h[..., :1])

    def test_subcarrier_matrices_shape(self):
        ch = draw_channel(2, 3, 10, "uniform", 64, np.random.default_rng(3))
        m = ch.subcarrier_matrices(4)
        assert m.shape == (16, 4, 3, 2)
        # subblock 0 uses physical subcarriers 0, 16, 32, 48
        assert np.allclose(m[0, 2], ch.freq[:, :, 32])

    def test_noise_variance(self):
        rng = np.random.default_rng(4)
        x = np.zeros((100_000, 2))
        h = np.zeros((100_000, 2, 2))
        y = apply_channel_and_noise(x, h, 0.3, rng)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(0.3, rel=0.02)

    def test_noiseless(self):
        rng = np.random.default_rng(5)
        h = crandn(rng, (5, 3, 2))
        x = crandn(rng, (5, 2))
        assert np.allclose(apply_channel_and_noise(x, h, 0.0), np.einsum("brt,bt->br", h, x))


class TestCsi:
    def test_perfect(self):
        h = crandn(np.random.default_rng(0), (4, 2, 2))
        assert corrupt_csi(h, np.inf, 0.1) is h

    def test_error_variance(self):
        rng = np.random.default_rng(1)
        h = np.zeros((200_000,), dtype=complex)
        e = corrupt_csi(h, 4.0, 0.2, rng)
        assert np.mean(np.abs(e) ** 2) == pytest.approx(0.05, rel=0.02)

    @pytest.mark.parametrize("q", [0, -1])
    def test_bad_q(self, q):
        with pytest.raises(ConfigError):
            corrupt_csi(np.zeros(3), q, 0.1)


class TestSnr:
    def test_im_bpsk(self):
        cfg = SystemConfig()
        # m = 128 subblocks * 4 bits; Eb = (512 + 36) / 512
        n0t, n0f = snr_to_noise(10.0, cfg)
        assert n0t == pytest.approx(548 / 512 / 10)
        assert n0f == pytest.approx(0.5 * 548 / 512 / 10)

    def test_vblast(self):
        cfg = SystemConfig(scheme="vblast", detector="vblast_ml", modulation="qpsk")
        n0t, n0f = snr_to_noise(0.0, cfg)
        assert n0t == n0f == pytest.approx(548 / 1024)

    def test_alamouti(self):
        cfg = SystemConfig(scheme="alamouti", detector="alamouti", modulation="qam16")
        n0t, n0f = snr_to_noise(20.0, cfg)
        assert n0t == n0f == pytest.approx(548 / 2048 / 100)

    def test_im_43_qpsk(self):
        cfg = SystemConfig(subblock_k=3, modulation="qpsk")
        n0t, n0f = snr_to_noise(3.0, cfg)
        assert n0t == pytest.approx(548 / (128 * 8) / 10 ** 0.3)
        assert n0f / n0t == pytest.approx(0.75)
