import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimo_ofdm_im.channel import crandn
from mimo_ofdm_im.constellation import make_constellation
from mimo_ofdm_im.detect import (
    ML_FORMS,
    SubblockObservation,
    activity_llr,
    alamouti_combine,
    alamouti_detect,
    alamouti_encode,
    detect_subblocks,
    llr_demap,
    ml_detect,
    ml_metrics,
    mmse_filter,
    near_ml_posteriors,
    near_ml_scores,
    symbol_vector_priors,
    vblast_detect,
)
from mimo_ofdm_im.exceptions import CapacityError, ConfigError, InputSizeError
from mimo_ofdm_im.index_codec import SubblockCodec


def random_case(codec, t, r, b, n0, seed):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (b, t, codec.p))
    x = codec.encode(bits)                        # (B, T, N)
    h = crandn(rng, (b, codec.n, r, t))
    y = np.einsum("bnrt,btn->bnr", h, x) + np.sqrt(n0) * crandn(rng, (b, codec.n, r))
    return SubblockObservation(y, h, n0), bits, x


CODEC_42 = SubblockCodec(4, 2, make_constellation("bpsk"), "table")
CODEC_43 = SubblockCodec(4, 3, make_constellation("qpsk"), "table")


class TestObservation:
    def test_shape_check(self):
        with pytest.raises(InputSizeError):
            SubblockObservation(np.zeros((2, 4, 2)), np.zeros((2, 4, 3, 2)), 0.1)


class TestMl:
    @pytest.mark.parametrize("det", ["ml", "near_ml", "mmse_simple", "mmse_llr", "mmse_llr_osic"])
    def test_noiseless_recovery(self, det):
        obs, bits, _ = random_case(CODEC_43, 2, 2, 200, 0.0, 0)
        obs.n0 = 1e-9
        res = detect_subblocks(obs, CODEC_43, det, 0.75)
        assert np.array_equal(res.bits, bits)

    def test_forms_agree(self):
        obs, _, _ = random_case(CODEC_42, 2, 2, 50, 0.5, 1)
        ref = ml_metrics(obs, CODEC_42, "factored")
        for form in ML_FORMS[1:]:
            assert np.allclose(ml_metrics(obs, CODEC_42, form), ref)

    def test_unknown_form(self):
        obs, _, _ = random_case(CODEC_42, 1, 1, 2, 0.5, 1)
        with pytest.raises(ValueError):
            ml_metrics(obs, CODEC_42, "dense")

    def test_brute_force_joint(self):
        obs, _, _ = random_case(CODEC_42, 2, 1, 20, 1.0, 2)
        res = ml_detect(obs, CODEC_42)
        book = CODEC_42.codebook
        for b in range(20):
            best = min(itertools.product(range(book.shape[0]), repeat=2),
                       key=lambda c: np.sum(np.abs(obs.y[b, :, 0] - (obs.h[b, :, 0, 0] * book[c[0]] + obs.h[b, :, 0, 1] * book[c[1]])) ** 2))
            assert np.allclose(res.subblocks[b], book[list(best)])

    def test_zero_channel_tie(self):
        obs = SubblockObservation(np.ones((1, 4, 2)), np.zeros((1, 4, 2, 2)), 0.1)
        res = ml_detect(obs, CODEC_42)
        assert np.array_equal(res.bits, np.zeros((1, 2, 4)))

    def test_capacity(self):
        codec = SubblockCodec(8, 4, make_constellation("qam16"))
        obs, _, _ = random_case(codec, 2, 2, 1, 0.1, 0)
        with pytest.raises(CapacityError):
            ml_detect(obs, codec)


class TestNearMl:
    def test_vector_priors(self):
        p = symbol_vector_priors(CODEC_42, 2).reshape(3, 3)
        assert p[0, 0] == pytest.approx(0.25)
        assert np.allclose(p[0, 1:], 0.125) and np.allclose(p[1:, 0], 0.125)
        assert np.allclose(p[1:, 1:], 0.0625)
        assert p.sum() == pytest.approx(1.0)

    def test_evaluation_count(self):
        obs, _, _ = random_case(CODEC_42, 2, 2, 7, 0.3, 3)
        post = near_ml_posteriors(obs, CODEC_42)
        assert post.shape == (7, 4, 9) and post[0].size == 36

    def test_posteriors_normalized(self):
        obs, _, _ = random_case(CODEC_43, 2, 3, 30, 0.2, 4)
        post = near_ml_posteriors(obs, CODEC_43)
        assert np.allclose(np.exp(post).sum(axis=-1), 1.0)

    def test_codebook_mass(self):
        # Marginals also weight non-table patterns, so the products over the
        # codebook sum to at most one rather than exactly one.
        obs, _, _ = random_case(CODEC_42, 2, 2, 500, 0.5, 12)
        mass = np.exp(near_ml_scores(obs, CODEC_42)).sum(axis=-1)
        assert np.all(mass <= 1 + 1e-12) and np.all(mass > 0)
        assert np.min(mass) < 0.99
        print(f"codebook mass: mean {mass.mean():.4f}, min {mass.min():.4f}")

    def test_low_noise_matches_ml(self):
        obs, _, _ = random_case(CODEC_42, 2, 2, 300, 1e-3, 5)
        assert np.array_equal(detect_subblocks(obs, CODEC_42, "near_ml", 0.5).bits,
                              ml_detect(obs, CODEC_42).bits)


class TestMmse:
    @pytest.mark.parametrize("rho", [0.1, 1.0, 10.0, 1e4])
    def test_identity_channel(self, rho):
        n0 = 0.5 / rho
        st_ = mmse_filter(np.eye(2)[None], n0, 0.5)
        q = rho / (1 + rho)
        assert np.allclose(st_.w[0], q * np.eye(2))
        assert np.allclose(st_.gain, q)
        assert np.allclose(st_.var, n0 * q ** 2)

    def test_stats_match_direct_formula(self):
        rng = np.random.default_rng(6)
        h = crandn(rng, (3, 2))
        n0, sx = 0.2, 0.75
        w = np.linalg.inv(h.conj().T @ h + np.eye(2) * n0 / sx) @ h.conj().T
        st_ = mmse_filter(h[None], n0, sx)
        assert np.allclose(st_.w[0], w)
        wh = w @ h
        for t in range(2):
            other = 1 - t
            var = sx * abs(wh[t, other]) ** 2 + n0 * np.sum(np.abs(w[t]) ** 2)
            assert st_.var[0, t] == pytest.approx(var)
            assert st_.gain[0, t] == pytest.approx(wh[t, t].real)

    def test_llr_table_decision(self):
        # |xhat| decreasing -> LLRs ordered 1 > 2 > 3 > 4 -> row (1,3) -> [0 0]
        xhat = np.array([[[2.0, 1.5, 1.0, 0.5]]])
        llr = activity_llr(xhat, np.ones((1, 1, 4)), np.full((1, 1, 4), 0.5), CODEC_42.constellation.points)
        assert np.all(np.diff(llr[0, 0]) < 0)
        res = llr_demap(xhat, np.ones((1, 1, 4)), np.full((1, 1, 4), 0.5), CODEC_42)
        assert list(res.bits[0, 0, :2]) == [0, 0]
        assert np.count_nonzero(res.subblocks[0, 0]) == 2

    @pytest.mark.parametrize("name", ["bpsk", "qpsk", "qam16"])
    def test_llr_active_above_inactive(self, name):
        pts = make_constellation(name).points
        g, v = np.array([0.8]), np.array([0.3])
        on = activity_llr(g * pts[:1], g, v, pts)
        off = activity_llr(np.zeros(1), g, v, pts)
        assert on[0] > off[0]

    def test_combinatorial_clamp(self):
        codec = SubblockCodec(8, 4, make_constellation("bpsk"))
        # strongest four at positions 4..7 -> rank 69, which has no label
        xhat = np.array([[[0.1, 0.1, 0.1, 0.1, 2, 2, 2, 2]]], dtype=complex)
        res = llr_demap(xhat, np.ones((1, 1, 8)), np.full((1, 1, 8), 0.1), codec)
        assert res.illegal_count == 1
        assert list(res.bits[0, 0, :6]) == [1] * 6

    def test_osic_single_antenna_equals_llr(self):
        obs, _, _ = random_case(CODEC_43, 1, 2, 200, 0.3, 7)
        a = detect_subblocks(obs, CODEC_43, "mmse_llr_osic", 0.75)
        b = detect_subblocks(obs, CODEC_43, "mmse_llr", 0.75)
        assert np.array_equal(a.bits, b.bits)

    def test_osic_beats_llr(self):
        obs, bits, _ = random_case(CODEC_43, 4, 4, 3000, 0.05, 8)
        err = {d: np.sum(detect_subblocks(obs, CODEC_43, d, 0.75).bits != bits)
               for d in ("mmse_llr", "mmse_llr_osic", "mmse_simple")}
        assert err["mmse_llr_osic"] < err["mmse_llr"]

    def test_unknown_detector(self):
        obs, _, _ = random_case(CODEC_42, 1, 1, 1, 0.1, 0)
        with pytest.raises(ValueError):
            detect_subblocks(obs, CODEC_42, "zf", 0.5)


class TestBaselines:
    def test_vblast_ml_brute_force(self):
        rng = np.random.default_rng(9)
        c = make_constellation("qpsk")
        h = crandn(rng, (40, 2, 2))
        y = crandn(rng, (40, 2))
        idx = vblast_detect(y, h, 0.1, c, "ml")
        for b in range(40):
            best = min(itertools.product(range(4), repeat=2),
                       key=lambda s: np.sum(np.abs(y[b] - h[b] @ c.points[list(s)]) ** 2))
            assert tuple(idx[b]) == best

    @pytest.mark.parametrize("variant", ["ml", "mmse", "mmse_osic"])
    def test_vblast_noiseless(self, variant):
        rng = np.random.default_rng(10)
        c = make_constellation("qam16")
        h = crandn(rng, (500, 4, 4))
        s = rng.integers(0, 16, (500, 4))
        y = np.einsum("brt,bt->br", h, c.points[s])
        assert np.array_equal(vblast_detect(y, h, 1e-9, c, variant), s)

    def test_vblast_unknown(self):
        with pytest.raises(ConfigError):
            vblast_detect(np.zeros(2), np.zeros((2, 2)), 0.1, make_constellation("bpsk"), "zf")

    def test_alamouti_gain(self):
        rng = np.random.default_rng(11)
        h = crandn(rng, (100, 3, 2))
        s = crandn(rng, (100, 2))
        x1, x2 = alamouti_encode(s[:, 0], s[:, 1])
        y1 = np.einsum("brt,bt->br", h, x1)
        y2 = np.einsum("brt,bt->br", h, x2)
        z, gain = alamouti_combine(y1, y2, h)
        assert np.allclose(gain, np.sum(np.abs(h) ** 2, axis=(1, 2)) / np.sqrt(2))
        assert np.allclose(z, gain[:, None] * s)

    def test_alamouti_power(self):
        x1, x2 = alamouti_encode(np.array([1.0]), np.array([1j]))
        assert np.allclose(np.abs(x1) ** 2, 0.5) and np.allclose(np.abs(x2) ** 2, 0.5)

    def test_alamouti_needs_two(self):
        with pytest.raises(ConfigError):
            alamouti_combine(np.zeros(2), np.zeros(2), np.zeros((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(phase=st.floats(0, 2 * np.pi), seed=st.integers(0, 10_000))
    def test_alamouti_phase_invariance(self, phase, seed):
        rng = np.random.default_rng(seed)
        c = make_constellation("qpsk")
        h = crandn(rng, (20, 2, 2))
        s = c.points[rng.integers(0, 4, (20, 2))]
        x1, x2 = alamouti_encode(s[:, 0], s[:, 1])
        noise = 0.05 * crandn(rng, (2, 20, 2))
        y1 = np.einsum("brt,bt->br", h, x1) + noise[0]
        y2 = np.einsum("brt,bt->br", h, x2) + noise[1]
        rot = np.exp(1j * phase)
        a = alamouti_detect(y1, y2, h, c)
        b = alamouti_detect(y1 * rot, y2 * rot, h * rot, c)
        assert np.array_equal(a, b)
