import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimo_ofdm_im.constellation import (
    MODULATIONS,
    demap_symbol,
    int_to_bits,
    make_constellation,
    map_symbols,
)
from mimo_ofdm_im.exceptions import ConfigError, InputSizeError

NAMES = sorted(MODULATIONS)


class TestConstruction:
    @pytest.mark.parametrize("name", NAMES)
    def test_unit_energy(self, name):
        c = make_constellation(name)
        # 8-QAM is normalized numerically too
        assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_qam16_energy_by_enumeration(self):
        c = make_constellation("qam16")
        levels = np.array([-3, -1, 1, 3])
        ref = np.mean([abs(a + 1j * b) ** 2 for a in levels for b in levels])
        assert np.allclose(np.sort_complex(c.points), np.sort_complex(
            (levels[:, None] + 1j * levels[None, :]).ravel() / np.sqrt(ref)))

    @pytest.mark.parametrize("name", NAMES)
    def test_points_distinct(self, name):
        c = make_constellation(name)
        assert len(np.unique(np.round(c.points, 12))) == c.order
        assert c.bits_per_symbol == int(np.log2(c.order))

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            make_constellation("qam32")

    def test_points_read_only(self):
        c = make_constellation("qpsk")
        with pytest.raises(ValueError):
            c.points[0] = 0

    def test_qam8_is_rectangular_grid(self):
        c = make_constellation("qam8")
        assert len(np.unique(np.round(c.points.real, 12))) == 4
        assert len(np.unique(np.round(c.points.imag, 12))) == 2


class TestMapping:
    def test_bpsk_labels(self):
        c = make_constellation("bpsk")
        assert np.array_equal(map_symbols([0, 1], c), [1, -1])

    @pytest.mark.parametrize("name", NAMES)
    def test_empty(self, name):
        assert map_symbols([], make_constellation(name)).size == 0

    def test_bad_length(self):
        with pytest.raises(InputSizeError):
            map_symbols([0, 1, 1], make_constellation("qpsk"))

    @pytest.mark.parametrize("name", NAMES)
    def test_round_trip_all_words(self, name):
        c = make_constellation(name)
        words = int_to_bits(np.arange(c.order), c.bits_per_symbol)
        for w in words:
            s = map_symbols(w, c)[0]
            point, bits = demap_symbol(s, c)
            assert point == s
            assert np.array_equal(bits, w)

    def test_empirical_energy(self):
        c = make_constellation("qam64")
        bits = np.random.default_rng(0).integers(0, 2, 6 * 100_000)
        assert np.mean(np.abs(map_symbols(bits, c)) ** 2) == pytest.approx(1.0, abs=1e-2)

    @pytest.mark.parametrize("name", ["qpsk", "qam16", "qam64", "qam8"])
    def test_gray_neighbours(self, name):
        c = make_constellation(name)
        d = np.abs(c.points[:, None] - c.points[None, :])
        lab = c.labels
        for i, j in zip(*np.nonzero(np.isclose(d, c.min_distance))):
            assert np.sum(lab[i] != lab[j]) == 1


class TestDemap:
    def test_exact_point(self):
        c = make_constellation("qam16")
        point, _ = demap_symbol(c.points[5], c)
        assert abs(point - c.points[5]) == 0

    def test_bpsk_tie_goes_to_first(self):
        c = make_constellation("bpsk")
        point, bits = demap_symbol(0.0, c)
        assert point == 1 and list(bits) == [0]

    @settings(max_examples=200, deadline=None)
    @given(m=st.integers(0, 3), r=st.floats(0, 0.999), phi=st.floats(0, 2 * np.pi))
    def test_qpsk_perturbed(self, m, r, phi):
        c = make_constellation("qpsk")
        pert = r * c.min_distance / 2 * np.exp(1j * phi)
        z = 0.9 * c.points[m] + pert * 0.5
        brute = int(np.argmin([abs(z - s) for s in c.points]))
        point, _ = demap_symbol(z, c)
        assert point == c.points[brute] == c.points[m]
