import math

import numpy as np
import pytest

from tikmix.channel import (FrameConfig, apply_channel, bits_to_indices, constellation, es_n0_to_eb_n0_db,
                            es_n0_to_sigma2, frame_length, frame_rng, generate_phase_path, gray_labels,
                            modulate)


class TestModulate:
    def test_qpsk_gray_map(self):
        cfg = FrameConfig(M=4, K=4, pilot_period=None)
        out = modulate([0, 0, 0, 1, 1, 1, 1, 0], cfg)
        np.testing.assert_allclose(out, np.exp(1j * np.array([0, np.pi / 2, np.pi, 3 * np.pi / 2])), atol=1e-15)

    def test_all_pilot_frame(self):
        cfg = FrameConfig(M=4, K=10, pilot_period=1, pilot_symbol_index=2)
        np.testing.assert_array_equal(modulate([], cfg), np.full(10, constellation(4)[2]))

    def test_pilots_inserted(self, rng):
        cfg = FrameConfig(M=8, K=130, pilot_period=60)
        bits = rng.integers(0, 2, 3 * cfg.n_data)
        out = modulate(bits, cfg)
        assert np.flatnonzero(cfg.pilot_mask).tolist() == [0, 60, 120]
        np.testing.assert_array_equal(out[cfg.pilot_mask], 1.0)
        np.testing.assert_allclose(np.abs(out), 1.0)

    @pytest.mark.parametrize("M", [2, 4, 8, 16])
    def test_gray_neighbours_differ_in_one_bit(self, M):
        labels = gray_labels(M)
        assert len({tuple(r) for r in labels}) == M
        for m in range(M):
            assert np.sum(labels[m] != labels[(m + 1) % M]) == 1

    @pytest.mark.parametrize("M", [2, 4, 8])
    def test_index_round_trip(self, M):
        labels = gray_labels(M)
        np.testing.assert_array_equal(bits_to_indices(labels.ravel(), M), np.arange(M))

    def test_bit_count_mismatch(self):
        with pytest.raises(ValueError):
            modulate([0, 1, 1], FrameConfig(M=4, K=2, pilot_period=None))

    @pytest.mark.parametrize("kwargs", [dict(M=3), dict(K=0), dict(pilot_period=0),
                                        dict(pilot_symbol_index=4), dict(sigma_delta=-0.1)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            FrameConfig(**kwargs)


class TestPhasePath:
    def test_constant_without_noise(self, rng):
        path = generate_phase_path(FrameConfig(K=50, sigma_delta=0.0), rng)
        assert np.all(path == path[0])

    def test_increment_variance(self, rng):
        cfg = FrameConfig(K=1_000_001, sigma_delta=0.1)
        path = np.unwrap(generate_phase_path(cfg, rng))
        assert np.var(np.diff(path)) == pytest.approx(0.01, rel=0.01)

    def test_wrapped(self, rng):
        path = generate_phase_path(FrameConfig(K=5000, sigma_delta=0.3), rng)
        assert np.all((path >= 0) & (path < 2 * np.pi))


class TestChannel:
    def test_noiseless(self, rng):
        cfg = FrameConfig(K=16, sigma_delta=0.0, es_n0_db=math.inf)
        c = constellation(4)[rng.integers(0, 4, 16)]
        out = apply_channel(c, np.zeros(16), cfg, rng)
        np.testing.assert_array_equal(out.r, c)

    def test_noise_power(self, rng):
        cfg = FrameConfig(K=1_000_000, es_n0_db=4.5)
        theta = rng.uniform(0, 2 * np.pi, cfg.K)
        c = constellation(4)[rng.integers(0, 4, cfg.K)]
        out = apply_channel(c, theta, cfg, rng)
        assert np.mean(np.abs(out.r - c * np.exp(1j * theta)) ** 2) == pytest.approx(2 * cfg.sigma2, rel=0.01)

    def test_sigma2_convention(self):
        assert es_n0_to_sigma2(4.5) == pytest.approx(1 / (2 * 10 ** 0.45), rel=1e-15)
        assert es_n0_to_sigma2(4.5) == pytest.approx(0.17741, abs=1e-5)

    def test_eb_n0(self):
        assert es_n0_to_eb_n0_db(5.0, 2, 0.75) == pytest.approx(5.0 - 10 * math.log10(1.5))

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            apply_channel(np.ones(3), np.zeros(4), FrameConfig(K=3), rng)


class TestFrameLength:
    @pytest.mark.parametrize("n_data", [1, 59, 60, 118, 119, 504, 2304])
    def test_exact(self, n_data):
        k = frame_length(n_data, 60)
        assert FrameConfig(K=k).n_data == n_data
        assert FrameConfig(K=k - 1).n_data < n_data

    def test_no_pilots(self):
        assert frame_length(100, None) == 100


def test_substreams_are_reproducible_and_distinct():
    a = frame_rng(7, 0, 3).integers(0, 1 << 62, 4)
    b = frame_rng(7, 0, 3).integers(0, 1 << 62, 4)
    c = frame_rng(7, 0, 4).integers(0, 1 << 62, 4)
    d = frame_rng(7, 1, 3).integers(0, 1 << 62, 4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
