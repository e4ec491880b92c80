import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afbm.channel import channel_matrix, sample_channel, trial_stream
from afbm.modem import (AFFINE, FILTERED, AfbmModem, ModulationConfig,
                        active_indices, design_config, mapping_matrix,
                        qam_alphabet, qam_demap, qam_map)


class TestDesignConfig:

    def test_family_defaults(self):
        assert design_config(64, 8, 128, 96, "hermite").overlap == 1.5
        assert design_config(64, 8, 128, 96, "phydyas").overlap == 4.0

    def test_shared_upsweep_rate(self):
        cfg = design_config(64, 8, 128, 96, "hermite")
        assert cfg.c1_L == cfg.c1_P == pytest.approx(5 / 192)
        assert cfg.c2_L == pytest.approx(1 / (np.pi * 64 ** 2))
        assert cfg.c2_P == pytest.approx(1 / (np.pi * 96 ** 2))

    def test_sizes(self):
        cfg = design_config(64, 8, 128, 96, "hermite")
        assert cfg.payload_size == 256
        assert cfg.frame_size == int(1.5 * 128) + 7 * 64

    def test_violations(self):
        good = design_config(64, 8, 128, 96, "hermite")
        assert good.violations() == []
        bad = design_config(96, 8, 128, 96, "hermite")
        assert any("L" in v for v in bad.violations())
        with pytest.raises(ValueError):
            AfbmModem(bad)


class TestMapping:

    def test_active_band_edges(self):
        idx = active_indices(16)
        assert np.array_equal(idx, [0, 1, 2, 3, 12, 13, 14, 15])

    @pytest.mark.parametrize("L,K", [(8, 1), (16, 2), (64, 8)])
    def test_isometry_exact(self, L, K):
        Xi = mapping_matrix(L, K)
        assert Xi.shape == (L * K, L * K // 2)
        assert np.array_equal(Xi.T @ Xi, np.eye(L * K // 2))

    def test_guard_rows_are_zero(self):
        Xi = mapping_matrix(16, 2)
        assert not Xi[4:12].any()
        assert not Xi[20:28].any()


class TestModemStructure:

    def test_unit_column_gain(self, mid_hermite, mid_phydyas):
        for modem in (mid_hermite, mid_phydyas):
            S = modem.modulation_matrix()
            norms = np.linalg.norm(S, axis=0)
            assert np.abs(norms - 1).max() < 1e-8

    def test_compensation_matches_gram_diagonal(self, mid_hermite):
        comp = mid_hermite.compensation_vector()
        act = active_indices(64)
        assert np.allclose(comp.entries[act],
                           1 / np.sqrt(comp.gram_diag[act]))

    def test_precoder_zeroes_guard_band(self, mid_hermite):
        C = mid_hermite.precoder()
        assert not np.abs(C[:, 16:48]).any()
        assert np.abs(C[:, :16]).any()

    def test_synthesis_isometry(self, mid_hermite):
        Q = mid_hermite.synthesis_matrix()
        assert np.abs(Q.conj().T @ Q - np.eye(64)).max() < 1e-10

    def test_filter_matrix_shape(self, mid_phydyas):
        G = mid_phydyas.filter_matrix()
        assert G.shape == (mid_phydyas.cfg.frame_size, 128 * 8)

    def test_received_noise_power(self, mid_hermite):
        # matched demodulator columns have unit gain, the gained bank
        # columns carry N/2 * 1/N = 1/2 each
        assert mid_hermite.received_noise_power("affine", 0.3) == \
            pytest.approx(0.3, rel=1e-8)
        assert mid_hermite.received_noise_power("filtered", 0.3) == \
            pytest.approx(0.15, rel=1e-12)
        assert mid_hermite.received_noise_power("filtered", 0.0) == 0.0
        with pytest.raises(ValueError):
            mid_hermite.received_noise_power("delay", 0.3)
        with pytest.raises(ValueError):
            mid_hermite.received_noise_power("affine", -1.0)

    def test_interference_enters_through_composition(self, mid_hermite,
                                                     mid_phydyas):
        # the single-symbol bank Gram is exactly diagonal, so residual
        # interference can only come from composing it with the precoded
        # synthesis (per symbol) and from symbol overlap (full Gram);
        # with overlap included the longer PHYDYAS pulse leaks more
        def off_mass(gram):
            d = np.diag(np.diag(gram))
            return np.linalg.norm(gram - d) / np.linalg.norm(d)

        for modem in (mid_hermite, mid_phydyas):
            bank_gram = modem._bank_single.T @ modem._bank_single
            V = modem.synthesis_matrix() @ modem.precoder()
            per_symbol = V.conj().T @ bank_gram @ V
            assert off_mass(per_symbol) > 1e-3

        def full_mass(modem):
            S = modem.modulation_matrix()
            return off_mass(S.conj().T @ S)

        assert full_mass(mid_phydyas) > full_mass(mid_hermite)


class TestFastPaths:

    def test_modulate_matches_dense(self, toy_modem, rng):
        S = toy_modem.modulation_matrix()
        for _ in range(10):
            x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            assert np.abs(toy_modem.modulate(x) - S @ x).max() < 1e-9

    def test_matched_demodulate_matches_dense(self, toy_modem, rng):
        S = toy_modem.modulation_matrix()
        r = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        want = S.conj().T @ r
        assert np.abs(toy_modem.matched_demodulate(r) - want).max() < 1e-9

    def test_filtered_receive_matches_dense(self, toy_modem, rng):
        G = toy_modem.filter_matrix()
        r = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        want = G.conj().T @ r
        assert np.abs(toy_modem.filtered_receive(r) - want).max() < 1e-9

    def test_modulate_rejects_wrong_length(self, toy_modem):
        with pytest.raises(ValueError):
            toy_modem.modulate(np.ones(7))


class TestEffectiveChannels:

    def test_affine_identity_channel(self, toy_modem):
        S = toy_modem.modulation_matrix()
        heff = toy_modem.effective_channel_affine(np.eye(32))
        assert heff.domain == AFFINE
        assert np.allclose(heff.matrix, S.conj().T @ S, atol=1e-12)

    def test_filtered_identity_is_near_isometry(self, mid_hermite):
        M = mid_hermite.cfg.frame_size
        heff = mid_hermite.effective_channel_filtered(np.eye(M))
        assert heff.domain == FILTERED
        gram = heff.matrix.conj().T @ heff.matrix
        diag = np.abs(np.diag(gram))
        # interior coordinates see the full analysis window; only the
        # outermost symbols lose coverage at the frame edges
        assert abs(np.median(diag) - 1) < 1e-3
        assert diag.min() > 0.5
        off = gram - np.diag(np.diag(gram))
        assert np.linalg.norm(off) ** 2 / gram.shape[0] < 0.05

    def test_accepts_realization(self, toy_modem):
        ch = sample_channel(2, 4, 0.5, trial_stream(3, 0))
        H = channel_matrix(ch, size=32)
        ha = toy_modem.effective_channel_affine(ch)
        assert np.allclose(ha.matrix,
                           toy_modem.effective_channel_affine(H).matrix,
                           atol=1e-12)

    def test_rejects_wrong_frame(self, toy_modem):
        with pytest.raises(ValueError):
            toy_modem.effective_channel_affine(np.eye(31))


class TestQam:

    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_alphabet_energy(self, order):
        a = qam_alphabet(order)
        assert a.size == order
        assert np.mean(np.abs(a) ** 2) == pytest.approx(1.0)

    @pytest.mark.parametrize("order", [4, 16])
    def test_roundtrip(self, order, rng):
        bits = rng.integers(0, 2, 60 * int(np.log2(order)))
        assert np.array_equal(qam_demap(qam_map(bits, order), order), bits)

    def test_gray_neighbors_differ_in_one_bit(self):
        # adjacent constellation columns flip exactly one bit
        bits = qam_demap(qam_alphabet(16), 16).reshape(16, 4)
        levels = np.unique(qam_alphabet(16).real)
        rows = {}
        for b, sym in zip(bits, qam_alphabet(16)):
            rows[(sym.real, sym.imag)] = b
        for im in levels:
            for lo, hi in zip(levels, levels[1:]):
                flips = rows[(lo, im)] != rows[(hi, im)]
                assert flips.sum() == 1

    def test_demap_is_nearest_neighbor(self, rng):
        a = qam_alphabet(16)
        noisy = a + 0.05 * (rng.standard_normal(16)
                            + 1j * rng.standard_normal(16))
        assert np.array_equal(qam_demap(noisy, 16), qam_demap(a, 16))

    @pytest.mark.parametrize("order", [2, 8, 32])
    def test_rejects_non_square_orders(self, order):
        with pytest.raises(ValueError):
            qam_alphabet(order)

    def test_map_rejects_ragged_bits(self):
        with pytest.raises(ValueError):
            qam_map(np.zeros(3, dtype=int), 4)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_roundtrip_property(self, seed):
        bits = np.random.default_rng(seed).integers(0, 2, 32)
        assert np.array_equal(qam_demap(qam_map(bits, 4), 4), bits)
