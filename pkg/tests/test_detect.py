"""Detector correctness: worked examples, exact tie handling, equivalences."""

import inspect
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scwlink.channel import Csi, CsiMixture, DeterministicCsi, transmit
from scwlink.codebook import (
    Codebook,
    SymbolAlphabet,
    WeightVector,
    enumerate_full_scw,
    sample_partial_codebook,
)
from scwlink.detect import (
    DetectionError,
    batch_log_likelihoods,
    detect_binary_cw_csi_free,
    detect_coherent_ml,
    detect_noncoherent_ml,
    detect_scw_csi_free,
    detect_symbolwise_coherent,
    log_likelihood,
)

TERNARY = SymbolAlphabet.uniform(3)
BINARY = SymbolAlphabet.uniform(2)


class TestSortingDetector:
    def test_ternary_worked_example(self):
        res = detect_scw_csi_free([12, 4, 8, 6, 15, 10], TERNARY, WeightVector((2, 3, 1)))
        levels = [TERNARY.levels[i] for i in res.best]
        assert levels == [0.5, 0.0, 0.5, 0.0, 1.0, 0.5]
        assert not res.tie_broken

    def test_binary_worked_example_with_tie(self):
        res = detect_scw_csi_free(
            [12, 4, 8, 6, 15, 8], BINARY, WeightVector((3, 3)), enumerate_ties=True
        )
        assert res.tie_broken
        assert set(res.ties) == {(1, 0, 0, 0, 1, 1), (1, 0, 1, 0, 1, 0)}
        assert res.best in res.ties

    def test_sorted_input_gives_block_codeword(self):
        w = WeightVector((2, 3, 1))
        res = detect_scw_csi_free([1, 2, 3, 4, 5, 6], TERNARY, w)
        assert res.best == (0, 0, 1, 1, 1, 2)

    def test_stable_tie_break_prefers_lower_index(self):
        # equal observations at positions 0 and 1 straddle the boundary;
        # the stable order assigns the lower level to the earlier position
        res = detect_scw_csi_free([5, 5], BINARY, WeightVector((1, 1)))
        assert res.best == (0, 1)
        assert res.tie_broken

    def test_tie_enumeration_cap(self):
        res = detect_scw_csi_free(
            [7] * 6, BINARY, WeightVector((3, 3)), enumerate_ties=True, tie_cap=10
        )
        assert res.tie_broken
        assert res.ties == ()  # C(6,3) = 20 exceeds the cap
        res2 = detect_scw_csi_free(
            [7] * 6, BINARY, WeightVector((3, 3)), enumerate_ties=True, tie_cap=20
        )
        assert len(res2.ties) == 20

    def test_no_tie_reports_singleton_when_enumerating(self):
        res = detect_scw_csi_free([1, 5], BINARY, WeightVector((1, 1)), enumerate_ties=True)
        assert res.ties == (res.best,)

    def test_length_mismatch(self):
        with pytest.raises(DetectionError):
            detect_scw_csi_free([1, 2, 3], BINARY, WeightVector((1, 1)))

    def test_takes_no_channel_state_argument(self):
        # the CSI-free guarantee is structural: no state parameter exists
        params = inspect.signature(detect_scw_csi_free).parameters
        assert "csi" not in params and "model" not in params

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_monotone_relabeling_invariance(self, data):
        """Any strictly increasing map on the observations leaves the decision."""
        K = data.draw(st.integers(2, 9))
        split = data.draw(st.integers(1, K - 1))
        w = WeightVector((split, K - split))
        r = data.draw(st.lists(st.integers(0, 12), min_size=K, max_size=K))
        base = detect_scw_csi_free(r, BINARY, w)
        # build a strictly increasing integer map with random gaps
        uniq = sorted(set(r))
        gaps = data.draw(
            st.lists(st.integers(1, 5), min_size=len(uniq), max_size=len(uniq))
        )
        mapped_vals = np.cumsum(gaps)
        mapping = {v: int(m) for v, m in zip(uniq, mapped_vals)}
        mapped = [mapping[v] for v in r]
        assert detect_scw_csi_free(mapped, BINARY, w).best == base.best

    def test_near_linear_runtime(self):
        w_small = WeightVector((1000, 1000))
        w_big = WeightVector((100_000, 100_000))
        rng = np.random.default_rng(0)
        r_small = rng.integers(0, 50, 2000)
        r_big = rng.integers(0, 50, 200_000)
        detect_scw_csi_free(r_small, BINARY, w_small)  # warm up
        t0 = time.perf_counter()
        for _ in range(20):
            detect_scw_csi_free(r_small, BINARY, w_small)
        t_small = (time.perf_counter() - t0) / 20
        t0 = time.perf_counter()
        for _ in range(20):
            detect_scw_csi_free(r_big, BINARY, w_big)
        t_big = (time.perf_counter() - t0) / 20
        # 100x the length should cost far less than quadratic growth allows
        assert t_big < 1000 * max(t_small, 1e-6)


class TestBinaryCorrelationDetector:
    def test_full_cw_picks_largest_positions(self):
        book = enumerate_full_scw(BINARY, WeightVector((2, 2)))
        res = detect_binary_cw_csi_free([5, 1, 7, 2], book)
        assert res.best == (1, 0, 1, 0)
        assert res.score == 12.0

    def test_partial_codebook_correlation(self):
        book = Codebook.from_codewords(BINARY, [(0, 0, 1, 1), (1, 1, 0, 0)])
        res = detect_binary_cw_csi_free([5, 1, 7, 2], book)
        assert res.best == (0, 0, 1, 1)  # correlation 9 beats 6
        assert res.score == 9.0

    def test_constant_observations_tie_everything(self):
        book = enumerate_full_scw(BINARY, WeightVector((2, 2)))
        res = detect_binary_cw_csi_free([3, 3, 3, 3], book)
        assert len(res.ties) == book.size
        assert res.tie_broken
        assert res.best == book.codewords[0]

    def test_matches_sorting_detector_on_full_books(self):
        rng = np.random.default_rng(3)
        for K, w in [(5, 2), (6, 3), (8, 4)]:
            book = enumerate_full_scw(BINARY, WeightVector((K - w, w)))
            for _ in range(50):
                r = rng.integers(0, 10, K)
                a = detect_binary_cw_csi_free(r, book)
                b = detect_scw_csi_free(r, BINARY, book.weights, enumerate_ties=True, tie_cap=1000)
                assert a.best in b.ties
                assert set(a.ties) == set(b.ties)

    def test_non_binary_rejected(self):
        book = enumerate_full_scw(TERNARY, WeightVector((1, 1, 1)))
        with pytest.raises(DetectionError):
            detect_binary_cw_csi_free([1, 2, 3], book)


class TestLogLikelihood:
    def test_zero_observation_unit_noise(self):
        assert log_likelihood([0], [0], BINARY, Csi(123.0, 1.0)) == pytest.approx(-1.0)

    def test_scalar_value(self):
        # direct scalar evaluation: 2*ln(4) - 4 - ln(2)
        expected = 2 * math.log(4) - 4 - math.log(2)
        assert log_likelihood([2], [1], BINARY, Csi(3.0, 1.0)) == pytest.approx(expected)

    def test_zero_mean_nonzero_count_is_minus_inf(self):
        assert log_likelihood([1], [0], BINARY, Csi(5.0, 0.0)) == -math.inf

    def test_zero_mean_zero_count_is_finite(self):
        assert log_likelihood([0, 3], [0, 1], BINARY, Csi(5.0, 0.0)) == pytest.approx(
            3 * math.log(5) - 5 - math.log(6)
        )

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_permutation_symmetry(self, data):
        K = data.draw(st.integers(2, 8))
        r = data.draw(st.lists(st.integers(0, 15), min_size=K, max_size=K))
        cw = data.draw(st.lists(st.integers(0, 1), min_size=K, max_size=K))
        perm = data.draw(st.permutations(range(K)))
        csi = Csi(7.0, 1.5)
        a = log_likelihood(r, cw, BINARY, csi)
        b = log_likelihood([r[i] for i in perm], [cw[i] for i in perm], BINARY, csi)
        assert a == pytest.approx(b, abs=1e-9)


class TestCoherentMl:
    def test_single_codeword(self):
        book = Codebook.from_codewords(BINARY, [(1, 0, 1)])
        res = detect_coherent_ml([4, 0, 2], book, Csi(5, 1))
        assert res.best == (1, 0, 1)
        assert not res.tie_broken

    def test_score_equals_direct_log_likelihood(self):
        book = enumerate_full_scw(TERNARY, WeightVector((2, 2, 2)))
        rng = np.random.default_rng(1)
        csi = Csi(8.0, 2.0)
        for _ in range(20):
            r = transmit(book.codewords[rng.integers(book.size)], TERNARY, csi, rng)
            res = detect_coherent_ml(r, book, csi)
            assert res.score == pytest.approx(log_likelihood(r, res.best, TERNARY, csi))

    def test_full_scw_matches_sorting_detector(self):
        book = enumerate_full_scw(TERNARY, WeightVector((2, 3, 1)))
        rng = np.random.default_rng(2)
        for _ in range(100):
            csi = Csi(float(rng.uniform(0.5, 25)), float(rng.uniform(0.5, 6)))
            r = transmit(book.codewords[rng.integers(book.size)], TERNARY, csi, rng)
            sorting = detect_scw_csi_free(r, TERNARY, book.weights)
            coherent = detect_coherent_ml(r, book, csi)
            assert sorting.best in coherent.ties
            assert log_likelihood(r, sorting.best, TERNARY, csi) == pytest.approx(
                coherent.score, abs=1e-9
            )

    def test_zero_signal_ties_all_codewords(self):
        book = enumerate_full_scw(BINARY, WeightVector((2, 2)))
        res = detect_coherent_ml([3, 1, 4, 1], book, Csi(0.0, 2.0))
        assert len(res.ties) == book.size
        assert res.tie_broken


class TestNoncoherentMl:
    def test_point_mass_delegates_to_coherent(self):
        book = enumerate_full_scw(BINARY, WeightVector((3, 2)))
        rng = np.random.default_rng(4)
        csi = Csi(9.0, 3.0)
        r = transmit(book.codewords[5], BINARY, csi, rng)
        nc = detect_noncoherent_ml(r, book, DeterministicCsi(csi))
        co = detect_coherent_ml(r, book, csi)
        assert nc.best == co.best
        assert nc.score == pytest.approx(co.score)
        assert set(nc.ties) == set(co.ties)

    def test_full_scw_matches_sorting_under_mixture(self):
        book = enumerate_full_scw(TERNARY, WeightVector((2, 2, 2)))
        model = CsiMixture((Csi(3, 1), Csi(20, 5)), (0.3, 0.7))
        rng = np.random.default_rng(5)
        for _ in range(50):
            r = transmit(book.codewords[rng.integers(book.size)], TERNARY, Csi(10, 2), rng)
            nc = detect_noncoherent_ml(r, book, model)
            sorting = detect_scw_csi_free(r, TERNARY, book.weights, enumerate_ties=True, tie_cap=4096)
            assert nc.best in sorting.ties

    def test_two_point_mixture_matches_hand_computed_marginal(self):
        """Exact two-term mixture likelihood evaluated independently."""
        book = Codebook.from_codewords(BINARY, [(0, 1), (1, 0)])
        model = CsiMixture((Csi(2.0, 1.0), Csi(12.0, 0.5)), (0.25, 0.75))
        for r in ([0, 3], [4, 1], [2, 2], [7, 0]):
            marginals = []
            for cw in book.codewords:
                total = 0.0
                for csi, p in zip(model.components, model.probabilities):
                    total += p * math.exp(log_likelihood(r, cw, BINARY, csi))
                marginals.append(total)
            expected = book.codewords[int(np.argmax(marginals))]
            res = detect_noncoherent_ml(r, book, model)
            if not res.tie_broken:
                assert res.best == expected
            assert res.score == pytest.approx(math.log(max(marginals)), abs=1e-9)

    def test_random_model_requires_rng(self):
        from scwlink.channel import default_random_csi_model

        book = enumerate_full_scw(BINARY, WeightVector((1, 1)))
        with pytest.raises(DetectionError):
            detect_noncoherent_ml([1, 2], book, default_random_csi_model())


class TestSymbolwiseCoherent:
    def test_threshold_behavior(self):
        csi = Csi(10.0, 1.0)
        assert detect_symbolwise_coherent([0], BINARY, csi) == (0,)
        assert detect_symbolwise_coherent([20], BINARY, csi) == (1,)

    def test_zero_signal_gives_all_lowest(self):
        assert detect_symbolwise_coherent([4, 9, 0], BINARY, Csi(0.0, 3.0)) == (0, 0, 0)

    def test_equal_scores_choose_lowest_level(self):
        # with zero signal every level scores identically; the rule picks 0
        out = detect_symbolwise_coherent([5, 5], TERNARY, Csi(0.0, 2.0))
        assert out == (0, 0)

    def test_agrees_with_explicit_argmax(self):
        rng = np.random.default_rng(8)
        csi = Csi(6.0, 2.0)
        for _ in range(50):
            r = rng.integers(0, 25, 5)
            got = detect_symbolwise_coherent(r, TERNARY, csi)
            for k, rk in enumerate(r):
                scores = [
                    rk * math.log(lvl * csi.c_s + csi.c_n) - (lvl * csi.c_s + csi.c_n)
                    for lvl in TERNARY.levels
                ]
                assert scores[got[k]] == pytest.approx(max(scores))


class TestBatchLogLikelihoods:
    def test_matches_scalar_path(self):
        book = enumerate_full_scw(TERNARY, WeightVector((1, 2, 1)))
        rng = np.random.default_rng(6)
        rows = rng.integers(0, 14, size=(10, 4))
        cs = rng.uniform(1, 10, 10)
        cn = rng.uniform(0.5, 4, 10)
        scores = batch_log_likelihoods(rows, book, cs, cn)
        for n in range(10):
            for m, cw in enumerate(book.codewords):
                direct = log_likelihood(rows[n], cw, TERNARY, Csi(cs[n], cn[n]))
                assert scores[n, m] == pytest.approx(direct, abs=1e-9)
